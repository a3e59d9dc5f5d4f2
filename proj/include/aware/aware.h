#ifndef AWARE_AWARE_H
#define AWARE_AWARE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(AWARE_BUILDING_LIBRARY)
#define AWARE_API __attribute__((visibility("default")))
#else
#define AWARE_API
#endif

typedef enum aware_status {
  AWARE_OK = 0,
  AWARE_ERR_INVALID_ARGUMENT = 1,
  AWARE_ERR_CONFIG = 2,
  AWARE_ERR_DATA = 3,
  AWARE_ERR_PARTIAL = 4,
  AWARE_ERR_INTERNAL = 5,
  AWARE_ERR_IO = 6,
  AWARE_ERR_NUMERIC = 7,
  AWARE_ERR_BACKBONE = 8
} aware_status;

typedef struct aware_dataset aware_dataset;
typedef struct aware_model aware_model;
typedef struct aware_index aware_index;
typedef struct aware_adapter aware_adapter;

typedef struct aware_synthetic_spec {
  size_t n_rows;
  size_t n_informative;
  size_t n_noise;
  int n_classes;
  double class_sep;
  double imbalance_ratio;
  uint64_t seed;
} aware_synthetic_spec;

typedef struct aware_train_options {
  int epochs;
  double learning_rate;
  size_t batch_size;
  double temperature;
  int cosine_distance;   /* 0: squared euclidean, 1: cosine */
  double weight_decay;
  int uniform_sampling;  /* 0: class-balanced batches, 1: uniform */
  int ensemble_k;
  int gate_hidden;
  int embed_hidden;
  int embed_dim;
  double valid_fraction; /* held out for the reported Precision@k */
  size_t max_features;
  size_t precision_k;
  uint64_t seed;
} aware_train_options;

typedef struct aware_adapter_options {
  int epochs;
  double learning_rate;
  double weight_decay;
  size_t context_size;
  size_t prompts_per_epoch; /* 0: one per indexed row */
  size_t retrieval_threshold;
  uint64_t seed;
} aware_adapter_options;

/* Library and error reporting. The last error is per thread. */
AWARE_API const char* aware_version(void);
AWARE_API const char* aware_last_error(void);
AWARE_API const char* aware_status_name(aware_status status);
AWARE_API void aware_string_free(char* text);

/* Datasets */
AWARE_API aware_status aware_dataset_load_csv(const char* csv_path, const char* manifest_path, int require_label,
                                              aware_dataset** out);
AWARE_API aware_status aware_dataset_synthesize(const aware_synthetic_spec* spec, aware_dataset** out);
AWARE_API aware_status aware_dataset_save_csv(const aware_dataset* dataset, const char* path);
AWARE_API aware_status aware_dataset_shape(const aware_dataset* dataset, size_t* rows, size_t* cols);
/* JSON: manifest plus informative columns for synthetic data. */
AWARE_API aware_status aware_dataset_manifest_json(const aware_dataset* dataset, char** out_json);
AWARE_API aware_status aware_dataset_info_json(const aware_dataset* dataset, char** out_json);
/* Filters and preprocesses with statistics from a stratified train split of
   train_fraction (1 = all rows). out_split_json receives the split, may be NULL. */
AWARE_API aware_status aware_dataset_preprocess(const aware_dataset* raw, double train_fraction, size_t max_features,
                                                uint64_t seed, aware_dataset** out, char** out_split_json);
AWARE_API void aware_dataset_free(aware_dataset* dataset);

/* Encoder ensembles */
AWARE_API void aware_train_options_default(aware_train_options* options);
AWARE_API aware_status aware_model_train(const aware_dataset* raw, const aware_train_options* options,
                                         aware_model** out, char** out_report_json);
AWARE_API aware_status aware_model_save(const aware_model* model, const char* path);
AWARE_API aware_status aware_model_load(const char* path, aware_model** out);
AWARE_API aware_status aware_model_trace_csv(const aware_model* model, char** out_csv);
AWARE_API aware_status aware_model_info_json(const aware_model* model, char** out_json);
/* Row-major embeddings of the preprocessed rows; pass out = NULL to query the shape. */
AWARE_API aware_status aware_model_embed(const aware_model* model, const aware_dataset* raw, double* out,
                                         size_t capacity, size_t* rows, size_t* cols);
/* Mean attention weight per kept feature over the rows of raw, as JSON. */
AWARE_API aware_status aware_model_attention_json(const aware_model* model, const aware_dataset* raw,
                                                  char** out_json);
AWARE_API void aware_model_free(aware_model* model);

/* Retrieval indices */
AWARE_API aware_status aware_index_build(const aware_model* model, const aware_dataset* raw, aware_index** out);
AWARE_API aware_status aware_index_save(const aware_index* index, const char* path);
AWARE_API aware_status aware_index_load(const char* path, aware_index** out);
AWARE_API aware_status aware_index_shape(const aware_index* index, size_t* rows, size_t* dim);
AWARE_API void aware_index_free(aware_index* index);

/* Adapters */
AWARE_API void aware_adapter_options_default(aware_adapter_options* options);
AWARE_API aware_status aware_adapter_identity(size_t dim, aware_adapter** out);
AWARE_API aware_status aware_adapter_train(const aware_index* index, int n_classes, const aware_adapter_options* options,
                                           aware_adapter** out, char** out_trace_csv);
AWARE_API aware_status aware_adapter_save(const aware_adapter* adapter, const char* path);
AWARE_API aware_status aware_adapter_load(const char* path, aware_adapter** out);
AWARE_API void aware_adapter_free(aware_adapter* adapter);

/* Prediction. adapter may be NULL; backbone is "knn_vote" or
   "subprocess:<command>". Output CSV: row_id,p_0..p_{C-1} (or row_id,prediction). */
AWARE_API aware_status aware_predict_csv(const aware_model* model, const aware_index* index,
                                         const aware_adapter* adapter, const aware_dataset* queries, size_t k,
                                         const char* backbone, unsigned jobs, char** out_csv);

/* Stress harness. Returns AWARE_ERR_PARTIAL when some jobs failed; the report
   is written either way. */
AWARE_API aware_status aware_stress_default_config(const char* protocol, char** out_json);
AWARE_API aware_status aware_stress_run(const char* config_json, const char* output_dir, int force,
                                        char** out_summary);

/* Describes a model, index, adapter or report directory as JSON. */
AWARE_API aware_status aware_inspect(const char* path, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
