#include "pipeline.hpp"

namespace aware {

Prompt make_prompt(const EmbeddingIndex& index, const Eigen::Ref<const Vector>& query_z, std::size_t k,
                   std::optional<std::size_t> exclude_row_id) {
  if (static_cast<std::size_t>(query_z.size()) != index.dim()) {
    fail(ErrorKind::data, "query dimension " + std::to_string(query_z.size()) + " does not match index dimension " +
                              std::to_string(index.dim()));
  }
  ContextSet ctx = retrieve_context(index, query_z, k, exclude_row_id);
  Prompt p;
  p.context = std::move(ctx.embeddings);
  p.context_labels = std::move(ctx.labels);
  p.context_row_ids = std::move(ctx.row_ids);
  p.query = query_z;
  p.query_row_id = exclude_row_id;
  return p;
}

static BackboneOutput run_backbone(const EmbeddingIndex& index, const Eigen::Ref<const Vector>& z,
                                   const AdapterParams* adapter, std::size_t k, const Backbone& backbone) {
  const Prompt prompt = make_prompt(index, z, k);
  if (adapter) return backbone.predict(apply_adapter(*adapter, prompt));
  return backbone.predict(prompt);
}

BackboneOutput predict_with_pipeline(const EncoderEnsemble& ensemble, const AdapterParams* adapter,
                                     const EmbeddingIndex& index, const Eigen::Ref<const Vector>& raw_x,
                                     std::size_t k, const Backbone& backbone) {
  if (raw_x.size() != ensemble.dims().input) {
    fail(ErrorKind::data, "query has " + std::to_string(raw_x.size()) + " features, encoder expects " +
                              std::to_string(ensemble.dims().input));
  }
  const Vector z = ensemble_embed_row(ensemble, raw_x);
  return run_backbone(index, z, adapter, k, backbone);
}

std::vector<BackboneOutput> predict_embedded(const EmbeddingIndex& index, const Matrix& queries,
                                             const AdapterParams* adapter, std::size_t k, const Backbone& backbone,
                                             unsigned jobs) {
  if (static_cast<std::size_t>(queries.cols()) != index.dim()) {
    fail(ErrorKind::data, "query dimension " + std::to_string(queries.cols()) + " does not match index dimension " +
                              std::to_string(index.dim()));
  }
  std::vector<BackboneOutput> out(static_cast<std::size_t>(queries.rows()));
  parallel_ranges(out.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = run_backbone(index, queries.row(static_cast<Eigen::Index>(i)).transpose(), adapter, k, backbone);
    }
  });
  return out;
}

std::vector<BackboneOutput> predict_rows(const EncoderEnsemble& ensemble, const AdapterParams* adapter,
                                         const EmbeddingIndex& index, const Matrix& raw_x, std::size_t k,
                                         const Backbone& backbone, unsigned jobs) {
  if (raw_x.cols() != ensemble.dims().input) {
    fail(ErrorKind::data, "queries have " + std::to_string(raw_x.cols()) + " features, encoder expects " +
                              std::to_string(ensemble.dims().input));
  }
  return predict_embedded(index, ensemble_embed(ensemble, raw_x), adapter, k, backbone, jobs);
}

}  // namespace aware
