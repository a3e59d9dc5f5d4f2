#include "dataset.hpp"
#include "serialization.hpp"
#include "training.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <filesystem>

using namespace aware;

namespace {

EncoderModel small_model() {
  SyntheticSpec spec;
  spec.n_rows = 200;
  spec.n_informative = 2;
  spec.n_noise = 3;
  auto raw = make_synthetic(spec).data;
  const auto rows = all_rows(raw);
  const auto processed = preprocess(filter_features(raw, rows), rows);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.embed_dim = 4;
  EncoderModel m;
  m.ensemble = train_ensemble(processed, rows, cfg, 2);
  m.config = cfg;
  m.transform = make_transform(raw, processed);
  m.task = raw.task;
  m.label_column = raw.label_name;
  return m;
}

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

}  // namespace

TEST(EncoderModelJson, RoundTripIsExact) {
  const EncoderModel m = small_model();
  const std::string text = encoder_model_to_json(m);
  const EncoderModel back = encoder_model_from_json(text);
  ASSERT_EQ(back.ensemble.size(), m.ensemble.size());
  for (std::size_t k = 0; k < m.ensemble.size(); ++k) EXPECT_TRUE(back.ensemble.members[k] == m.ensemble.members[k]);
  EXPECT_EQ(back.ensemble.fold_of, m.ensemble.fold_of);
  EXPECT_EQ(back.transform.kept, m.transform.kept);
  EXPECT_EQ(back.transform.input_columns, m.transform.input_columns);
  EXPECT_EQ(encoder_model_to_json(back), text);
}

TEST(IndexJson, RoundTripIsExact) {
  Matrix v(3, 2);
  v << 0.1, 1.0 / 3.0, -2.5, 1e-300, 7, 8;
  const auto ix = build_index(v, {0, 1, 0}, {4, 9, 2}, DistanceKind::cosine);
  const auto back = index_from_json(index_to_json(ix));
  EXPECT_EQ(back.vectors(), ix.vectors());
  EXPECT_EQ(back.labels(), ix.labels());
  EXPECT_EQ(back.row_ids(), ix.row_ids());
  EXPECT_EQ(back.distance_kind(), DistanceKind::cosine);
}

TEST(AdapterJson, RoundTripIsExact) {
  AdapterParams a = AdapterParams::identity(3);
  a.weight(0, 1) = 0.1 + 0.2;
  a.bias(2) = -1.0 / 7.0;
  EXPECT_TRUE(adapter_from_json(adapter_to_json(a)) == a);
}

TEST(TrainConfigJson, RoundTrip) {
  TrainConfig c;
  c.epochs = 7;
  c.distance = DistanceKind::cosine;
  c.sampling = Sampling::uniform;
  c.learning_rate = 3e-4;
  EXPECT_EQ(train_config_to_json(train_config_from_json(train_config_to_json(c))), train_config_to_json(c));
}

TEST(Json, WrongKindOrVersionIsRejected) {
  const EncoderModel m = small_model();
  EXPECT_EQ(kind_of([&] { index_from_json(encoder_model_to_json(m)); }), ErrorKind::data);
  nlohmann::json doc = nlohmann::json::parse(adapter_to_json(AdapterParams::identity(2)));
  doc["format_version"] = 99;
  const std::string text = doc.dump();
  EXPECT_EQ(kind_of([&] { adapter_from_json(text); }), ErrorKind::config);
  EXPECT_EQ(kind_of([&] { adapter_from_json("{"); }), ErrorKind::data);
}

TEST(LossTrace, CsvHeaderAndRows) {
  const std::string csv = loss_trace_csv({{1, 0.5, 0.0}, {2, 0.25, 0.125}});
  EXPECT_EQ(csv, "epoch,mean_loss,skipped_anchor_fraction\n1,0.5,0\n2,0.25,0.125\n");
}

TEST(Files, MissingFileIsIoErrorNamingPath) {
  try {
    read_text_file("/nonexistent/aware/file.json");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/aware/file.json"), std::string::npos);
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(format_double(std::nan("")), "NA");
  EXPECT_EQ(std::stod(format_double(1e-300)), 1e-300);
}
