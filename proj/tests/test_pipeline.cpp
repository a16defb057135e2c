#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cgn/error.hpp"
#include "cgn/linegraph.hpp"
#include "cgn/metrics.hpp"
#include "cgn/pipeline.hpp"
#include "support.hpp"

using namespace cgn;
using namespace cgn::testing;

namespace {

PipelineConfig small_config(ModelKind kind = ModelKind::DeepTree, std::uint64_t seed = 42) {
  PipelineConfig cfg;
  cfg.embed.dim = 64;
  cfg.gcn.d_out = 32;
  cfg.gcn.epochs = 15;
  cfg.classifier.kind = kind;
  cfg.classifier.deeptree.epochs = 30;
  cfg.classifier.sgd.epochs = 20;
  return cfg.with_seed(seed);
}

const Corpus& mini() {
  static const Corpus c = load_corpus(data_dir() / "mini_corpus.csv");
  return c;
}

std::filesystem::path temp_path(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("bundled mini corpus is balanced") {
  CHECK(mini().size() == 125);
  CHECK(mini().class_counts() == ClassCounts{25, 25, 25, 25, 25});
}

TEST_CASE("with_seed derives every component seed") {
  const auto a = PipelineConfig{}.with_seed(1), b = PipelineConfig{}.with_seed(2);
  CHECK(a.seed == 1);
  CHECK(a.embed.seed != b.embed.seed);
  CHECK(a.gcn.seed != b.gcn.seed);
  CHECK(a.classifier.deeptree.seed != b.classifier.deeptree.seed);
  CHECK(a.classifier.sgd.seed != b.classifier.sgd.seed);
  CHECK(config_to_json(a)["seed"] == 1);
}

TEST_CASE("graph_example shapes follow the line count") {
  const auto provider = EmbeddingProvider::hash(16, 0);
  const auto& s = mini()[0];
  const auto g = graph_example(s, provider, false);
  const auto n = static_cast<Eigen::Index>(split_lines(s.code).size());
  CHECK(g.features.rows() == n);
  CHECK(g.features.cols() == 16);
  CHECK(g.adjacency == adjacency(build_line_graph(static_cast<std::size_t>(n))));
  CHECK(graph_example(s, provider, true).adjacency.diagonal().isOnes(0.0));
  CHECK(g.label == code_of(s.label));
}

TEST_CASE("training on the mini corpus fits it and round-trips through a model file") {
  const auto fit = train_pipeline(mini(), small_config());
  CHECK(fit.report.losses.size() == 30);
  CHECK(fit.report.train_accuracy >= 0.9);
  CHECK(fit.gcn.losses.size() == 15);
  CHECK(fit.gcn.final_loss < fit.gcn.losses.front());

  const auto path = temp_path("cgn_pipeline_roundtrip.json");
  save_model(path, fit.pipeline);
  const auto loaded = load_model(path);
  std::filesystem::remove(path);
  CHECK(pipeline_to_json(loaded).dump() == pipeline_to_json(fit.pipeline).dump());
  for (const auto& s : mini().samples()) CHECK(loaded.predict_proba(s) == fit.pipeline.predict_proba(s));

  const auto doc = pipeline_to_json(fit.pipeline);
  CHECK(doc["format"] == "cgn-model");
  CHECK(doc["version"] == 1);
  CHECK(doc["classes"].size() == 5);
  CHECK(doc.contains("mlp"));
  CHECK(doc["gcn"]["d_in"] == 64);
}

TEST_CASE("training is reproducible for a seed") {
  const auto a = train_pipeline(mini(), small_config(ModelKind::Tree, 5));
  const auto b = train_pipeline(mini(), small_config(ModelKind::Tree, 5));
  CHECK(pipeline_to_json(a.pipeline).dump() == pipeline_to_json(b.pipeline).dump());
  const auto c = train_pipeline(mini(), small_config(ModelKind::Tree, 6));
  CHECK(pipeline_to_json(a.pipeline).dump() != pipeline_to_json(c.pipeline).dump());
}

TEST_CASE("tree and sgd pipelines") {
  const auto tree = train_pipeline(mini(), small_config(ModelKind::Tree));
  const auto doc = pipeline_to_json(tree.pipeline);
  CHECK_FALSE(doc.contains("mlp"));
  CHECK(doc.contains("tree"));
  CHECK(doc["model"] == "tree");

  const auto sgd = train_pipeline(mini(), small_config(ModelKind::Sgd));
  CHECK(pipeline_to_json(sgd.pipeline).contains("linear"));
  const auto loaded = pipeline_from_json(nlohmann::ordered_json::parse(pipeline_to_json(sgd.pipeline).dump()));
  for (const auto& s : mini().samples()) CHECK(loaded.predict_proba(s) == sgd.pipeline.predict_proba(s));
}

TEST_CASE("pipelines built on an exchange file") {
  // Write line vectors for every sample, then train from the file.
  const auto hash = EmbeddingProvider::hash(24, 3);
  EmbeddingProvider::Records recs;
  for (const auto& s : mini().samples()) recs.emplace(s.id, line_embeddings(s, hash));
  const auto path = temp_path("cgn_pipeline_embed.jsonl");
  std::ofstream(path, std::ios::binary) << format_precomputed(24, recs);

  auto cfg = small_config(ModelKind::Tree);
  cfg.embed.kind = EmbedderKind::File;
  cfg.embed.file = path;
  cfg.embed.dim = 24;
  const auto fit = train_pipeline(mini(), cfg);
  const auto& s = mini()[3];
  CHECK(fit.pipeline.featurize(s) == fit.pipeline.featurize(Sample{s.id, s.code, s.label}));
  const auto reloaded = pipeline_from_json(pipeline_to_json(fit.pipeline));
  CHECK(reloaded.predict_proba(s) == fit.pipeline.predict_proba(s));

  // A masked variant resolves to the same record.
  LineMask mask(split_lines(s.code).size(), 1);
  mask[1] = 0;
  CHECK_NOTHROW(fit.pipeline.predict_proba(apply_mask(s, mask)));
  try {
    fit.pipeline.predict_proba(Sample{"unknown", "x;", CweClass::Other});
    FAIL("expected Lookup");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Lookup);
  }

  cfg.embed.dim = 25;
  CHECK_THROWS_AS(train_pipeline(mini(), cfg), Error);
  std::filesystem::remove(path);
}

TEST_CASE("model files: mismatched dimensions and malformed input") {
  const auto fit = train_pipeline(mini(), small_config(ModelKind::Tree));
  CHECK_THROWS_AS(Pipeline(fit.pipeline.config(), EmbeddingProvider::hash(32, 0), fit.pipeline.gcn(),
                           fit.pipeline.classifier()),
                  Error);
  const auto path = temp_path("cgn_bad_model.json");
  std::ofstream(path) << "{\"format\": \"something-else\"}";
  CHECK_THROWS_AS(load_model(path), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), Error);
}

TEST_CASE("pipeline evaluation covers every sample") {
  const auto fit = train_pipeline(mini(), small_config(ModelKind::Tree));
  const auto report = evaluate(fit.pipeline, mini());
  CHECK(report.samples == 125);
  for (std::size_t k = 0; k < 5; ++k) CHECK(report.per_class[k].tp + report.per_class[k].fn == 25);
}
