#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>
#include <json.hpp>

#include "cgn/corpus.hpp"
#include "cgn/embedding.hpp"
#include "cgn/gcn.hpp"
#include "cgn/models.hpp"
#include "cgn/predictor.hpp"

namespace cgn {

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::Hash;
  std::size_t dim = kDefaultEmbedDim;
  std::uint64_t seed = 0;
  std::filesystem::path file;  // exchange file for kind == File
};

struct PipelineConfig {
  EmbedderConfig embed;
  GcnTrainConfig gcn;
  bool self_loops = false;
  ClassifierConfig classifier;
  std::uint64_t seed = 0;

  /// Copy with every component seed derived from `seed`.
  PipelineConfig with_seed(std::uint64_t seed) const;
};

nlohmann::ordered_json config_to_json(const PipelineConfig& config);

EmbeddingProvider make_provider(const EmbedderConfig& config);

// Fitted embedding -> line graph propagation -> classifier.
class Pipeline : public Predictor {
 public:
  Pipeline(PipelineConfig config, EmbeddingProvider provider, GcnParams gcn, Classifier classifier);

  const PipelineConfig& config() const noexcept { return config_; }
  const EmbeddingProvider& provider() const noexcept { return provider_; }
  const GcnParams& gcn() const noexcept { return gcn_; }
  const Classifier& classifier() const noexcept { return classifier_; }

  /// Final graph embedding of one sample.
  Eigen::VectorXd featurize(const Sample& sample) const;

  ClassProba predict_proba(const Sample& sample) const override;
  Prediction predict(const Sample& sample) const;

 private:
  PipelineConfig config_;
  EmbeddingProvider provider_;
  GcnParams gcn_;
  Classifier classifier_;
};

struct PipelineFit {
  Pipeline pipeline;
  TrainReport report;
  GcnTrainResult gcn;
};

/// Line features and adjacency for one sample.
GraphExample graph_example(const Sample& sample, const EmbeddingProvider& provider, bool self_loops);

PipelineFit train_pipeline(const Corpus& corpus, const PipelineConfig& config);

/// Model file: one JSON document bundling embedder, GCN and classifier.
nlohmann::ordered_json pipeline_to_json(const Pipeline& pipeline);
Pipeline pipeline_from_json(const nlohmann::ordered_json& doc);
void save_model(const std::filesystem::path& path, const Pipeline& pipeline);
Pipeline load_model(const std::filesystem::path& path);

}  // namespace cgn
