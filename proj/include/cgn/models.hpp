#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cgn/mlp.hpp"
#include "cgn/tree.hpp"

namespace cgn {

struct TrainReport {
  std::vector<double> losses;  // one entry per epoch
  double train_accuracy = 0.0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
};

struct Prediction {
  int label = 0;
  ClassProba proba{};
};

// ---------------------------------------------------------------------------
// DeepTree: a CART tree whose leaf class-probabilities feed a small MLP.

struct DeepTreeConfig {
  TreeConfig tree;
  std::vector<std::size_t> hidden = {64, 32};
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct DeepTreeModel {
  TreeModel tree;
  Mlp mlp;
};

inline constexpr std::size_t kMinDeepTreeSamples = 10;

std::pair<DeepTreeModel, TrainReport> fit_deeptree(const Eigen::MatrixXd& x, std::span<const int> y,
                                                   const DeepTreeConfig& config = {});

Prediction deeptree_predict(const DeepTreeModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// ---------------------------------------------------------------------------
// Softmax regression trained by per-sample SGD.

struct SgdConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
};

struct LinearModel {
  Eigen::MatrixXd weight;  // d x 5
  Eigen::VectorXd bias;    // 5
};

/// Parameters start at zero; zero epochs returns that initialization.
std::pair<LinearModel, TrainReport> fit_sgd_baseline(const Eigen::MatrixXd& x, std::span<const int> y,
                                                     const SgdConfig& config = {});

ClassProba linear_predict_proba(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// ---------------------------------------------------------------------------

enum class ModelKind { DeepTree, Tree, Sgd };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);

// Any of the fitted classifiers behind one prediction call.
class Classifier {
 public:
  using Variant = std::variant<DeepTreeModel, TreeModel, LinearModel>;

  Classifier() = default;
  explicit Classifier(Variant model) : model_(std::move(model)) {}

  ModelKind kind() const noexcept;
  const Variant& model() const noexcept { return model_; }

  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Variant model_;
};

struct ClassifierConfig {
  ModelKind kind = ModelKind::DeepTree;
  TreeConfig tree;
  DeepTreeConfig deeptree;
  SgdConfig sgd;
};

std::pair<Classifier, TrainReport> fit_classifier(const Eigen::MatrixXd& x, std::span<const int> y,
                                                  const ClassifierConfig& config);

// JSON persistence with round-trip exact doubles.
nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json tree_to_json(const TreeModel& tree);
TreeModel tree_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json mlp_to_json(const Mlp& mlp);
Mlp mlp_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json linear_to_json(const LinearModel& model);
LinearModel linear_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json report_to_json(const TrainReport& report);

}  // namespace cgn
