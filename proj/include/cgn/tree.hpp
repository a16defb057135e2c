#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cgn/cwe.hpp"

namespace cgn {

using ClassProba = std::array<double, kNumClasses>;
using ClassTally = std::array<std::size_t, kNumClasses>;

struct TreeConfig {
  std::size_t max_depth = 12;
  std::size_t min_samples_leaf = 2;
  std::uint64_t seed = 0;  // recorded only; CART here is fully deterministic
};

// Internal nodes send x[feature] <= threshold to the left child. Every node
// keeps its class tally; only leaves are consulted at prediction time.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  ClassTally tally{};
  ClassProba proba{};

  bool is_leaf() const noexcept { return feature < 0; }
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t n_features = 0;
  TreeConfig config;

  std::size_t depth() const;
  std::size_t leaf_count() const;
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

/// 1 - sum p_k^2 over a class tally; 0 for an empty tally.
double gini(const ClassTally& tally) noexcept;

/// Best Gini split over rows `rows` of X. Candidates are midpoints between
/// consecutive distinct values; both sides must hold at least
/// min_samples_leaf rows, the node must be impure and the gain must be
/// non-negative. Ties go to the lowest feature index, then the lowest
/// threshold. Candidate scores are compared in exact integer arithmetic.
std::optional<SplitCandidate> best_split(const Eigen::MatrixXd& x, std::span<const int> y,
                                         std::span<const std::size_t> rows, std::size_t min_samples_leaf);

/// CART classifier with Gini impurity; leaves hold raw class frequencies.
TreeModel fit_tree(const Eigen::MatrixXd& x, std::span<const int> y, const TreeConfig& config = {});

ClassProba tree_predict_proba(const TreeModel& tree, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Index of the largest probability, lowest index on ties.
int argmax(const ClassProba& p) noexcept;

void check_labels(std::span<const int> y);

}  // namespace cgn
