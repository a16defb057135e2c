#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace cgn {

// Single-round graph propagation over a snippet's line graph:
//   x'   = X W + b          (row-wise bias)
//   x''  = A x'
//   X''' = max(x'', 0)
//   h    = mean of the rows of X'''

struct GcnParams {
  Eigen::MatrixXd weight;  // d_in x d_out
  Eigen::VectorXd bias;    // d_out

  std::size_t d_in() const noexcept { return static_cast<std::size_t>(weight.rows()); }
  std::size_t d_out() const noexcept { return static_cast<std::size_t>(weight.cols()); }
};

struct PropagationTrace {
  Eigen::MatrixXd linear;      // x'
  Eigen::MatrixXd aggregated;  // x''
  Eigen::MatrixXd activated;   // X'''
};

struct FinalEmbedding {
  Eigen::VectorXd h;
  std::size_t node_count = 0;
};

struct ForwardResult {
  FinalEmbedding embedding;
  PropagationTrace trace;
};

struct GcnGradients {
  Eigen::MatrixXd d_weight;
  Eigen::VectorXd d_bias;
  Eigen::MatrixXd d_input;
};

/// Glorot-uniform weights, zero bias.
GcnParams init_params(std::size_t d_in, std::size_t d_out, std::uint64_t seed);

/// Throws Error(Shape) when X, A and the parameters disagree.
ForwardResult forward(const GcnParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& a);

/// Convenience: forward(...).embedding.h
Eigen::VectorXd embed_graph(const GcnParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& a);

/// Gradients of <h_final, upstream> w.r.t. W, b and X. The ReLU
/// subgradient at zero is taken as 0.
GcnGradients gradient(const GcnParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& a,
                      const Eigen::VectorXd& upstream);

enum class GcnMode { Fixed, Trained };

struct GcnTrainConfig {
  GcnMode mode = GcnMode::Trained;
  std::size_t d_out = 128;
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  std::size_t n_classes = 5;
};

struct GraphExample {
  Eigen::MatrixXd features;   // n x d_in
  Eigen::MatrixXd adjacency;  // n x n
  int label = 0;
};

struct GcnTrainResult {
  GcnParams params;
  std::vector<double> losses;  // objective before each update, one per epoch
  double final_loss = 0.0;     // objective after the last update
  double head_accuracy = 0.0;  // accuracy of the throwaway softmax head
};

/// Fixed mode returns init_params unchanged. Trained mode fits W, b jointly
/// with a temporary linear softmax head by full-batch gradient descent on
/// mean cross-entropy + l2 * ||W||^2, then discards the head.
GcnTrainResult train_gcn(const std::vector<GraphExample>& data, const GcnTrainConfig& config);

}  // namespace cgn
