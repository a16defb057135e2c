#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cgn {

enum class Activation { Relu, Softmax };

struct DenseLayer {
  Eigen::MatrixXd weight;  // in x out
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::Relu;
};

// Feed-forward network: ReLU hidden layers and a softmax output layer.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// dims = {input, hidden..., output}; Glorot-uniform weights, zero biases.
  static Mlp create(const std::vector<std::size_t>& dims, std::uint64_t seed);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  std::size_t input_dim() const;
  std::size_t output_dim() const;

  /// Row-wise class probabilities for a batch (rows are inputs).
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& inputs) const;

 private:
  std::vector<DenseLayer> layers_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct MlpTrainConfig {
  AdamConfig adam;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

/// Mini-batch Adam on sparse categorical cross-entropy. Returns the mean
/// per-sample loss of each epoch (computed on the fly over its batches).
std::vector<double> train_mlp(Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                              const MlpTrainConfig& config);

}  // namespace cgn
