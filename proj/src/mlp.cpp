#include "cgn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cgn/error.hpp"
#include "cgn/random.hpp"

namespace cgn {

namespace {

void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

struct AdamSlot {
  Eigen::MatrixXd m_w, v_w;
  Eigen::VectorXd m_b, v_b;
};

}  // namespace

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.size() != l.weight.cols()) throw Error(ErrorKind::Shape, "layer bias does not match its weight");
    if (i > 0 && layers_[i - 1].weight.cols() != l.weight.rows()) {
      throw Error(ErrorKind::Shape, "layer " + std::to_string(i) + " input does not match previous output");
    }
  }
}

Mlp Mlp::create(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw Error(ErrorKind::Dimension, "an MLP needs input and output dimensions");
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(dims[i]);
    const auto out = static_cast<Eigen::Index>(dims[i + 1]);
    if (in == 0 || out == 0) throw Error(ErrorKind::Dimension, "MLP layer dimensions must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weight.resize(in, out);
    for (Eigen::Index r = 0; r < in; ++r) {
      for (Eigen::Index c = 0; c < out; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    layer.activation = (i + 2 == dims.size()) ? Activation::Softmax : Activation::Relu;
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::input_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.rows()); }
std::size_t Mlp::output_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.cols()); }

Eigen::MatrixXd Mlp::predict_proba(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != input_dim()) {
    throw Error(ErrorKind::Shape, "MLP expects " + std::to_string(input_dim()) + " inputs, got " +
                                      std::to_string(inputs.cols()));
  }
  Eigen::MatrixXd h = inputs;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = h * layer.weight;
    z.rowwise() += layer.bias.transpose();
    if (layer.activation == Activation::Relu) {
      h = z.cwiseMax(0.0);
    } else {
      softmax_rows(z);
      h = std::move(z);
    }
  }
  return h;
}

std::vector<double> train_mlp(Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                              const MlpTrainConfig& config) {
  const auto m = static_cast<std::size_t>(inputs.rows());
  if (m != labels.size()) throw Error(ErrorKind::Shape, "MLP inputs and labels differ in length");
  if (m == 0) throw Error(ErrorKind::DataSize, "MLP training needs data");
  if (config.batch_size == 0) throw Error(ErrorKind::Input, "batch size must be positive");
  auto& layers = net.layers();
  const auto classes = static_cast<int>(net.output_dim());
  for (int y : labels) {
    if (y < 0 || y >= classes) throw Error(ErrorKind::Input, "label outside the MLP output range");
  }

  std::vector<AdamSlot> slots(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    slots[i].m_w = Eigen::MatrixXd::Zero(layers[i].weight.rows(), layers[i].weight.cols());
    slots[i].v_w = slots[i].m_w;
    slots[i].m_b = Eigen::VectorXd::Zero(layers[i].bias.size());
    slots[i].v_b = slots[i].m_b;
  }

  Rng rng(config.seed);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> losses;
  losses.reserve(config.epochs);
  std::size_t step = 0;
  const auto& adam = config.adam;

  std::vector<Eigen::MatrixXd> acts(layers.size() + 1);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < m; start += config.batch_size) {
      const std::size_t b = std::min(config.batch_size, m - start);
      acts[0].resize(static_cast<Eigen::Index>(b), inputs.cols());
      for (std::size_t i = 0; i < b; ++i) acts[0].row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(order[start + i]));

      for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::MatrixXd z = acts[l] * layers[l].weight;
        z.rowwise() += layers[l].bias.transpose();
        if (layers[l].activation == Activation::Relu) {
          acts[l + 1] = z.cwiseMax(0.0);
        } else {
          softmax_rows(z);
          acts[l + 1] = std::move(z);
        }
      }

      Eigen::MatrixXd delta = acts.back();
      for (std::size_t i = 0; i < b; ++i) {
        const int y = labels[order[start + i]];
        const auto row = static_cast<Eigen::Index>(i);
        epoch_loss -= std::log(std::max(delta(row, y), 1e-300));
        delta(row, y) -= 1.0;
      }
      delta /= static_cast<double>(b);

      ++step;
      const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(step));
      for (std::size_t l = layers.size(); l-- > 0;) {
        const Eigen::MatrixXd gw = acts[l].transpose() * delta;
        const Eigen::VectorXd gb = delta.colwise().sum().transpose();
        if (l > 0) {
          Eigen::MatrixXd back = delta * layers[l].weight.transpose();
          delta = (acts[l].array() > 0.0).select(back, 0.0);
        }
        auto& s = slots[l];
        s.m_w = adam.beta1 * s.m_w + (1.0 - adam.beta1) * gw;
        s.v_w = adam.beta2 * s.v_w + (1.0 - adam.beta2) * gw.cwiseProduct(gw);
        s.m_b = adam.beta1 * s.m_b + (1.0 - adam.beta1) * gb;
        s.v_b = adam.beta2 * s.v_b + (1.0 - adam.beta2) * gb.cwiseProduct(gb);
        layers[l].weight.array() -=
            adam.learning_rate * (s.m_w.array() / c1) / ((s.v_w.array() / c2).sqrt() + adam.epsilon);
        layers[l].bias.array() -=
            adam.learning_rate * (s.m_b.array() / c1) / ((s.v_b.array() / c2).sqrt() + adam.epsilon);
      }
    }
    losses.push_back(epoch_loss / static_cast<double>(m));
  }
  return losses;
}

}  // namespace cgn
