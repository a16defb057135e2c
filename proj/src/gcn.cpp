#include "cgn/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cgn/error.hpp"
#include "cgn/random.hpp"

namespace cgn {

namespace {

std::string dims(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_shapes(const GcnParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& a) {
  if (params.bias.size() != params.weight.cols()) {
    throw Error(ErrorKind::Shape, "bias length " + std::to_string(params.bias.size()) + " does not match W " +
                                      dims(params.weight));
  }
  if (x.cols() != params.weight.rows()) {
    throw Error(ErrorKind::Shape, "features " + dims(x) + " incompatible with W " + dims(params.weight));
  }
  if (a.rows() != x.rows() || a.cols() != x.rows()) {
    throw Error(ErrorKind::Shape, "adjacency " + dims(a) + " incompatible with features " + dims(x));
  }
  if (x.rows() == 0) throw Error(ErrorKind::Shape, "graph has no nodes");
}

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-limit, limit);
  }
  return w;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

GcnParams init_params(std::size_t d_in, std::size_t d_out, std::uint64_t seed) {
  if (d_in == 0 || d_out == 0) throw Error(ErrorKind::Dimension, "GCN dimensions must be positive");
  Rng rng(seed);
  GcnParams p;
  p.weight = glorot(static_cast<Eigen::Index>(d_in), static_cast<Eigen::Index>(d_out), rng);
  p.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_out));
  return p;
}

ForwardResult forward(const GcnParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& a) {
  check_shapes(params, x, a);
  ForwardResult out;
  out.trace.linear = x * params.weight;
  out.trace.linear.rowwise() += params.bias.transpose();
  out.trace.aggregated = a * out.trace.linear;
  out.trace.activated = out.trace.aggregated.cwiseMax(0.0);
  out.embedding.node_count = static_cast<std::size_t>(x.rows());
  out.embedding.h = out.trace.activated.colwise().sum().transpose() / static_cast<double>(x.rows());
  return out;
}

Eigen::VectorXd embed_graph(const GcnParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& a) {
  return forward(params, x, a).embedding.h;
}

GcnGradients gradient(const GcnParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& a,
                      const Eigen::VectorXd& upstream) {
  check_shapes(params, x, a);
  if (upstream.size() != params.weight.cols()) {
    throw Error(ErrorKind::Shape, "upstream length " + std::to_string(upstream.size()) + " does not match d_out " +
                                      std::to_string(params.weight.cols()));
  }
  const auto n = x.rows();
  Eigen::MatrixXd linear = x * params.weight;
  linear.rowwise() += params.bias.transpose();
  const Eigen::MatrixXd aggregated = a * linear;

  // dL/dX''' is upstream / N on every row; mask by the ReLU derivative.
  Eigen::MatrixXd d_agg = upstream.transpose().replicate(n, 1) / static_cast<double>(n);
  d_agg = (aggregated.array() > 0.0).select(d_agg, 0.0);
  const Eigen::MatrixXd d_linear = a.transpose() * d_agg;

  GcnGradients g;
  g.d_weight = x.transpose() * d_linear;
  g.d_bias = d_linear.colwise().sum().transpose();
  g.d_input = d_linear * params.weight.transpose();
  return g;
}

GcnTrainResult train_gcn(const std::vector<GraphExample>& data, const GcnTrainConfig& config) {
  if (data.empty()) throw Error(ErrorKind::Training, "GCN training needs at least one example");
  if (!(config.learning_rate > 0.0 && config.learning_rate <= 1.0)) {
    throw Error(ErrorKind::Training, "GCN learning rate must lie in (0, 1]");
  }
  const auto d_in = static_cast<std::size_t>(data.front().features.cols());
  GcnTrainResult result;
  result.params = init_params(d_in, config.d_out, config.seed);
  if (config.mode == GcnMode::Fixed) return result;

  const auto classes = static_cast<Eigen::Index>(config.n_classes);
  for (const auto& ex : data) {
    if (ex.label < 0 || ex.label >= classes) {
      throw Error(ErrorKind::Training, "label " + std::to_string(ex.label) + " outside 0.." +
                                           std::to_string(classes - 1));
    }
    if (static_cast<std::size_t>(ex.features.cols()) != d_in) {
      throw Error(ErrorKind::Shape, "inconsistent feature width across GCN training examples");
    }
  }

  Rng head_rng(derive_seed(config.seed, 0x6865616425ULL));
  Eigen::MatrixXd head_w = glorot(static_cast<Eigen::Index>(config.d_out), classes, head_rng);
  Eigen::VectorXd head_b = Eigen::VectorXd::Zero(classes);
  auto& params = result.params;
  const double m = static_cast<double>(data.size());

  // Returns the objective at the current parameters and fills gradients
  // when requested.
  auto evaluate = [&](bool want_grad, Eigen::MatrixXd* gw, Eigen::VectorXd* gb, Eigen::MatrixXd* ghw,
                      Eigen::VectorXd* ghb, std::size_t* correct) {
    double loss = 0.0;
    if (want_grad) {
      gw->setZero(params.weight.rows(), params.weight.cols());
      gb->setZero(params.bias.size());
      ghw->setZero(head_w.rows(), head_w.cols());
      ghb->setZero(head_b.size());
    }
    for (const auto& ex : data) {
      const Eigen::VectorXd h = embed_graph(params, ex.features, ex.adjacency);
      const Eigen::VectorXd p = softmax(head_w.transpose() * h + head_b);
      loss -= std::log(std::max(p(ex.label), 1e-300));
      if (correct) {
        Eigen::Index arg = 0;
        p.maxCoeff(&arg);
        if (arg == ex.label) ++*correct;
      }
      if (!want_grad) continue;
      Eigen::VectorXd dz = p;
      dz(ex.label) -= 1.0;
      dz /= m;
      *ghw += h * dz.transpose();
      *ghb += dz;
      const auto g = gradient(params, ex.features, ex.adjacency, head_w * dz);
      *gw += g.d_weight;
      *gb += g.d_bias;
    }
    loss = loss / m + config.l2 * params.weight.squaredNorm();
    if (want_grad) *gw += 2.0 * config.l2 * params.weight;
    return loss;
  };

  Eigen::MatrixXd gw, ghw;
  Eigen::VectorXd gb, ghb;
  result.losses.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    result.losses.push_back(evaluate(true, &gw, &gb, &ghw, &ghb, nullptr));
    params.weight -= config.learning_rate * gw;
    params.bias -= config.learning_rate * gb;
    head_w -= config.learning_rate * ghw;
    head_b -= config.learning_rate * ghb;
  }
  std::size_t correct = 0;
  result.final_loss = evaluate(false, nullptr, nullptr, nullptr, nullptr, &correct);
  result.head_accuracy = static_cast<double>(correct) / m;
  return result;
}

}  // namespace cgn
