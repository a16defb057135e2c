#include "cgn/models.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "cgn/error.hpp"
#include "cgn/random.hpp"

namespace cgn {

using ojson = nlohmann::ordered_json;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void check_xy(const Eigen::MatrixXd& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorKind::Shape, "X has " + std::to_string(x.rows()) + " rows but y has " +
                                      std::to_string(y.size()) + " labels");
  }
  check_labels(y);
}

template <typename Predict>
double accuracy_of(const Eigen::MatrixXd& x, std::span<const int> y, Predict&& predict) {
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (argmax(predict(x.row(i).transpose())) == y[static_cast<std::size_t>(i)]) ++correct;
  }
  return x.rows() ? static_cast<double>(correct) / static_cast<double>(x.rows()) : 0.0;
}

ClassProba to_proba(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  ClassProba p{};
  for (std::size_t k = 0; k < kNumClasses; ++k) p[k] = row(static_cast<Eigen::Index>(k));
  return p;
}

}  // namespace

std::pair<DeepTreeModel, TrainReport> fit_deeptree(const Eigen::MatrixXd& x, std::span<const int> y,
                                                   const DeepTreeConfig& config) {
  check_xy(x, y);
  if (y.size() < kMinDeepTreeSamples) {
    throw Error(ErrorKind::DataSize, "DeepTree needs at least " + std::to_string(kMinDeepTreeSamples) +
                                         " samples, got " + std::to_string(y.size()));
  }
  Stopwatch clock;
  DeepTreeModel model;
  model.tree = fit_tree(x, y, config.tree);

  Eigen::MatrixXd transformed(x.rows(), static_cast<Eigen::Index>(kNumClasses));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto p = tree_predict_proba(model.tree, x.row(i).transpose());
    for (std::size_t k = 0; k < kNumClasses; ++k) transformed(i, static_cast<Eigen::Index>(k)) = p[k];
  }

  std::vector<std::size_t> dims = {kNumClasses};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(kNumClasses);
  model.mlp = Mlp::create(dims, derive_seed(config.seed, 1));

  MlpTrainConfig train;
  train.adam.learning_rate = config.learning_rate;
  train.epochs = config.epochs;
  train.batch_size = config.batch_size;
  train.seed = derive_seed(config.seed, 2);

  TrainReport report;
  report.losses = train_mlp(model.mlp, transformed, y, train);
  report.seed = config.seed;
  report.train_accuracy =
      accuracy_of(x, y, [&](const Eigen::VectorXd& row) { return deeptree_predict(model, row).proba; });
  report.seconds = clock.seconds();
  return {std::move(model), std::move(report)};
}

Prediction deeptree_predict(const DeepTreeModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto leaf = tree_predict_proba(model.tree, x);
  Eigen::RowVectorXd input(static_cast<Eigen::Index>(kNumClasses));
  for (std::size_t k = 0; k < kNumClasses; ++k) input(static_cast<Eigen::Index>(k)) = leaf[k];
  const Eigen::MatrixXd out = model.mlp.predict_proba(input);
  Prediction p;
  p.proba = to_proba(out.row(0));
  p.label = argmax(p.proba);
  return p;
}

std::pair<LinearModel, TrainReport> fit_sgd_baseline(const Eigen::MatrixXd& x, std::span<const int> y,
                                                     const SgdConfig& config) {
  check_xy(x, y);
  if (y.size() < 2) throw Error(ErrorKind::DataSize, "SGD baseline needs at least 2 samples");
  Stopwatch clock;
  const auto classes = static_cast<Eigen::Index>(kNumClasses);
  LinearModel model;
  model.weight = Eigen::MatrixXd::Zero(x.cols(), classes);
  model.bias = Eigen::VectorXd::Zero(classes);

  TrainReport report;
  report.seed = config.seed;
  Rng rng(config.seed);
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss = 0.0;
    for (auto i : order) {
      const auto row = static_cast<Eigen::Index>(i);
      Eigen::VectorXd z = model.weight.transpose() * x.row(row).transpose() + model.bias;
      z.array() -= z.maxCoeff();
      Eigen::VectorXd p = z.array().exp();
      p /= p.sum();
      loss -= std::log(std::max(p(y[i]), 1e-300));
      p(y[i]) -= 1.0;
      model.weight -= config.learning_rate * x.row(row).transpose() * p.transpose();
      model.bias -= config.learning_rate * p;
    }
    report.losses.push_back(loss / static_cast<double>(y.size()));
  }
  report.train_accuracy =
      accuracy_of(x, y, [&](const Eigen::VectorXd& row) { return linear_predict_proba(model, row); });
  report.seconds = clock.seconds();
  return {std::move(model), std::move(report)};
}

ClassProba linear_predict_proba(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.weight.rows()) {
    throw Error(ErrorKind::Shape, "linear model expects " + std::to_string(model.weight.rows()) +
                                      " features, got " + std::to_string(x.size()));
  }
  Eigen::VectorXd z = model.weight.transpose() * x + model.bias;
  z.array() -= z.maxCoeff();
  Eigen::VectorXd e = z.array().exp();
  e /= e.sum();
  ClassProba p{};
  for (std::size_t k = 0; k < kNumClasses; ++k) p[k] = e(static_cast<Eigen::Index>(k));
  return p;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::DeepTree: return "deeptree";
    case ModelKind::Tree: return "tree";
    case ModelKind::Sgd: return "sgd";
  }
  return "deeptree";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "deeptree") return ModelKind::DeepTree;
  if (text == "tree") return ModelKind::Tree;
  if (text == "sgd") return ModelKind::Sgd;
  throw Error(ErrorKind::Usage, "unknown model kind '" + std::string(text) + "'");
}

ModelKind Classifier::kind() const noexcept {
  switch (model_.index()) {
    case 0: return ModelKind::DeepTree;
    case 1: return ModelKind::Tree;
    default: return ModelKind::Sgd;
  }
}

Prediction Classifier::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (const auto* dt = std::get_if<DeepTreeModel>(&model_)) return deeptree_predict(*dt, x);
  Prediction p;
  if (const auto* tree = std::get_if<TreeModel>(&model_)) {
    p.proba = tree_predict_proba(*tree, x);
  } else {
    p.proba = linear_predict_proba(std::get<LinearModel>(model_), x);
  }
  p.label = argmax(p.proba);
  return p;
}

std::pair<Classifier, TrainReport> fit_classifier(const Eigen::MatrixXd& x, std::span<const int> y,
                                                  const ClassifierConfig& config) {
  switch (config.kind) {
    case ModelKind::DeepTree: {
      auto [model, report] = fit_deeptree(x, y, config.deeptree);
      return {Classifier(std::move(model)), std::move(report)};
    }
    case ModelKind::Tree: {
      Stopwatch clock;
      auto tree = fit_tree(x, y, config.tree);
      TrainReport report;
      report.seed = config.tree.seed;
      report.train_accuracy =
          accuracy_of(x, y, [&](const Eigen::VectorXd& row) { return tree_predict_proba(tree, row); });
      report.seconds = clock.seconds();
      return {Classifier(std::move(tree)), std::move(report)};
    }
    case ModelKind::Sgd: {
      auto [model, report] = fit_sgd_baseline(x, y, config.sgd);
      return {Classifier(std::move(model)), std::move(report)};
    }
  }
  throw Error(ErrorKind::Usage, "unknown model kind");
}

// ---------------------------------------------------------------------------
// JSON

ojson matrix_to_json(const Eigen::MatrixXd& m) {
  ojson rows = ojson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ojson row = ojson::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return ojson{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const ojson& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw Error(ErrorKind::Parse, "matrix row count mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = data[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorKind::Parse, "matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

ojson vector_to_json(const Eigen::VectorXd& v) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const ojson& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

ojson tree_to_json(const TreeModel& tree) {
  ojson nodes = ojson::array();
  for (const auto& n : tree.nodes) {
    ojson node;
    if (!n.is_leaf()) {
      node["feature"] = n.feature;
      node["threshold"] = n.threshold;
      node["left"] = n.left;
      node["right"] = n.right;
    }
    node["tally"] = n.tally;
    node["proba"] = n.proba;
    nodes.push_back(std::move(node));
  }
  return ojson{{"n_features", tree.n_features},
               {"max_depth", tree.config.max_depth},
               {"min_samples_leaf", tree.config.min_samples_leaf},
               {"seed", tree.config.seed},
               {"nodes", std::move(nodes)}};
}

TreeModel tree_from_json(const ojson& j) {
  TreeModel tree;
  tree.n_features = j.at("n_features").get<std::size_t>();
  tree.config.max_depth = j.at("max_depth").get<std::size_t>();
  tree.config.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  tree.config.seed = j.at("seed").get<std::uint64_t>();
  const auto& nodes = j.at("nodes");
  for (const auto& node : nodes) {
    TreeNode n;
    if (node.contains("feature")) {
      n.feature = node.at("feature").get<int>();
      n.threshold = node.at("threshold").get<double>();
      n.left = node.at("left").get<int>();
      n.right = node.at("right").get<int>();
      const auto count = static_cast<int>(nodes.size());
      if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= tree.n_features || n.left <= 0 ||
          n.right <= 0 || n.left >= count || n.right >= count) {
        throw Error(ErrorKind::Parse, "tree node references are out of range");
      }
    }
    n.tally = node.at("tally").get<ClassTally>();
    n.proba = node.at("proba").get<ClassProba>();
    tree.nodes.push_back(n);
  }
  if (tree.nodes.empty()) throw Error(ErrorKind::Parse, "tree without nodes");
  return tree;
}

ojson mlp_to_json(const Mlp& mlp) {
  ojson layers = ojson::array();
  for (const auto& l : mlp.layers()) {
    layers.push_back(ojson{{"activation", l.activation == Activation::Relu ? "relu" : "softmax"},
                           {"weight", matrix_to_json(l.weight)},
                           {"bias", vector_to_json(l.bias)}});
  }
  return ojson{{"layers", std::move(layers)}};
}

Mlp mlp_from_json(const ojson& j) {
  std::vector<DenseLayer> layers;
  for (const auto& l : j.at("layers")) {
    DenseLayer layer;
    const auto act = l.at("activation").get<std::string>();
    if (act == "relu") {
      layer.activation = Activation::Relu;
    } else if (act == "softmax") {
      layer.activation = Activation::Softmax;
    } else {
      throw Error(ErrorKind::Parse, "unknown activation '" + act + "'");
    }
    layer.weight = matrix_from_json(l.at("weight"));
    layer.bias = vector_from_json(l.at("bias"));
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

ojson linear_to_json(const LinearModel& model) {
  return ojson{{"weight", matrix_to_json(model.weight)}, {"bias", vector_to_json(model.bias)}};
}

LinearModel linear_from_json(const ojson& j) {
  LinearModel m;
  m.weight = matrix_from_json(j.at("weight"));
  m.bias = vector_from_json(j.at("bias"));
  if (m.bias.size() != m.weight.cols()) throw Error(ErrorKind::Parse, "linear model bias length mismatch");
  return m;
}

ojson report_to_json(const TrainReport& report) {
  return ojson{{"seed", report.seed}, {"train_accuracy", report.train_accuracy}, {"losses", report.losses}};
}

}  // namespace cgn
