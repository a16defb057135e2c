#include <doctest.h>

#include <numeric>

#include "cgn/error.hpp"
#include "cgn/models.hpp"
#include "oracles.hpp"

using namespace cgn;
using namespace cgn::testing;

namespace {

double proba_sum(const ClassProba& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

bool valid_proba(const ClassProba& p) {
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return std::abs(proba_sum(p) - 1.0) < 1e-9;
}

std::vector<int> random_labels(Rng& rng, std::size_t m, std::size_t classes = kNumClasses) {
  std::vector<int> y(m);
  for (auto& v : y) v = static_cast<int>(rng.index(classes));
  return y;
}

Eigen::MatrixXd integer_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, std::size_t levels) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<double>(rng.index(levels));
  }
  return m;
}

template <class T>
T reparse(const nlohmann::ordered_json& j, T (*from)(const nlohmann::ordered_json&)) {
  return from(nlohmann::ordered_json::parse(j.dump()));
}

}  // namespace

TEST_CASE("gini values") {
  CHECK(gini(ClassTally{}) == 0.0);
  CHECK(gini(ClassTally{4, 0, 0, 0, 0}) == 0.0);
  CHECK(gini(ClassTally{1, 1, 0, 0, 0}) == doctest::Approx(0.5));
  CHECK(gini(ClassTally{1, 1, 1, 1, 1}) == doctest::Approx(0.8));
}

TEST_CASE("tree: a pure sample set is a single leaf") {
  Rng rng(1);
  const auto x = random_matrix(12, 3, rng);
  const std::vector<int> y(12, 3);
  const auto t = fit_tree(x, y);
  REQUIRE(t.nodes.size() == 1);
  CHECK(t.nodes[0].proba == ClassProba{0, 0, 0, 1, 0});
  CHECK(tree_predict_proba(t, random_matrix(3, 1, rng).col(0)) == ClassProba{0, 0, 0, 1, 0});
}

TEST_CASE("tree: sign of a 1-D feature gives a depth-1 tree") {
  Eigen::MatrixXd x(8, 1);
  x << -4, -3, -2, -1, 1, 2, 3, 4;
  const std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
  const auto t = fit_tree(x, y);
  CHECK(t.depth() == 1);
  CHECK(t.nodes[0].threshold == 0.0);
  for (Eigen::Index i = 0; i < 8; ++i) CHECK(argmax(tree_predict_proba(t, x.row(i).transpose())) == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("tree: identical rows with mixed labels make one leaf") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(6, 2);
  const std::vector<int> y = {0, 1, 2, 0, 1, 0};
  const auto t = fit_tree(x, y);
  REQUIRE(t.nodes.size() == 1);
  CHECK(t.nodes[0].proba[0] == doctest::Approx(0.5));
}

TEST_CASE("tree: root split matches exhaustive enumeration") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    // Small integer grids force many exact ties.
    const auto x = trial % 2 ? integer_matrix(rng, 20, 3, 4) : random_matrix(20, 3, rng);
    const auto y = random_labels(rng, 20, 2 + rng.index(4));
    const auto t = fit_tree(x, y);
    const auto want = oracle_best_split(x, y, t.config.min_samples_leaf);
    if (!want) {
      CHECK(t.nodes[0].is_leaf());
      continue;
    }
    REQUIRE_FALSE(t.nodes[0].is_leaf());
    CHECK(t.nodes[0].feature == static_cast<int>(want->feature));
    CHECK(t.nodes[0].threshold == doctest::Approx(want->threshold).epsilon(1e-12));
    for (const auto& alt : enumerate_splits(x, y, t.config.min_samples_leaf)) {
      CHECK(want->num * alt.den >= alt.num * want->den);
    }
  }
}

TEST_CASE("tree: invariants on random data") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = static_cast<Eigen::Index>(10 + rng.index(60));
    const auto x = random_matrix(m, 4, rng);
    const auto y = random_labels(rng, static_cast<std::size_t>(m));
    TreeConfig cfg;
    cfg.max_depth = 1 + rng.index(8);
    const auto t = fit_tree(x, y, cfg);
    CHECK(t.depth() <= cfg.max_depth);
    for (const auto& node : t.nodes) CHECK(valid_proba(node.proba));
    for (int q = 0; q < 1000 / 30; ++q) CHECK(valid_proba(tree_predict_proba(t, random_matrix(4, 1, rng, 3.0).col(0))));
  }
}

TEST_CASE("tree: a fully grown tree memorizes distinct rows") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_matrix(40, 3, rng);
    const auto y = random_labels(rng, 40);
    TreeConfig cfg;
    cfg.min_samples_leaf = 1;
    cfg.max_depth = 64;
    const auto t = fit_tree(x, y, cfg);
    for (Eigen::Index i = 0; i < 40; ++i) {
      ClassProba one_hot{};
      one_hot[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] = 1.0;
      CHECK(tree_predict_proba(t, x.row(i).transpose()) == one_hot);
    }
  }
  // XOR has no positive-gain split at the root.
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<int> y = {0, 1, 1, 0};
  TreeConfig cfg;
  cfg.min_samples_leaf = 1;
  const auto t = fit_tree(x, y, cfg);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(argmax(tree_predict_proba(t, x.row(i).transpose())) == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("tree: row order does not change the tree") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = integer_matrix(rng, 30, 3, 5);
    const auto y = random_labels(rng, 30);
    std::vector<std::size_t> perm(30);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span(perm));
    Eigen::MatrixXd xp(30, 3);
    std::vector<int> yp(30);
    for (std::size_t i = 0; i < 30; ++i) {
      xp.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(perm[i]));
      yp[i] = y[perm[i]];
    }
    const auto a = fit_tree(x, y), b = fit_tree(xp, yp);
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
      CHECK(a.nodes[i].feature == b.nodes[i].feature);
      CHECK(a.nodes[i].threshold == b.nodes[i].threshold);
      CHECK(a.nodes[i].tally == b.nodes[i].tally);
    }
  }
}

TEST_CASE("tree: errors") {
  Rng rng(6);
  CHECK_THROWS_AS(fit_tree(random_matrix(3, 2, rng), std::vector<int>{0, 1}), Error);
  CHECK_THROWS_AS(fit_tree(random_matrix(2, 2, rng), std::vector<int>{0, 9}), Error);
  const auto t = fit_tree(random_matrix(4, 2, rng), std::vector<int>{0, 1, 0, 1});
  try {
    tree_predict_proba(t, Eigen::VectorXd::Zero(3));
    FAIL("expected Shape");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
  }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(argmax({0.2, 0.2, 0.2, 0.2, 0.2}) == 0);
  CHECK(argmax({0.1, 0.4, 0.4, 0.1, 0.0}) == 1);
}

TEST_CASE("deeptree learns separable clusters") {
  const auto train = make_clusters(100, 32, 7);
  const auto held = make_clusters(40, 32, 7, 3.0, 1);
  DeepTreeConfig cfg;
  cfg.seed = 7;
  const auto [model, report] = fit_deeptree(train.x, train.y, cfg);
  CHECK(report.train_accuracy >= 0.95);
  CHECK(report.losses.size() == cfg.epochs);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < held.x.rows(); ++i) {
    const auto p = deeptree_predict(model, held.x.row(i).transpose());
    CHECK(valid_proba(p.proba));
    CHECK(p.label == argmax(p.proba));
    CHECK(deeptree_predict(model, held.x.row(i).transpose()).proba == p.proba);
    correct += p.label == held.y[static_cast<std::size_t>(i)];
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(held.x.rows()) >= 0.9);
  CHECK(model.mlp.input_dim() == kNumClasses);
  CHECK(model.mlp.output_dim() == kNumClasses);
}

TEST_CASE("deeptree with one-hot leaves reproduces the tree's vote") {
  const auto data = make_clusters(30, 6, 8);
  DeepTreeConfig cfg;
  cfg.tree.min_samples_leaf = 1;
  cfg.tree.max_depth = 64;
  cfg.epochs = 300;
  cfg.learning_rate = 1e-2;
  cfg.seed = 8;
  const auto [model, report] = fit_deeptree(data.x, data.y, cfg);
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd x = random_matrix(6, 1, rng, 4.0).col(0);
    CHECK(deeptree_predict(model, x).label == argmax(tree_predict_proba(model.tree, x)));
  }
}

TEST_CASE("deeptree: too few samples and finite losses across seeds") {
  Rng rng(9);
  try {
    fit_deeptree(random_matrix(9, 3, rng), random_labels(rng, 9));
    FAIL("expected DataSize");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DataSize);
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DeepTreeConfig cfg;
    cfg.seed = seed;
    cfg.epochs = 20;
    const auto x = random_matrix(60, 4, rng);
    const auto [model, report] = fit_deeptree(x, random_labels(rng, 60), cfg);
    for (double l : report.losses) CHECK(std::isfinite(l));
  }
}

TEST_CASE("deeptree training is deterministic for a seed") {
  const auto data = make_clusters(20, 8, 10);
  DeepTreeConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 3;
  const auto a = fit_deeptree(data.x, data.y, cfg);
  const auto b = fit_deeptree(data.x, data.y, cfg);
  CHECK(a.second.losses == b.second.losses);
  CHECK(mlp_to_json(a.first.mlp).dump() == mlp_to_json(b.first.mlp).dump());
}

TEST_CASE("sgd baseline: zero epochs, separability and descent") {
  Rng rng(11);
  const auto x = random_matrix(20, 3, rng);
  const auto y = random_labels(rng, 20);
  SgdConfig zero;
  zero.epochs = 0;
  const auto [m0, r0] = fit_sgd_baseline(x, y, zero);
  CHECK(m0.weight.isZero(0.0));
  CHECK(m0.bias.isZero(0.0));
  CHECK(r0.losses.empty());

  Eigen::MatrixXd xs(40, 2);
  std::vector<int> ys(40);
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    xs(i, 0) = (label ? 1.0 : -1.0) * (0.5 + rng.uniform());
    xs(i, 1) = rng.normal();
    ys[static_cast<std::size_t>(i)] = label;
  }
  SgdConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 4;
  const auto [model, report] = fit_sgd_baseline(xs, ys, cfg);
  CHECK(report.train_accuracy == 1.0);
  CHECK(report.losses.size() == 200);
  CHECK(report.losses.back() < report.losses.front());
  CHECK(model.weight.allFinite());
  for (int i = 0; i < 50; ++i) CHECK(valid_proba(linear_predict_proba(model, random_matrix(2, 1, rng, 5.0).col(0))));
}

TEST_CASE("serialization round-trips give identical predictions") {
  const auto data = make_clusters(20, 5, 12);
  DeepTreeConfig cfg;
  cfg.epochs = 5;
  const auto [dt, r1] = fit_deeptree(data.x, data.y, cfg);
  const auto [lin, r2] = fit_sgd_baseline(data.x, data.y, SgdConfig{0.01, 5, 1});

  const auto tree = reparse(tree_to_json(dt.tree), &tree_from_json);
  const DeepTreeModel dt2{tree, reparse(mlp_to_json(dt.mlp), &mlp_from_json)};
  const auto lin2 = reparse(linear_to_json(lin), &linear_from_json);
  CHECK(tree.config.max_depth == dt.tree.config.max_depth);

  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = random_matrix(5, 1, rng, 3.0).col(0);
    CHECK(tree_predict_proba(tree, x) == tree_predict_proba(dt.tree, x));
    CHECK(deeptree_predict(dt2, x).proba == deeptree_predict(dt, x).proba);
    CHECK(linear_predict_proba(lin2, x) == linear_predict_proba(lin, x));
  }
  const auto m = random_matrix(3, 4, rng, 1e-7);
  CHECK(reparse(matrix_to_json(m), &matrix_from_json) == m);
  CHECK(report_to_json(r1).contains("losses"));
  CHECK_FALSE(report_to_json(r1).contains("seconds"));
}

TEST_CASE("classifier dispatch and model kind names") {
  const auto data = make_clusters(10, 4, 13);
  for (auto kind : {ModelKind::DeepTree, ModelKind::Tree, ModelKind::Sgd}) {
    ClassifierConfig cfg;
    cfg.kind = kind;
    cfg.deeptree.epochs = 3;
    cfg.sgd.epochs = 3;
    const auto [c, report] = fit_classifier(data.x, data.y, cfg);
    CHECK(c.kind() == kind);
    CHECK(parse_model_kind(to_string(kind)) == kind);
    const auto p = c.predict(data.x.row(0).transpose());
    CHECK(valid_proba(p.proba));
    CHECK(p.label == argmax(p.proba));
  }
  CHECK_THROWS_AS(parse_model_kind("svm"), Error);
}
