#include "cgn/tree.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>

#include "cgn/error.hpp"

namespace cgn {

namespace {

using Wide = __int128;

std::size_t tally_sum(const ClassTally& t) { return std::accumulate(t.begin(), t.end(), std::size_t{0}); }

Wide sum_squares(const ClassTally& t) {
  Wide s = 0;
  for (auto c : t) s += static_cast<Wide>(c) * static_cast<Wide>(c);
  return s;
}

// Split quality as the fraction num/den = sum(l^2)/n_l + sum(r^2)/n_r.
// Larger is better; Gini gain is monotone in it for a fixed parent.
struct Score {
  Wide num = 0;
  Wide den = 1;
};

Score score_of(const ClassTally& left, const ClassTally& right) {
  const Wide nl = static_cast<Wide>(tally_sum(left));
  const Wide nr = static_cast<Wide>(tally_sum(right));
  return {nr * sum_squares(left) + nl * sum_squares(right), nl * nr};
}

bool better(const Score& a, const Score& b) { return a.num * b.den > b.num * a.den; }

ClassProba frequencies(const ClassTally& t) {
  ClassProba p{};
  const auto n = tally_sum(t);
  if (n == 0) return p;
  for (std::size_t k = 0; k < kNumClasses; ++k) p[k] = static_cast<double>(t[k]) / static_cast<double>(n);
  return p;
}

double gain_of(const ClassTally& parent, const ClassTally& left, const ClassTally& right) {
  const double n = static_cast<double>(tally_sum(parent));
  const double nl = static_cast<double>(tally_sum(left));
  const double nr = static_cast<double>(tally_sum(right));
  return gini(parent) - (nl * gini(left) + nr * gini(right)) / n;
}

}  // namespace

double gini(const ClassTally& tally) noexcept {
  const auto n = tally_sum(tally);
  if (n == 0) return 0.0;
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  return static_cast<double>(static_cast<Wide>(n) * static_cast<Wide>(n) - sum_squares(tally)) / nn;
}

void check_labels(std::span<const int> y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= static_cast<int>(kNumClasses)) {
      throw Error(ErrorKind::Input, "label " + std::to_string(y[i]) + " at row " + std::to_string(i) +
                                        " outside 0..4");
    }
  }
}

std::size_t TreeModel::depth() const {
  if (nodes.empty()) return 0;
  std::function<std::size_t(int)> rec = [&](int i) -> std::size_t {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(rec(node.left), rec(node.right));
  };
  return rec(0);
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::optional<SplitCandidate> best_split(const Eigen::MatrixXd& x, std::span<const int> y,
                                         std::span<const std::size_t> rows, std::size_t min_samples_leaf) {
  const std::size_t n = rows.size();
  const std::size_t min_leaf = std::max<std::size_t>(min_samples_leaf, 1);
  if (n < 2 * min_leaf) return std::nullopt;

  ClassTally parent{};
  for (auto r : rows) ++parent[static_cast<std::size_t>(y[r])];
  if (std::count_if(parent.begin(), parent.end(), [](std::size_t c) { return c > 0; }) <= 1) return std::nullopt;
  // A split may not score below leaving the node whole, sum(c^2)/n. Zero
  // gain is accepted so that fully grown trees can separate XOR patterns.
  const Score whole{sum_squares(parent), static_cast<Wide>(n)};
  Score best = whole;
  std::optional<SplitCandidate> choice;
  ClassTally best_left{}, best_right{};

  std::vector<std::size_t> order(rows.begin(), rows.end());
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = x(static_cast<Eigen::Index>(a), f), vb = x(static_cast<Eigen::Index>(b), f);
      return va < vb || (va == vb && a < b);
    });
    ClassTally left{};
    ClassTally right = parent;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto label = static_cast<std::size_t>(y[order[i]]);
      ++left[label];
      --right[label];
      const double here = x(static_cast<Eigen::Index>(order[i]), f);
      const double next = x(static_cast<Eigen::Index>(order[i + 1]), f);
      if (here == next) continue;
      if (i + 1 < min_leaf || n - (i + 1) < min_leaf) continue;
      const Score s = score_of(left, right);
      if (choice ? !better(s, best) : better(whole, s)) continue;
      double threshold = here + (next - here) / 2.0;
      if (!(threshold < next)) threshold = here;
      best = s;
      choice = SplitCandidate{static_cast<std::size_t>(f), threshold, 0.0};
      best_left = left;
      best_right = right;
    }
  }
  if (choice) choice->gain = gain_of(parent, best_left, best_right);
  return choice;
}

TreeModel fit_tree(const Eigen::MatrixXd& x, std::span<const int> y, const TreeConfig& config) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorKind::Shape, "X has " + std::to_string(x.rows()) + " rows but y has " +
                                      std::to_string(y.size()) + " labels");
  }
  if (y.size() < 2) throw Error(ErrorKind::DataSize, "tree fitting needs at least 2 samples");
  check_labels(y);

  TreeModel tree;
  tree.n_features = static_cast<std::size_t>(x.cols());
  tree.config = config;

  std::function<int(std::vector<std::size_t>&, std::size_t)> grow = [&](std::vector<std::size_t>& rows,
                                                                         std::size_t depth) -> int {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    ClassTally tally{};
    for (auto r : rows) ++tally[static_cast<std::size_t>(y[r])];
    tree.nodes[static_cast<std::size_t>(id)].tally = tally;
    tree.nodes[static_cast<std::size_t>(id)].proba = frequencies(tally);

    const bool pure = std::count_if(tally.begin(), tally.end(), [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || depth >= config.max_depth) return id;
    const auto split = best_split(x, y, rows, config.min_samples_leaf);
    if (!split) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(split->feature)) <= split->threshold ? left : right)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = l;
    node.right = r;
    return id;
  };

  std::vector<std::size_t> all(y.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  grow(all, 0);
  return tree;
}

ClassProba tree_predict_proba(const TreeModel& tree, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != tree.n_features) {
    throw Error(ErrorKind::Shape, "tree expects " + std::to_string(tree.n_features) + " features, got " +
                                      std::to_string(x.size()));
  }
  if (tree.nodes.empty()) throw Error(ErrorKind::Input, "empty tree");
  std::size_t i = 0;
  while (!tree.nodes[i].is_leaf()) {
    const auto& node = tree.nodes[i];
    i = static_cast<std::size_t>(x(node.feature) <= node.threshold ? node.left : node.right);
  }
  return tree.nodes[i].proba;
}

int argmax(const ClassProba& p) noexcept {
  int best = 0;
  for (int k = 1; k < static_cast<int>(p.size()); ++k) {
    if (p[static_cast<std::size_t>(k)] > p[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

}  // namespace cgn
