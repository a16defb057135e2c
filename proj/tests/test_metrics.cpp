#include <doctest.h>

#include "cgn/error.hpp"
#include "cgn/metrics.hpp"
#include "oracles.hpp"

using namespace cgn;
using namespace cgn::testing;

namespace {

std::vector<ClassProba> one_hot(const std::vector<int>& labels) {
  std::vector<ClassProba> out;
  for (int l : labels) {
    ClassProba p{};
    p[static_cast<std::size_t>(l)] = 1.0;
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("confusion counts") {
  const std::vector<int> y = {0, 1, 2, 3, 4, 4};
  const auto cm = confusion(y, y);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(cm.counts[i][j] == (i == j ? (i == 4 ? 2u : 1u) : 0u));
  }
  const std::vector<int> t1 = {0}, p1 = {3};
  CHECK(confusion(t1, p1).counts[0][3] == 1);
  CHECK(confusion(t1, p1).total() == 1);
  CHECK_THROWS_AS(confusion(t1, y), Error);
  CHECK_THROWS_AS(confusion(std::vector<int>{}, std::vector<int>{}), Error);

  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_labelled_sample(rng, 1 + rng.index(80), 5);
    const auto m = confusion(s.truth, s.pred);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(m.row_sum(k) == static_cast<std::size_t>(std::count(s.truth.begin(), s.truth.end(), static_cast<int>(k))));
      CHECK(m.col_sum(k) == static_cast<std::size_t>(std::count(s.pred.begin(), s.pred.end(), static_cast<int>(k))));
    }
    CHECK(m.total() == s.truth.size());
  }
}

TEST_CASE("perfect predictions score exactly one") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_labelled_sample(rng, 5 + rng.index(50), 5);
    s.truth[0] = 0;
    s.truth[1] = 1;
    const auto r = compute_metrics(s.truth, s.truth, one_hot(s.truth));
    CHECK(r.accuracy == 1.0);
    CHECK(r.precision_macro == 1.0);
    CHECK(r.recall_macro == 1.0);
    CHECK(r.f1_macro == 1.0);
    CHECK(r.mcc == 1.0);
    CHECK(r.kappa == 1.0);
    CHECK(r.auc_macro_ovr == 1.0);
    CHECK(r.mse == 0.0);
    CHECK(r.mae == 0.0);
  }
}

TEST_CASE("chance agreement on two classes") {
  const std::vector<int> t = {0, 0, 1, 1}, p = {0, 1, 0, 1};
  const auto r = compute_metrics(t, p, one_hot(p));
  CHECK(r.mcc == 0.0);
  CHECK(r.kappa == 0.0);
  CHECK(r.accuracy == 0.5);
}

TEST_CASE("per-class tallies in the unseen-set reporting style") {
  std::vector<int> t(350, 1), p(350, 1);
  for (std::size_t i = 0; i < 45; ++i) p[i] = static_cast<int>(i % 2 ? 0 : 4);
  const auto r = compute_metrics(t, p, one_hot(p));
  CHECK(r.per_class[1].tp == 305);
  CHECK(r.per_class[1].fn == 45);
  CHECK(r.per_class[1].accuracy == doctest::Approx(0.87).epsilon(0.005));
  CHECK(r.per_class[1].accuracy == 305.0 / 350.0);
}

TEST_CASE("compute_metrics agrees with definitional loops") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = sample_from_random_confusion(rng);
    const auto got = compute_metrics(s.truth, s.pred, s.proba);
    const auto want = brute_force_metrics(s.truth, s.pred, s.proba);
    CHECK(std::abs(got.accuracy - want.accuracy) < 1e-9);
    CHECK(std::abs(got.precision_macro - want.precision) < 1e-9);
    CHECK(std::abs(got.recall_macro - want.recall) < 1e-9);
    CHECK(std::abs(got.f1_macro - want.f1) < 1e-9);
    CHECK(std::abs(got.mcc - want.mcc) < 1e-9);
    CHECK(std::abs(got.kappa - want.kappa) < 1e-9);
    CHECK(std::abs(got.auc_macro_ovr - want.auc) < 1e-9);
    CHECK(got.mcc >= -1.0);
    CHECK(got.mcc <= 1.0);
    CHECK(got.kappa >= -1.0);
    CHECK(got.kappa <= 1.0);
    CHECK(got.accuracy == static_cast<double>(got.confusion.trace()) / static_cast<double>(got.confusion.total()));
  }
}

TEST_CASE("AUC is one under perfect ranking") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> t;
    std::vector<ClassProba> proba;
    for (std::size_t i = 0; i < 40; ++i) {
      t.push_back(static_cast<int>(i % 5));
      ClassProba p{};
      const double hi = 0.6 + 0.3 * rng.uniform();
      for (std::size_t k = 0; k < 5; ++k) p[k] = (1.0 - hi) / 4.0;
      p[i % 5] = hi;
      proba.push_back(p);
    }
    for (int k = 0; k < 5; ++k) CHECK(auc_one_vs_rest(t, proba, k) == 1.0);
    CHECK(compute_metrics(t, t, proba).auc_macro_ovr == 1.0);
  }
  const std::vector<int> single = {2, 2};
  CHECK_FALSE(auc_one_vs_rest(single, one_hot(single), 2));
}

TEST_CASE("kappa is one exactly for diagonal matrices with two or more classes") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = sample_from_random_confusion(rng);
    const auto r = compute_metrics(s.truth, s.pred, s.proba);
    std::set<int> classes(s.truth.begin(), s.truth.end());
    classes.insert(s.pred.begin(), s.pred.end());
    const bool diagonal = s.truth == s.pred;
    CHECK((r.kappa == 1.0) == (diagonal && classes.size() >= 2));
  }
  const std::vector<int> one = {3, 3, 3};
  CHECK(compute_metrics(one, one, one_hot(one)).kappa == 0.0);
}

TEST_CASE("class-code errors") {
  const std::vector<int> t = {0, 4, 2}, p = {1, 0, 2};
  const auto [mse, mae] = class_code_errors(t, p);
  CHECK(mse == doctest::Approx(17.0 / 3.0));
  CHECK(mae == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("unnormalized probability rows are rejected") {
  const std::vector<int> t = {0, 1};
  std::vector<ClassProba> proba = {{0.5, 0.5, 0, 0, 0}, {0.5, 0.6, 0, 0, 0}};
  try {
    compute_metrics(t, t, proba);
    FAIL("expected Input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
  }
}

TEST_CASE("undefined precision counts as zero with a warning") {
  const std::vector<int> t = {0, 0, 1}, p = {0, 0, 0};
  const auto r = compute_metrics(t, p, one_hot(p));
  CHECK(r.per_class[1].precision == 0.0);
  CHECK(r.warnings >= 1);
  CHECK(r.precision_macro == doctest::Approx((2.0 / 3.0 + 0.0) / 2.0));
}

TEST_CASE("report JSON and tables name every metric") {
  const std::vector<int> t = {0, 1, 2, 1}, p = {0, 1, 1, 1};
  const auto r = compute_metrics(t, p, one_hot(p));
  const auto j = report_to_json(r);
  for (auto name : metric_names()) {
    CHECK(j["metrics"].contains(std::string(name)));
    CHECK(metric_value(r, name) == j["metrics"][std::string(name)].get<double>());
  }
  const auto table = format_metric_table({{"test", &r}});
  for (auto header : {"AUC", "Acc.", "Pre.", "Rec.", "F1", "MCC", "Kappa", "MSE", "MAE"}) {
    CHECK(table.find(header) != std::string::npos);
  }
  CHECK(format_class_table(r).find("CWE-120") != std::string::npos);
}

TEST_CASE("cross-validation: constant predictor sits at chance") {
  const auto corpus = corpus_with_counts({50, 50, 50, 50, 50});
  const PipelineFactory factory = [](const Corpus&, std::uint64_t) {
    return std::make_unique<ConstantPredictor>(ClassProba{0.2, 0.2, 0.2, 0.2, 0.2});
  };
  const auto cv = cross_validate(factory, corpus, 10, 3);
  CHECK(cv.folds.size() == 10);
  CHECK(cv.mean[1].first == "accuracy");
  CHECK(std::abs(cv.mean[1].second - 0.2) <= 0.02);

  std::vector<int> seen(corpus.size(), 0);
  for (const auto& fold : cv.partition) {
    for (auto i : fold) ++seen[i];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  std::size_t total = 0;
  for (const auto& r : cv.folds) total += r.samples;
  CHECK(total == corpus.size());
  const auto j = crossval_to_json(cv);
  CHECK(j["folds"].size() == 10);
}

TEST_CASE("cross-validation: seeds per fold and error propagation") {
  const auto corpus = corpus_with_counts({10, 10, 0, 0, 0});
  std::vector<std::uint64_t> seeds;
  const PipelineFactory record = [&](const Corpus& train, std::uint64_t seed) {
    CHECK(train.size() == 18);
    seeds.push_back(seed);
    return std::make_unique<ConstantPredictor>(ClassProba{1, 0, 0, 0, 0});
  };
  cross_validate(record, corpus, 10, 100);
  REQUIRE(seeds.size() == 10);
  for (std::uint64_t f = 0; f < 10; ++f) CHECK(seeds[f] == 100 + f);

  const PipelineFactory failing = [](const Corpus&, std::uint64_t seed) -> std::unique_ptr<Predictor> {
    if (seed == 4) throw Error(ErrorKind::Training, "boom");
    return std::make_unique<ConstantPredictor>(ClassProba{1, 0, 0, 0, 0});
  };
  try {
    cross_validate(failing, corpus, 10, 0);
    FAIL("expected Training");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Training);
    CHECK(std::string(e.what()).find("fold 4") != std::string::npos);
  }
}

TEST_CASE("cross-validation partitions are stratified for random corpora") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto corpus = corpus_with_counts(random_counts(rng, 10, 40));
    const auto folds = kfold_partition(corpus, 10, rng.next());
    std::vector<int> seen(corpus.size(), 0);
    std::array<std::pair<std::size_t, std::size_t>, 5> range;
    range.fill({SIZE_MAX, 0});
    for (const auto& fold : folds) {
      ClassCounts h{};
      for (auto i : fold) {
        ++seen[i];
        ++h[static_cast<std::size_t>(code_of(corpus[i].label))];
      }
      for (std::size_t k = 0; k < 5; ++k) {
        range[k].first = std::min(range[k].first, h[k]);
        range[k].second = std::max(range[k].second, h[k]);
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    for (const auto& [lo, hi] : range) CHECK(hi - lo <= 1);
  }
}
