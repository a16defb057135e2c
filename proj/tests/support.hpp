#pragma once

// Helpers shared by the unit and acceptance suites.

#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cgn/corpus.hpp"
#include "cgn/linegraph.hpp"
#include "cgn/predictor.hpp"
#include "cgn/random.hpp"

namespace cgn::testing {

inline std::filesystem::path data_dir() { return CGN_DATA_DIR; }

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

/// Corpus with the given per-class counts; code is a short multi-line snippet.
inline Corpus corpus_with_counts(const ClassCounts& counts, const std::string& prefix = "s") {
  std::vector<Sample> samples;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i) {
      const auto id = prefix + std::to_string(k) + "_" + std::to_string(i);
      samples.push_back({id, "int " + id.substr(0, 1) + " = " + std::to_string(i) + ";\nreturn x;", static_cast<CweClass>(k)});
    }
  }
  return Corpus(std::move(samples));
}

inline ClassCounts random_counts(Rng& rng, std::size_t lo, std::size_t hi) {
  ClassCounts c{};
  for (auto& v : c) v = lo + rng.index(hi - lo + 1);
  return c;
}

/// Well separated Gaussian clusters, one per class, in `dim` dimensions.
struct Clusters {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

/// Samples sharing `seed` share cluster centres; `draw` picks an independent
/// noise stream so held-out sets come from the same distribution.
inline Clusters make_clusters(std::size_t per_class, std::size_t dim, std::uint64_t seed, double spread = 3.0,
                              std::uint64_t draw = 0) {
  Rng centers_rng(seed);
  const Eigen::MatrixXd centers = random_matrix(static_cast<Eigen::Index>(kNumClasses), static_cast<Eigen::Index>(dim),
                                                centers_rng, spread);
  Rng rng(derive_seed(seed, 99 + draw));
  Clusters out;
  out.x.resize(static_cast<Eigen::Index>(per_class * kNumClasses), static_cast<Eigen::Index>(dim));
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      out.x.row(row) = centers.row(static_cast<Eigen::Index>(k)) +
                       random_matrix(1, static_cast<Eigen::Index>(dim), rng);
      out.y.push_back(static_cast<int>(k));
      ++row;
    }
  }
  return out;
}

// Probability of class 1 is high exactly when `marker` appears as a token on
// any line; a small deterministic wobble from the other lines' token counts
// keeps the surrogate from being noiseless.
class PlantedPredictor : public Predictor {
 public:
  explicit PlantedPredictor(std::string marker = "strcpy", double wobble = 0.02)
      : marker_(std::move(marker)), wobble_(wobble) {}

  ClassProba predict_proba(const Sample& sample) const override {
    const auto lines = split_lines(sample.code);
    const auto tokens = tokenize_lines(lines);
    bool hit = false;
    std::size_t other = 0;
    for (const auto& tl : tokens) {
      for (const auto& t : tl.tokens) {
        if (t == marker_) hit = true;
        else ++other;
      }
    }
    const double p1 = (hit ? 0.85 : 0.15) + wobble_ * std::sin(static_cast<double>(other));
    ClassProba p{};
    p[1] = p1;
    const double rest = (1.0 - p1) / 4.0;
    p[0] = p[2] = p[3] = p[4] = rest;
    return p;
  }

 private:
  std::string marker_;
  double wobble_;
};

class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(ClassProba p) : p_(p) {}
  ClassProba predict_proba(const Sample&) const override { return p_; }

 private:
  ClassProba p_;
};

/// A snippet of `n` neutral lines with `strcpy(dst, src);` on line `k`.
inline Sample planted_sample(std::size_t n, std::size_t k, Rng& rng, const std::string& id = "planted") {
  static const std::vector<std::string> filler = {
      "int i = 0;",          "total += i;",       "if (x > y) {",          "}",
      "size_t len = n;",     "flags |= MODE;",    "log_debug(\"step\");", "state->ticks++;",
      "double r = 0.5;",     "count--;",          "buf[0] = 0;",           "",
  };
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < n; ++i) {
    lines.push_back(i == k ? "    strcpy(dst, src);" : "    " + filler[rng.index(filler.size())]);
  }
  if (lines.back().find_first_not_of(' ') == std::string::npos) lines.back() = "    return;";
  return Sample{id, join_lines(lines), CweClass::Cwe120};
}

}  // namespace cgn::testing

#include "cgn/explain.hpp"

namespace cgn::testing {

struct PlantedOutcome {
  std::size_t trials = 0;
  std::size_t top_hits = 0;
  std::size_t critical_hits = 0;
};

/// Explains `trials` planted snippets (6..20 lines, marker on a random line)
/// with K perturbations and counts how often the marker line is ranked first
/// and marked critical.
inline PlantedOutcome run_planted_trials(std::size_t trials, std::size_t k, std::uint64_t seed) {
  const PlantedPredictor model;
  Rng rng(seed);
  PlantedOutcome out;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto n = 6 + rng.index(15);
    const auto line = rng.index(n - 1);
    const auto sample = planted_sample(n, line, rng, "planted-" + std::to_string(t));
    ExplainConfig cfg;
    cfg.n_perturbations = k;
    cfg.seed = derive_seed(seed, t);
    const auto e = explain_lines(model, sample, cfg);
    ++out.trials;
    out.top_hits += e.top_line() == line;
    out.critical_hits += e.severity[line] == Severity::Critical;
  }
  return out;
}

}  // namespace cgn::testing
