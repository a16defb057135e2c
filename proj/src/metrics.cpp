#include "cgn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cgn/error.hpp"

namespace cgn {

using ojson = nlohmann::ordered_json;

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return t;
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t t = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) t += counts[k][k];
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t k) const noexcept {
  return std::accumulate(counts[k].begin(), counts[k].end(), std::size_t{0});
}

std::size_t ConfusionMatrix::col_sum(std::size_t k) const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts) t += row[k];
  return t;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorKind::Shape, "y_true has " + std::to_string(y_true.size()) + " labels, y_pred has " +
                                      std::to_string(y_pred.size()));
  }
  if (y_true.empty()) throw Error(ErrorKind::Shape, "no labels to compare");
  check_labels(y_true);
  check_labels(y_pred);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ++cm.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  return cm;
}

const std::array<std::string_view, 9>& metric_names() noexcept {
  static constexpr std::array<std::string_view, 9> names = {"auc",  "accuracy", "precision", "recall", "f1",
                                                            "mcc",  "kappa",    "mse",       "mae"};
  return names;
}

double metric_value(const EvalReport& r, std::string_view name) {
  if (name == "auc") return r.auc_macro_ovr;
  if (name == "accuracy") return r.accuracy;
  if (name == "precision") return r.precision_macro;
  if (name == "recall") return r.recall_macro;
  if (name == "f1") return r.f1_macro;
  if (name == "mcc") return r.mcc;
  if (name == "kappa") return r.kappa;
  if (name == "mse") return r.mse;
  if (name == "mae") return r.mae;
  throw Error(ErrorKind::Input, "unknown metric '" + std::string(name) + "'");
}

std::optional<double> auc_one_vs_rest(std::span<const int> y_true, std::span<const ClassProba> y_proba, int k) {
  const auto col = static_cast<std::size_t>(k);
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(y_true.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool is_pos = y_true[i] == k;
    pos += is_pos;
    scored.emplace_back(y_proba[i][col], is_pos);
  }
  const std::size_t neg = y_true.size() - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  // Trapezoidal ROC: each block of tied scores is one step.
  double area = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i, dtp = 0, dfp = 0;
    while (j < scored.size() && scored[j].first == scored[i].first) {
      (scored[j].second ? dtp : dfp) += 1;
      ++j;
    }
    area += static_cast<double>(dfp) * (2.0 * static_cast<double>(tp) + static_cast<double>(dtp)) / 2.0;
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return area / (static_cast<double>(pos) * static_cast<double>(neg));
}

std::pair<double, double> class_code_errors(std::span<const int> y_true, std::span<const int> y_pred) {
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double d = static_cast<double>(y_true[i] - y_pred[i]);
    se += d * d;
    ae += std::abs(d);
  }
  const double m = static_cast<double>(y_true.size());
  return {se / m, ae / m};
}

EvalReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                           std::span<const ClassProba> y_proba) {
  EvalReport r;
  r.confusion = confusion(y_true, y_pred);
  if (y_proba.size() != y_true.size()) {
    throw Error(ErrorKind::Shape, "y_proba has " + std::to_string(y_proba.size()) + " rows for " +
                                      std::to_string(y_true.size()) + " labels");
  }
  for (std::size_t i = 0; i < y_proba.size(); ++i) {
    double sum = 0.0;
    for (double p : y_proba[i]) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Input, "probability outside [0,1] in row " + std::to_string(i));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorKind::Input, "probability row " + std::to_string(i) + " sums to " + std::to_string(sum));
  }

  const auto& cm = r.confusion;
  const std::size_t s = cm.total();
  const std::size_t c = cm.trace();
  r.samples = s;
  r.accuracy = static_cast<double>(c) / static_cast<double>(s);

  std::size_t present = 0;
  double p_sum = 0.0, r_sum = 0.0, f_sum = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    auto& st = r.per_class[k];
    st.support = cm.row_sum(k);
    st.tp = cm.counts[k][k];
    st.fn = st.support - st.tp;
    st.fp = cm.col_sum(k) - st.tp;
    st.accuracy = st.support ? static_cast<double>(st.tp) / static_cast<double>(st.support) : 0.0;
    if (st.support == 0 && st.fp == 0) continue;  // class absent from both label sets
    ++present;
    if (st.tp + st.fp > 0) {
      st.precision = static_cast<double>(st.tp) / static_cast<double>(st.tp + st.fp);
    } else {
      ++r.warnings;
    }
    if (st.support > 0) {
      st.recall = static_cast<double>(st.tp) / static_cast<double>(st.support);
    } else {
      ++r.warnings;
    }
    if (st.precision + st.recall > 0.0) st.f1 = 2.0 * st.precision * st.recall / (st.precision + st.recall);
    p_sum += st.precision;
    r_sum += st.recall;
    f_sum += st.f1;
  }
  r.precision_macro = p_sum / static_cast<double>(present);
  r.recall_macro = r_sum / static_cast<double>(present);
  r.f1_macro = f_sum / static_cast<double>(present);

  // MCC and kappa from the confusion marginals, in exact integer arithmetic
  // up to the final division.
  using Wide = __int128;
  Wide pt = 0, pp = 0, tt = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const Wide pk = static_cast<Wide>(cm.col_sum(k));
    const Wide tk = static_cast<Wide>(cm.row_sum(k));
    pt += pk * tk;
    pp += pk * pk;
    tt += tk * tk;
  }
  const Wide ss = static_cast<Wide>(s) * static_cast<Wide>(s);
  const Wide cov = static_cast<Wide>(c) * static_cast<Wide>(s) - pt;
  const Wide var_p = ss - pp;
  const Wide var_t = ss - tt;
  if (var_p > 0 && var_t > 0) {
    const double den = var_p == var_t ? static_cast<double>(var_p)
                                      : std::sqrt(static_cast<double>(var_p)) * std::sqrt(static_cast<double>(var_t));
    r.mcc = static_cast<double>(cov) / den;
  }
  if (ss - pt > 0) r.kappa = static_cast<double>(cov) / static_cast<double>(ss - pt);

  double auc_sum = 0.0;
  std::size_t auc_classes = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto& st = r.per_class[k];
    if (st.support == 0 && st.fp == 0) continue;
    if (const auto a = auc_one_vs_rest(y_true, y_proba, static_cast<int>(k))) {
      auc_sum += *a;
      ++auc_classes;
    } else {
      ++r.warnings;
    }
  }
  r.auc_macro_ovr = auc_classes ? auc_sum / static_cast<double>(auc_classes) : 0.0;

  std::tie(r.mse, r.mae) = class_code_errors(y_true, y_pred);
  return r;
}

ojson report_to_json(const EvalReport& r) {
  ojson metrics;
  for (auto name : metric_names()) metrics[std::string(name)] = metric_value(r, name);
  ojson matrix = ojson::array();
  for (const auto& row : r.confusion.counts) matrix.push_back(row);
  ojson per_class = ojson::array();
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto& st = r.per_class[k];
    per_class.push_back(ojson{{"class", kClassNames[k]},
                              {"support", st.support},
                              {"accuracy", st.accuracy},
                              {"tp", st.tp},
                              {"fn", st.fn},
                              {"fp", st.fp},
                              {"precision", st.precision},
                              {"recall", st.recall},
                              {"f1", st.f1}});
  }
  return ojson{{"samples", r.samples},
               {"metrics", std::move(metrics)},
               {"confusion", std::move(matrix)},
               {"per_class", std::move(per_class)},
               {"warnings", r.warnings}};
}

std::string format_metric_table(const std::vector<std::pair<std::string, const EvalReport*>>& rows) {
  static constexpr std::array<std::string_view, 9> headers = {"AUC", "Acc.", "Pre.",  "Rec.", "F1",
                                                              "MCC", "Kappa", "MSE", "MAE"};
  std::size_t label_width = 5;
  for (const auto& [label, _] : rows) label_width = std::max(label_width, label.size());
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(label_width), "Model");
  out += buf;
  for (auto h : headers) {
    std::snprintf(buf, sizeof buf, " %7.*s", static_cast<int>(h.size()), h.data());
    out += buf;
  }
  out += '\n';
  for (const auto& [label, report] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(label_width), label.c_str());
    out += buf;
    for (auto name : metric_names()) {
      std::snprintf(buf, sizeof buf, " %7.4f", metric_value(*report, name));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string format_class_table(const EvalReport& r) {
  std::string out = "Class      Support   Acc.  TP / FN\n";
  char buf[96];
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto& st = r.per_class[k];
    std::snprintf(buf, sizeof buf, "%-10s %7zu %6.2f  %zu / %zu\n", kClassNames[k].data(), st.support, st.accuracy,
                  st.tp, st.fn);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------

EvalReport evaluate(const Predictor& predictor, const Corpus& corpus) {
  std::vector<int> y_true, y_pred;
  std::vector<ClassProba> proba;
  y_true.reserve(corpus.size());
  y_pred.reserve(corpus.size());
  proba.reserve(corpus.size());
  for (const auto& s : corpus.samples()) {
    const auto p = predictor.predict_proba(s);
    y_true.push_back(code_of(s.label));
    y_pred.push_back(argmax(p));
    proba.push_back(p);
  }
  return compute_metrics(y_true, y_pred, proba);
}

CrossValResult cross_validate(const PipelineFactory& factory, const Corpus& corpus, std::size_t k,
                              std::uint64_t seed) {
  CrossValResult result;
  result.partition = kfold_partition(corpus, k, seed);
  for (std::size_t f = 0; f < k; ++f) {
    try {
      std::vector<bool> held(corpus.size(), false);
      for (auto i : result.partition[f]) held[i] = true;
      std::vector<std::size_t> train_idx;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!held[i]) train_idx.push_back(i);
      }
      const auto predictor = factory(corpus.subset(train_idx), seed + f);
      if (!predictor) throw Error(ErrorKind::Pipeline, "factory returned no predictor");
      result.folds.push_back(evaluate(*predictor, corpus.subset(result.partition[f])));
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(f) + ": " + e.what());
    }
  }
  const double n = static_cast<double>(k);
  for (auto name : metric_names()) {
    double mean = 0.0;
    for (const auto& r : result.folds) mean += metric_value(r, name);
    mean /= n;
    double var = 0.0;
    for (const auto& r : result.folds) var += std::pow(metric_value(r, name) - mean, 2);
    result.mean.emplace_back(std::string(name), mean);
    result.stddev.emplace_back(std::string(name), std::sqrt(var / (n - 1.0)));
  }
  return result;
}

ojson crossval_to_json(const CrossValResult& result) {
  ojson folds = ojson::array();
  for (std::size_t f = 0; f < result.folds.size(); ++f) {
    ojson fold = report_to_json(result.folds[f]);
    fold["fold"] = f;
    fold["test_size"] = result.partition[f].size();
    folds.push_back(std::move(fold));
  }
  ojson mean, stddev;
  for (const auto& [k, v] : result.mean) mean[k] = v;
  for (const auto& [k, v] : result.stddev) stddev[k] = v;
  return ojson{{"k", result.folds.size()}, {"mean", mean}, {"stddev", stddev}, {"folds", std::move(folds)}};
}

}  // namespace cgn
