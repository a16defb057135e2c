#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cgn/corpus.hpp"
#include "cgn/predictor.hpp"
#include "cgn/tree.hpp"

namespace cgn {

struct ConfusionMatrix {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};  // [true][predicted]

  std::size_t total() const noexcept;
  std::size_t trace() const noexcept;
  std::size_t row_sum(std::size_t k) const noexcept;
  std::size_t col_sum(std::size_t k) const noexcept;
};

/// Throws Error(Shape) on length mismatch or empty input.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct ClassStats {
  std::size_t support = 0;
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  double accuracy = 0.0;  // tp / support
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double auc_macro_ovr = 0.0;
  double accuracy = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  double mcc = 0.0;
  double kappa = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  ConfusionMatrix confusion;
  std::array<ClassStats, kNumClasses> per_class{};
  std::size_t samples = 0;
  std::size_t warnings = 0;  // undefined precision/recall/AUC terms
};

/// Metric names in table order, and a getter by name.
const std::array<std::string_view, 9>& metric_names() noexcept;
double metric_value(const EvalReport& report, std::string_view name);

/// Area under the one-vs-rest ROC curve for class k (ties count one half).
/// nullopt when the class has no positives or no negatives.
std::optional<double> auc_one_vs_rest(std::span<const int> y_true, std::span<const ClassProba> y_proba, int k);

/// Accuracy, macro P/R/F1 and macro OvR AUC over the classes present in
/// y_true or y_pred, multiclass MCC, Cohen's kappa, and MSE/MAE over
/// class codes. Throws Error(Input) if a probability row is not normalized.
EvalReport compute_metrics(std::span<const int> y_true, std::span<const int> y_pred,
                           std::span<const ClassProba> y_proba);

/// MSE and MAE between integer class codes.
std::pair<double, double> class_code_errors(std::span<const int> y_true, std::span<const int> y_pred);

nlohmann::ordered_json report_to_json(const EvalReport& report);

/// Aligned text table, one row per report, columns in metric_names() order.
std::string format_metric_table(const std::vector<std::pair<std::string, const EvalReport*>>& rows);
std::string format_class_table(const EvalReport& report);

// ---------------------------------------------------------------------------
// Cross-validation

using PipelineFactory = std::function<std::unique_ptr<Predictor>(const Corpus& train, std::uint64_t seed)>;

struct CrossValResult {
  std::vector<EvalReport> folds;
  std::vector<Fold> partition;
  std::vector<std::pair<std::string, double>> mean;    // metric_names() order
  std::vector<std::pair<std::string, double>> stddev;  // sample standard deviation
};

/// Evaluates `predictor` on every sample of `corpus`.
EvalReport evaluate(const Predictor& predictor, const Corpus& corpus);

/// Fold f trains with seed + f; errors are rethrown with the fold index.
CrossValResult cross_validate(const PipelineFactory& factory, const Corpus& corpus, std::size_t k,
                              std::uint64_t seed);

nlohmann::ordered_json crossval_to_json(const CrossValResult& result);

}  // namespace cgn
