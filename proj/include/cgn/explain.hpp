#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cgn/corpus.hpp"
#include "cgn/predictor.hpp"

namespace cgn {

struct ExplainConfig {
  std::size_t n_perturbations = 200;
  double keep_probability = 0.5;
  std::optional<double> kernel_width;  // defaults to 0.25 * sqrt(n)
  double ridge = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One bit per line; 1 keeps the line.
using LineMask = std::vector<std::uint8_t>;

/// masks[0] is all ones; the rest are Bernoulli(p) per bit, redrawn when
/// all bits come out zero.
std::vector<LineMask> perturb_masks(std::size_t n, const ExplainConfig& config);

/// Masked lines become a single space, so the line count survives
/// split_lines and tokenization sees a blank line. The id gains "#pert".
Sample apply_mask(const Sample& sample, const LineMask& mask);

enum class Severity { Low, Moderate, High, Critical };

std::string_view to_string(Severity s) noexcept;

/// Buckets of |w| / max|w|: [0,.25) low, [.25,.5) moderate, [.5,.75) high,
/// [.75,1] critical. All-zero weights are all low.
std::vector<Severity> severities(const std::vector<double>& weights);

struct RidgeFit {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Weighted least squares with an unpenalized intercept:
/// minimize sum_i w_i (y_i - b - x_i.beta)^2 + lambda |beta|^2.
RidgeFit weighted_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                        double lambda);

struct Explanation {
  std::string sample_id;
  int predicted_class = 0;
  ClassProba proba{};
  std::vector<double> line_weights;
  std::vector<Severity> severity;
  double surrogate_r2 = 0.0;
  double intercept = 0.0;

  /// Line index with the largest |weight| (lowest index on ties).
  std::size_t top_line() const;
};

/// Local linear surrogate over line masks for the originally predicted
/// class. Predictor failures surface as Error(Pipeline).
Explanation explain_lines(const Predictor& predictor, const Sample& sample, const ExplainConfig& config);

enum class ReportFormat { Ansi, Html, Json };

ReportFormat parse_report_format(std::string_view text);

std::string render_report(const Sample& sample, const Explanation& explanation, ReportFormat format);

}  // namespace cgn
