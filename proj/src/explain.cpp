#include "cgn/explain.hpp"

#include <algorithm>
#include <cmath>

#include "cgn/error.hpp"
#include "cgn/linegraph.hpp"
#include "cgn/random.hpp"

namespace cgn {

void ExplainConfig::validate() const {
  if (n_perturbations < 10) throw Error(ErrorKind::Input, "need at least 10 perturbations");
  if (!(keep_probability > 0.0 && keep_probability < 1.0)) {
    throw Error(ErrorKind::Input, "keep probability must lie in (0, 1)");
  }
  if (!(ridge >= 0.0)) throw Error(ErrorKind::Input, "ridge penalty must be non-negative");
  if (kernel_width && !(*kernel_width > 0.0)) throw Error(ErrorKind::Input, "kernel width must be positive");
}

std::vector<LineMask> perturb_masks(std::size_t n, const ExplainConfig& config) {
  config.validate();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "cannot perturb a sample without lines");
  Rng rng(config.seed);
  std::vector<LineMask> masks;
  masks.reserve(config.n_perturbations);
  masks.emplace_back(n, std::uint8_t{1});
  while (masks.size() < config.n_perturbations) {
    LineMask m(n);
    bool any = false;
    do {
      for (auto& bit : m) {
        bit = rng.bernoulli(config.keep_probability) ? 1 : 0;
        any = any || bit;
      }
    } while (!any);
    masks.push_back(std::move(m));
  }
  return masks;
}

Sample apply_mask(const Sample& sample, const LineMask& mask) {
  const auto n = split_lines(sample.code).size();
  if (mask.size() != n) {
    throw Error(ErrorKind::Shape, "mask length " + std::to_string(mask.size()) + " differs from line count " +
                                      std::to_string(n));
  }
  // Edit the raw text so kept lines and line endings stay byte-identical.
  Sample out{sample.id + "#pert", {}, sample.label};
  out.code.reserve(sample.code.size());
  std::size_t line = 0;
  std::size_t start = 0;
  const std::string& code = sample.code;
  while (start <= code.size()) {
    auto eol = code.find('\n', start);
    const bool last = eol == std::string::npos;
    if (last) eol = code.size();
    std::string_view segment(code.data() + start, eol - start);
    if (line < n && !mask[line]) {
      const bool crlf = !segment.empty() && segment.back() == '\r';
      out.code += crlf ? " \r" : " ";
    } else {
      out.code += segment;
    }
    if (last) break;
    out.code.push_back('\n');
    start = eol + 1;
    ++line;
  }
  return out;
}

std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::Low: return "low";
    case Severity::Moderate: return "moderate";
    case Severity::High: return "high";
    case Severity::Critical: return "critical";
  }
  return "low";
}

std::vector<Severity> severities(const std::vector<double>& weights) {
  double peak = 0.0;
  for (double w : weights) peak = std::max(peak, std::abs(w));
  std::vector<Severity> out(weights.size(), Severity::Low);
  if (peak == 0.0) return out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double r = std::abs(weights[i]) / peak;
    out[i] = r < 0.25 ? Severity::Low : r < 0.5 ? Severity::Moderate : r < 0.75 ? Severity::High : Severity::Critical;
  }
  return out;
}

RidgeFit weighted_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                        double lambda) {
  if (x.rows() != y.size() || x.rows() != weights.size()) throw Error(ErrorKind::Shape, "ridge inputs disagree in length");
  const double total = weights.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::Input, "ridge weights must have positive mass");

  RidgeFit fit;
  if (y.size() == 0 || (y.array() == y(0)).all()) {
    // Constant target: exact zero weights.
    fit.coef = Eigen::VectorXd::Zero(x.cols());
    fit.intercept = y.size() ? y(0) : 0.0;
    fit.r2 = 1.0;
    return fit;
  }

  // Centering at the weighted means removes the intercept from the penalty.
  const Eigen::RowVectorXd x_mean = (weights.transpose() * x) / total;
  const double y_mean = weights.dot(y) / total;
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * weights.asDiagonal() * xc;
  gram.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = xc.transpose() * weights.asDiagonal() * yc;

  fit.coef = gram.ldlt().solve(rhs);
  fit.intercept = y_mean - x_mean.dot(fit.coef);

  const Eigen::VectorXd resid = yc - xc * fit.coef;
  const double ss_res = weights.dot(resid.cwiseProduct(resid));
  const double ss_tot = weights.dot(yc.cwiseProduct(yc));
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::size_t Explanation::top_line() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < line_weights.size(); ++i) {
    if (std::abs(line_weights[i]) > std::abs(line_weights[best])) best = i;
  }
  return best;
}

Explanation explain_lines(const Predictor& predictor, const Sample& sample, const ExplainConfig& config) {
  config.validate();
  const auto n = split_lines(sample.code).size();

  auto query = [&](const Sample& s) {
    try {
      return predictor.predict_proba(s);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Pipeline) throw;
      throw Error(ErrorKind::Pipeline, "pipeline failed on sample '" + s.id + "': " + e.what());
    }
  };

  Explanation out;
  out.sample_id = sample.id;
  out.proba = query(sample);
  out.predicted_class = argmax(out.proba);
  const auto cls = static_cast<std::size_t>(out.predicted_class);

  const auto masks = perturb_masks(n, config);
  const auto k = static_cast<Eigen::Index>(masks.size());
  const double width = config.kernel_width.value_or(0.25 * std::sqrt(static_cast<double>(n)));

  Eigen::MatrixXd design(k, static_cast<Eigen::Index>(n));
  Eigen::VectorXd target(k);
  Eigen::VectorXd kernel(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto& mask = masks[static_cast<std::size_t>(r)];
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < n; ++i) {
      design(r, static_cast<Eigen::Index>(i)) = mask[i];
      dropped += mask[i] ? 0 : 1;
    }
    target(r) = r == 0 ? out.proba[cls] : query(apply_mask(sample, mask))[cls];
    const double dist = static_cast<double>(dropped) / static_cast<double>(n);
    kernel(r) = std::exp(-(dist * dist) / (width * width));
  }

  const auto fit = weighted_ridge(design, target, kernel, config.ridge);
  out.line_weights.assign(fit.coef.data(), fit.coef.data() + fit.coef.size());
  out.intercept = fit.intercept;
  out.surrogate_r2 = fit.r2;
  out.severity = severities(out.line_weights);
  return out;
}

}  // namespace cgn
