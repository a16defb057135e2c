#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "cgn/error.hpp"
#include "cgn/explain.hpp"
#include "cgn/linegraph.hpp"

namespace cgn {

namespace {

constexpr const char* kReset = "\033[0m";

const char* ansi_color(Severity s) {
  switch (s) {
    case Severity::Low: return "";
    case Severity::Moderate: return "\033[33m";
    case Severity::High: return "\033[31m";
    case Severity::Critical: return "\033[1;31m";
  }
  return "";
}

std::string html_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<double> normalized(const std::vector<double>& w) {
  double peak = 0.0;
  for (double v : w) peak = std::max(peak, std::abs(v));
  std::vector<double> out(w.size(), 0.0);
  if (peak > 0.0) {
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = std::abs(w[i]) / peak;
  }
  return out;
}

std::string render_ansi(const Sample& sample, const Explanation& e, const std::vector<std::string>& lines) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "# %s  predicted %s  p=%.3f  surrogate r2=%.3f\n", sample.id.c_str(),
                kClassNames[static_cast<std::size_t>(e.predicted_class)].data(),
                e.proba[static_cast<std::size_t>(e.predicted_class)], e.surrogate_r2);
  out += buf;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%4zu | ", i + 1);
    const char* color = ansi_color(e.severity[i]);
    if (*color) {
      out += color;
      out += buf;
      out += lines[i];
      out += kReset;
    } else {
      out += buf;
      out += lines[i];
    }
    out += '\n';
  }
  return out;
}

std::string render_html(const Sample& sample, const Explanation& e, const std::vector<std::string>& lines) {
  const auto intensity = normalized(e.line_weights);
  std::string out =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" + html_escape(sample.id) +
      "</title>\n<style>\n"
      "body { font-family: sans-serif; }\n"
      ".code { font-family: monospace; white-space: pre; border: 1px solid #ccc; }\n"
      ".line { padding: 0 0.5em; }\n"
      ".ln { display: inline-block; width: 4em; color: #888; user-select: none; }\n"
      "</style>\n</head>\n<body>\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "<h1>%s</h1>\n<p>Predicted class: <b>%s</b> (p=%.3f, surrogate r2=%.3f)</p>\n",
                html_escape(sample.id).c_str(), kClassNames[static_cast<std::size_t>(e.predicted_class)].data(),
                e.proba[static_cast<std::size_t>(e.predicted_class)], e.surrogate_r2);
  out += buf;
  out += "<div class=\"code\">\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::snprintf(buf, sizeof buf,
                  "<div class=\"line\" data-line=\"%zu\" data-severity=\"%s\" data-weight=\"%.6g\" "
                  "style=\"background-color: rgba(220, 38, 38, %.3f)\"><span class=\"ln\">%zu</span>",
                  i + 1, to_string(e.severity[i]).data(), e.line_weights[i], intensity[i], i + 1);
    out += buf;
    out += html_escape(lines[i]);
    out += "</div>\n";
  }
  out += "</div>\n</body>\n</html>\n";
  return out;
}

std::string render_json(const Sample& sample, const Explanation& e, const std::vector<std::string>& lines) {
  using ojson = nlohmann::ordered_json;
  ojson rows = ojson::array();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    rows.push_back(ojson{{"line", i + 1},
                         {"text", lines[i]},
                         {"weight", e.line_weights[i]},
                         {"severity", to_string(e.severity[i])}});
  }
  ojson doc{{"id", sample.id},
            {"predicted_class", kClassNames[static_cast<std::size_t>(e.predicted_class)]},
            {"surrogate_r2", e.surrogate_r2},
            {"lines", std::move(rows)}};
  return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "ansi") return ReportFormat::Ansi;
  if (text == "html") return ReportFormat::Html;
  if (text == "json") return ReportFormat::Json;
  throw Error(ErrorKind::Usage, "unknown report format '" + std::string(text) + "'");
}

std::string render_report(const Sample& sample, const Explanation& explanation, ReportFormat format) {
  const auto lines = split_lines(sample.code);
  if (explanation.line_weights.size() != lines.size() || explanation.severity.size() != lines.size()) {
    throw Error(ErrorKind::Shape, "explanation does not match the sample's line count");
  }
  switch (format) {
    case ReportFormat::Ansi: return render_ansi(sample, explanation, lines);
    case ReportFormat::Html: return render_html(sample, explanation, lines);
    case ReportFormat::Json: return render_json(sample, explanation, lines);
  }
  return {};
}

}  // namespace cgn
