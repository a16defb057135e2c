#include <cctype>
#include <string>

#include "cgn/cwe.hpp"
#include "cgn/error.hpp"

namespace cgn {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "io error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Label: return "label error";
    case ErrorKind::Uniqueness: return "uniqueness error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Stratification: return "stratification error";
    case ErrorKind::Partition: return "partition error";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::EmptyGraph: return "empty graph";
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::EmptyPool: return "empty pool";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Training: return "training error";
    case ErrorKind::DataSize: return "data size error";
    case ErrorKind::Input: return "input error";
    case ErrorKind::Pipeline: return "pipeline error";
    case ErrorKind::Usage: return "usage error";
  }
  return "error";
}

std::optional<CweClass> class_from_code(int code) noexcept {
  if (code < 0 || code >= static_cast<int>(kNumClasses)) return std::nullopt;
  return static_cast<CweClass>(code);
}

std::optional<CweClass> parse_class(std::string_view text) noexcept {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto name = kClassNames[k];
    if (name.size() != text.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < name.size() && same; ++i) {
      same = std::tolower(static_cast<unsigned char>(name[i])) ==
             std::tolower(static_cast<unsigned char>(text[i]));
    }
    if (same) return static_cast<CweClass>(k);
  }
  return std::nullopt;
}

}  // namespace cgn
