#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace cgn {

// Vulnerability classes with stable integer codes 0..4.
enum class CweClass : int {
  Cwe119 = 0,
  Cwe120 = 1,
  Cwe469 = 2,
  Cwe476 = 3,
  Other = 4,
};

inline constexpr std::size_t kNumClasses = 5;

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "CWE-119", "CWE-120", "CWE-469", "CWE-476", "CWE-other"};

constexpr int code_of(CweClass c) noexcept { return static_cast<int>(c); }

constexpr std::string_view name_of(CweClass c) noexcept {
  return kClassNames[static_cast<std::size_t>(c)];
}

/// Maps a code in 0..4 to its class; nullopt otherwise.
std::optional<CweClass> class_from_code(int code) noexcept;

/// Case-insensitive, whitespace-trimmed lookup of a canonical class name.
std::optional<CweClass> parse_class(std::string_view text) noexcept;

using ClassCounts = std::array<std::size_t, kNumClasses>;

}  // namespace cgn
