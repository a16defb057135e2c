#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cgn/cwe.hpp"

namespace cgn {

struct Sample {
  std::string id;
  std::string code;
  CweClass label = CweClass::Other;
};

// An ordered list of samples with unique ids and a cached label histogram.
class Corpus {
 public:
  Corpus() = default;

  /// Throws Error(Uniqueness) on a repeated id.
  explicit Corpus(std::vector<Sample> samples);

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const ClassCounts& class_counts() const noexcept { return counts_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  /// Indices of the samples of each class, in corpus order.
  std::vector<std::vector<std::size_t>> indices_by_class() const;

  /// Sub-corpus built from the given positions (in the order given).
  Corpus subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Sample> samples_;
  ClassCounts counts_{};
};

/// Reads a header `id,code,label` CSV (RFC 4180 quoting, any column order).
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus_csv(std::string_view text);

/// Writes a corpus in the same CSV layout; every field is quoted.
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
std::string format_corpus_csv(const Corpus& corpus);

enum class BalanceStrategy { Downsample, UpsampleAugment };

inline constexpr double kDefaultDropoutRate = 0.05;

/// Equalizes the classes that are present in the corpus to a common count.
Corpus balance(const Corpus& corpus, BalanceStrategy strategy,
               std::optional<std::size_t> target, std::uint64_t seed);

/// Label-preserving token dropout that keeps the line structure intact.
Sample augment(const Sample& sample, double dropout_rate, std::uint64_t seed);

/// True for `{ } ( ) ;` and C keywords; those survive augmentation.
bool is_structural_token(std::string_view token) noexcept;

struct SplitResult {
  Corpus train;
  Corpus test;
};

/// Stratified train/test split.
SplitResult split(const Corpus& corpus, double test_fraction, std::uint64_t seed);

/// Per-class test counts chosen by split(), indexed by class code.
ClassCounts split_test_counts(const ClassCounts& counts, double test_fraction);

using Fold = std::vector<std::size_t>;

/// Stratified k-fold partition of sample positions.
std::vector<Fold> kfold_partition(const Corpus& corpus, std::size_t k, std::uint64_t seed);

}  // namespace cgn
