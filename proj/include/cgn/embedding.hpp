#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgn/corpus.hpp"

namespace cgn {

inline constexpr std::size_t kDefaultEmbedDim = 768;
inline constexpr std::size_t kMinHashDim = 8;

/// Signed feature hashing of character 3-grams (with `<`/`>` boundary
/// markers), one L2-normalized row per token. Throws Error(Dimension) for
/// dim < 8.
Eigen::MatrixXd embed_tokens_hash(const std::vector<std::string>& tokens, std::size_t dim, std::uint64_t seed);

/// Arithmetic mean of the rows. Throws Error(EmptyPool) for zero rows.
Eigen::VectorXd pool_mean(const Eigen::MatrixXd& vectors);

enum class EmbedderKind { Hash, File };

const char* to_string(EmbedderKind kind) noexcept;

// Per-line feature source. Immutable once built; copies share the record
// table of a file provider.
class EmbeddingProvider {
 public:
  using Records = std::map<std::string, Eigen::MatrixXd, std::less<>>;

  static EmbeddingProvider hash(std::size_t dim, std::uint64_t seed);
  static EmbeddingProvider file(std::size_t dim, Records records, std::filesystem::path source = {});

  EmbedderKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::filesystem::path& source() const noexcept { return source_; }
  std::size_t record_count() const noexcept { return records_ ? records_->size() : 0; }
  const Records& records() const;

 private:
  EmbedderKind kind_ = EmbedderKind::Hash;
  std::size_t dim_ = kDefaultEmbedDim;
  std::uint64_t seed_ = 0;
  std::filesystem::path source_;
  std::shared_ptr<const Records> records_;
};

/// n x dim matrix, one row per line of split_lines(sample.code).
///
/// Hash provider: each row is the mean of the line's token vectors, and a
/// line without tokens maps to the zero vector.
///
/// File provider: rows are looked up by sample id. Ids carrying the
/// perturbation suffix `#pert` resolve to their base record, and lines that
/// are blank in the sample are zeroed, so masked variants of a known
/// sample stay embeddable.
Eigen::MatrixXd line_embeddings(const Sample& sample, const EmbeddingProvider& provider);

/// Reads the `cgn-embed` JSON-lines exchange format.
EmbeddingProvider load_precomputed(const std::filesystem::path& path);
EmbeddingProvider parse_precomputed(std::string_view text, std::filesystem::path source = {});

/// Serializes records to the exchange format (header first, records in id order).
std::string format_precomputed(std::size_t dim, const EmbeddingProvider::Records& records);

}  // namespace cgn
