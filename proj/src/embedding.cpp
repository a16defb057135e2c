#include "cgn/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cgn/error.hpp"
#include "cgn/linegraph.hpp"
#include "cgn/random.hpp"

namespace cgn {

using nlohmann::json;

Eigen::MatrixXd embed_tokens_hash(const std::vector<std::string>& tokens, std::size_t dim, std::uint64_t seed) {
  if (dim < kMinHashDim) {
    throw Error(ErrorKind::Dimension, "hash embedding dimension must be >= 8, got " + std::to_string(dim));
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tokens.size()),
                                              static_cast<Eigen::Index>(dim));
  std::string marked;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    marked.assign("<");
    marked += tokens[t];
    marked.push_back('>');
    auto row = out.row(static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i + 3 <= marked.size(); ++i) {
      const std::uint64_t h = hash_bytes(std::string_view(marked).substr(i, 3), seed);
      const auto slot = static_cast<Eigen::Index>(h % dim);
      row(slot) += (h >> 63) ? -1.0 : 1.0;
    }
    const double norm = row.norm();
    if (norm > 0.0) row /= norm;
  }
  return out;
}

Eigen::VectorXd pool_mean(const Eigen::MatrixXd& vectors) {
  if (vectors.rows() == 0) throw Error(ErrorKind::EmptyPool, "cannot mean-pool zero vectors");
  return vectors.colwise().sum().transpose() / static_cast<double>(vectors.rows());
}

const char* to_string(EmbedderKind kind) noexcept { return kind == EmbedderKind::Hash ? "hash" : "file"; }

EmbeddingProvider EmbeddingProvider::hash(std::size_t dim, std::uint64_t seed) {
  if (dim < kMinHashDim) {
    throw Error(ErrorKind::Dimension, "hash embedding dimension must be >= 8, got " + std::to_string(dim));
  }
  EmbeddingProvider p;
  p.kind_ = EmbedderKind::Hash;
  p.dim_ = dim;
  p.seed_ = seed;
  return p;
}

EmbeddingProvider EmbeddingProvider::file(std::size_t dim, Records records, std::filesystem::path source) {
  if (dim == 0) throw Error(ErrorKind::Dimension, "embedding dimension must be positive");
  for (const auto& [id, m] : records) {
    if (static_cast<std::size_t>(m.cols()) != dim) {
      throw Error(ErrorKind::Dimension, "record '" + id + "' has width " + std::to_string(m.cols()) +
                                            ", expected " + std::to_string(dim));
    }
  }
  EmbeddingProvider p;
  p.kind_ = EmbedderKind::File;
  p.dim_ = dim;
  p.source_ = std::move(source);
  p.records_ = std::make_shared<const Records>(std::move(records));
  return p;
}

const EmbeddingProvider::Records& EmbeddingProvider::records() const {
  static const Records empty;
  return records_ ? *records_ : empty;
}

Eigen::MatrixXd line_embeddings(const Sample& sample, const EmbeddingProvider& provider) {
  const auto lines = split_lines(sample.code);
  const auto n = static_cast<Eigen::Index>(lines.size());
  const auto d = static_cast<Eigen::Index>(provider.dim());

  if (provider.kind() == EmbedderKind::Hash) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, d);
    const auto tokenized = tokenize_lines(lines);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& toks = tokenized[static_cast<std::size_t>(i)].tokens;
      if (toks.empty()) continue;
      x.row(i) = pool_mean(embed_tokens_hash(toks, provider.dim(), provider.seed())).transpose();
    }
    return x;
  }

  std::string_view id = sample.id;
  const bool perturbed = id.size() >= 5 && id.substr(id.size() - 5) == "#pert";
  if (perturbed) id.remove_suffix(5);
  const auto& records = provider.records();
  const auto it = records.find(id);
  if (it == records.end()) throw Error(ErrorKind::Lookup, "no embedding record for id '" + std::string(id) + "'");
  if (it->second.rows() != n) {
    throw Error(ErrorKind::Shape, "record '" + std::string(id) + "' has " + std::to_string(it->second.rows()) +
                                      " line vectors but the sample has " + std::to_string(n) + " lines");
  }
  if (!perturbed) return it->second;
  Eigen::MatrixXd x = it->second;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& line = lines[static_cast<std::size_t>(i)];
    const bool blank =
        std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
    if (blank) x.row(i).setZero();
  }
  return x;
}

EmbeddingProvider parse_precomputed(std::string_view text, std::filesystem::path source) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  std::size_t dim = 0;
  EmbeddingProvider::Records records;

  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (eol == text.size()) break;
      continue;
    }
    const std::string where = "line " + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, where + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw Error(ErrorKind::Parse, where + ": expected a JSON object");

    if (!have_header) {
      if (obj.value("format", "") != "cgn-embed") throw Error(ErrorKind::Parse, where + ": missing cgn-embed header");
      if (!obj.contains("version") || obj["version"] != 1) {
        throw Error(ErrorKind::Parse, where + ": unsupported exchange format version");
      }
      if (!obj.contains("dim") || !obj["dim"].is_number_integer() || obj["dim"].get<long long>() <= 0) {
        throw Error(ErrorKind::Parse, where + ": header dim must be a positive integer");
      }
      dim = obj["dim"].get<std::size_t>();
      have_header = true;
      continue;
    }

    if (!obj.contains("id") || !obj["id"].is_string()) throw Error(ErrorKind::Parse, where + ": record without string id");
    if (!obj.contains("line_vectors") || !obj["line_vectors"].is_array()) {
      throw Error(ErrorKind::Parse, where + ": record without line_vectors array");
    }
    const auto id = obj["id"].get<std::string>();
    const auto& rows = obj["line_vectors"];
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (!row.is_array()) throw Error(ErrorKind::Parse, where + ": line vector " + std::to_string(r) + " is not an array");
      if (row.size() != dim) {
        throw Error(ErrorKind::Dimension, where + ": line vector " + std::to_string(r) + " of record '" + id +
                                              "' has length " + std::to_string(row.size()) + ", header dim is " +
                                              std::to_string(dim));
      }
      for (std::size_t c = 0; c < dim; ++c) {
        if (!row[c].is_number()) throw Error(ErrorKind::Parse, where + ": non-numeric vector entry");
        const double v = row[c].get<double>();
        if (!std::isfinite(v)) throw Error(ErrorKind::Parse, where + ": non-finite vector entry");
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
      }
    }
    if (!records.emplace(id, std::move(m)).second) throw Error(ErrorKind::Parse, where + ": duplicate id '" + id + "'");
    if (eol == text.size()) break;
  }
  if (!have_header) throw Error(ErrorKind::Parse, "line 1: missing cgn-embed header");
  return EmbeddingProvider::file(dim, std::move(records), std::move(source));
}

EmbeddingProvider load_precomputed(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open embedding file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_precomputed(buf.str(), path);
}

std::string format_precomputed(std::size_t dim, const EmbeddingProvider::Records& records) {
  using ojson = nlohmann::ordered_json;
  std::string out = ojson{{"format", "cgn-embed"}, {"version", 1}, {"dim", dim}}.dump();
  out.push_back('\n');
  for (const auto& [id, m] : records) {
    ojson rows = ojson::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      ojson row = ojson::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    out += ojson{{"id", id}, {"line_vectors", std::move(rows)}}.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace cgn
