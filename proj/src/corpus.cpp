#include "cgn/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cgn/error.hpp"
#include "cgn/linegraph.hpp"
#include "cgn/random.hpp"

namespace cgn {

Corpus::Corpus(std::vector<Sample> samples) : samples_(std::move(samples)) {
  std::unordered_set<std::string> seen;
  seen.reserve(samples_.size());
  for (const auto& s : samples_) {
    if (!seen.insert(s.id).second) throw Error(ErrorKind::Uniqueness, "duplicate sample id '" + s.id + "'");
    ++counts_[static_cast<std::size_t>(code_of(s.label))];
  }
}

std::vector<std::vector<std::size_t>> Corpus::indices_by_class() const {
  std::vector<std::vector<std::size_t>> out(kNumClasses);
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    out[static_cast<std::size_t>(code_of(samples_[i].label))].push_back(i);
  }
  return out;
}

Corpus Corpus::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples_.at(i));
  return Corpus(std::move(out));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // physical line where the record starts
};

std::vector<CsvRecord> parse_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<CsvRecord> records;
  std::size_t i = 0;
  std::size_t line = 1;
  while (i < text.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool end_of_record = false;
    while (!end_of_record) {
      field.clear();
      if (i < text.size() && text[i] == '"') {
        ++i;
        bool closed = false;
        while (i < text.size()) {
          const char c = text[i];
          if (c == '"') {
            if (i + 1 < text.size() && text[i + 1] == '"') {
              field.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            closed = true;
            break;
          }
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        if (!closed) {
          throw Error(ErrorKind::Parse, "unterminated quoted field starting on line " + std::to_string(rec.line));
        }
      }
      while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') field.push_back(text[i++]);
      rec.fields.push_back(field);
      if (i >= text.size()) {
        end_of_record = true;
      } else if (text[i] == ',') {
        ++i;
      } else {
        if (text[i] == '\r') ++i;
        if (i < text.size() && text[i] == '\n') ++i;
        ++line;
        end_of_record = true;
      }
    }
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
    records.push_back(std::move(rec));
  }
  return records;
}

bool blank_after_trim(std::string_view code) {
  return std::all_of(code.begin(), code.end(), [](unsigned char c) { return std::isspace(c); });
}

void append_quoted(std::string& out, std::string_view field) {
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

Corpus parse_corpus_csv(std::string_view text) {
  const auto records = parse_csv(text);
  if (records.empty()) throw Error(ErrorKind::Schema, "missing header row (expected id,code,label)");

  const auto& header = records.front().fields;
  std::array<std::size_t, 3> col{};
  const std::array<std::string_view, 3> names = {"id", "code", "label"};
  for (std::size_t c = 0; c < names.size(); ++c) {
    auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) {
      std::string_view v = h;
      while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
      while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
      return v == names[c];
    });
    if (it == header.end()) {
      throw Error(ErrorKind::Schema, "missing column '" + std::string(names[c]) + "' in header");
    }
    col[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<Sample> samples;
  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string where = "row " + std::to_string(r) + " (line " + std::to_string(rec.line) + ")";
    if (rec.fields.size() != header.size()) {
      throw Error(ErrorKind::Parse, where + ": expected " + std::to_string(header.size()) + " fields, found " +
                                        std::to_string(rec.fields.size()));
    }
    Sample s;
    s.id = rec.fields[col[0]];
    s.code = rec.fields[col[1]];
    const auto label = parse_class(rec.fields[col[2]]);
    if (!label) throw Error(ErrorKind::Label, where + ": unknown label '" + rec.fields[col[2]] + "'");
    s.label = *label;
    if (s.id.empty()) throw Error(ErrorKind::Data, where + ": empty id");
    if (blank_after_trim(s.code)) throw Error(ErrorKind::Data, where + ": empty code for id '" + s.id + "'");
    if (!ids.insert(s.id).second) throw Error(ErrorKind::Uniqueness, where + ": duplicate id '" + s.id + "'");
    samples.push_back(std::move(s));
  }
  return Corpus(std::move(samples));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open corpus file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus_csv(buf.str());
}

std::string format_corpus_csv(const Corpus& corpus) {
  std::string out = "id,code,label\n";
  for (const auto& s : corpus.samples()) {
    append_quoted(out, s.id);
    out.push_back(',');
    append_quoted(out, s.code);
    out.push_back(',');
    append_quoted(out, name_of(s.label));
    out.push_back('\n');
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write corpus file '" + path.string() + "'");
  out << format_corpus_csv(corpus);
}

// ---------------------------------------------------------------------------
// Augmentation

bool is_structural_token(std::string_view token) noexcept {
  static constexpr std::array<std::string_view, 5> punct = {"{", "}", "(", ")", ";"};
  static constexpr std::array<std::string_view, 44> keywords = {
      "auto",       "break",    "case",     "char",          "const",        "continue",  "default",
      "do",         "double",   "else",     "enum",          "extern",       "float",     "for",
      "goto",       "if",       "inline",   "int",           "long",         "register",  "restrict",
      "return",     "short",    "signed",   "sizeof",        "static",       "struct",    "switch",
      "typedef",    "union",    "unsigned", "void",          "volatile",     "while",     "_Alignas",
      "_Alignof",   "_Atomic",  "_Bool",    "_Complex",      "_Generic",     "_Imaginary", "_Noreturn",
      "_Static_assert", "_Thread_local"};
  return std::find(punct.begin(), punct.end(), token) != punct.end() ||
         std::find(keywords.begin(), keywords.end(), token) != keywords.end();
}

Sample augment(const Sample& sample, double dropout_rate, std::uint64_t seed) {
  Sample out = sample;
  if (dropout_rate <= 0.0) return out;

  std::vector<std::string> raw;
  {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= sample.code.size(); ++i) {
      if (i == sample.code.size() || sample.code[i] == '\n') {
        raw.push_back(sample.code.substr(start, i - start));
        start = i + 1;
      }
    }
  }

  LineLexer lexer;
  std::vector<std::vector<Token>> tokens(raw.size());
  std::size_t last_with_tokens = raw.size();
  for (std::size_t l = 0; l < raw.size(); ++l) {
    tokens[l] = lexer.lex(raw[l]);
    if (!tokens[l].empty()) last_with_tokens = l;
  }

  Rng rng(seed);
  for (std::size_t l = 0; l < raw.size(); ++l) {
    std::vector<bool> drop(tokens[l].size(), false);
    for (std::size_t t = 0; t < tokens[l].size(); ++t) {
      if (!is_structural_token(tokens[l][t].text)) drop[t] = rng.bernoulli(dropout_rate);
    }
    // The last token-bearing line must keep a token, otherwise the line
    // could vanish from split_lines and change the node count.
    if (l == last_with_tokens && std::all_of(drop.begin(), drop.end(), [](bool d) { return d; })) {
      drop[0] = false;
    }
    std::string rebuilt;
    std::size_t pos = 0;
    const std::string& line = raw[l];
    for (std::size_t t = 0; t < tokens[l].size(); ++t) {
      if (!drop[t]) continue;
      rebuilt.append(line, pos, tokens[l][t].begin - pos);
      pos = tokens[l][t].end;
      const bool glued_left = !rebuilt.empty() && !std::isspace(static_cast<unsigned char>(rebuilt.back()));
      const bool glued_right = pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]));
      if (glued_left && glued_right) rebuilt.push_back(' ');
    }
    rebuilt.append(line, pos, std::string::npos);
    raw[l] = std::move(rebuilt);
  }

  out.code.clear();
  for (std::size_t l = 0; l < raw.size(); ++l) {
    if (l) out.code.push_back('\n');
    out.code += raw[l];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Balancing, splitting, folds

Corpus balance(const Corpus& corpus, BalanceStrategy strategy, std::optional<std::size_t> target,
               std::uint64_t seed) {
  if (corpus.empty()) throw Error(ErrorKind::Input, "cannot balance an empty corpus");
  if (target && *target == 0) throw Error(ErrorKind::Input, "balance target must be positive");

  const auto& counts = corpus.class_counts();
  std::size_t lo = SIZE_MAX, hi = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  const std::size_t goal = target ? *target : (strategy == BalanceStrategy::Downsample ? lo : hi);

  Rng rng(seed);
  const auto by_class = corpus.indices_by_class();
  std::vector<std::size_t> keep;
  std::vector<Sample> extra;
  std::unordered_set<std::string> ids;
  for (const auto& s : corpus.samples()) ids.insert(s.id);

  for (std::size_t k = 0; k < kNumClasses; ++k) {
    auto idx = by_class[k];
    if (idx.empty()) continue;
    if (idx.size() > goal) {
      rng.shuffle(std::span<std::size_t>(idx));
      idx.resize(goal);
      keep.insert(keep.end(), idx.begin(), idx.end());
    } else if (idx.size() < goal) {
      if (strategy == BalanceStrategy::Downsample) {
        throw Error(ErrorKind::Infeasible, "class " + std::string(kClassNames[k]) + " has " +
                                               std::to_string(idx.size()) + " samples, fewer than target " +
                                               std::to_string(goal));
      }
      keep.insert(keep.end(), idx.begin(), idx.end());
      std::vector<std::size_t> aug_counter(idx.size(), 0);
      for (std::size_t d = idx.size(); d < goal; ++d) {
        const std::size_t pick = rng.index(idx.size());
        Sample s = augment(corpus[idx[pick]], kDefaultDropoutRate, rng.next());
        std::string id;
        do {
          id = corpus[idx[pick]].id + "-aug" + std::to_string(++aug_counter[pick]);
        } while (ids.count(id));
        ids.insert(id);
        s.id = std::move(id);
        extra.push_back(std::move(s));
      }
    } else {
      keep.insert(keep.end(), idx.begin(), idx.end());
    }
  }

  std::sort(keep.begin(), keep.end());
  std::vector<Sample> out;
  out.reserve(keep.size() + extra.size());
  for (auto i : keep) out.push_back(corpus[i]);
  for (auto& s : extra) out.push_back(std::move(s));
  return Corpus(std::move(out));
}

ClassCounts split_test_counts(const ClassCounts& counts, double test_fraction) {
  ClassCounts test{};
  std::size_t total = 0, assigned = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    total += counts[k];
    test[k] = static_cast<std::size_t>(std::floor(static_cast<double>(counts[k]) * test_fraction + 0.5));
    assigned += test[k];
  }
  const auto wanted = static_cast<std::size_t>(std::floor(static_cast<double>(total) * test_fraction + 0.5));

  // Reconcile with the global target, starting from the largest class.
  std::array<std::size_t, kNumClasses> order{};
  for (std::size_t k = 0; k < kNumClasses; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  for (std::size_t pass = 0; assigned != wanted && pass < total + kNumClasses; ++pass) {
    bool moved = false;
    for (auto k : order) {
      if (assigned < wanted && test[k] + 1 < counts[k]) {
        ++test[k];
        ++assigned;
        moved = true;
        break;
      }
      if (assigned > wanted && test[k] > 0) {
        --test[k];
        --assigned;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return test;
}

SplitResult split(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::Input, "test fraction must lie in (0, 1)");
  }
  const auto& counts = corpus.class_counts();
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (counts[k] == 1) {
      throw Error(ErrorKind::Stratification,
                  "class " + std::string(kClassNames[k]) + " has a single sample; stratified split needs 2");
    }
  }
  if (corpus.empty()) throw Error(ErrorKind::Stratification, "cannot split an empty corpus");

  const auto test_counts = split_test_counts(counts, test_fraction);
  Rng rng(seed);
  std::vector<bool> is_test(corpus.size(), false);
  auto by_class = corpus.indices_by_class();
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    rng.shuffle(std::span<std::size_t>(by_class[k]));
    for (std::size_t j = 0; j < test_counts[k]; ++j) is_test[by_class[k][j]] = true;
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < corpus.size(); ++i) (is_test[i] ? test_idx : train_idx).push_back(i);
  return {corpus.subset(train_idx), corpus.subset(test_idx)};
}

std::vector<Fold> kfold_partition(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::Partition, "k must be at least 2");
  if (corpus.empty()) throw Error(ErrorKind::Partition, "cannot partition an empty corpus");
  const auto& counts = corpus.class_counts();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] != 0 && counts[c] < k) {
      throw Error(ErrorKind::Partition, "class " + std::string(kClassNames[c]) + " has " +
                                            std::to_string(counts[c]) + " samples, fewer than k=" +
                                            std::to_string(k));
    }
  }
  Rng rng(seed);
  std::vector<Fold> folds(k);
  std::size_t offset = 0;
  auto by_class = corpus.indices_by_class();
  for (auto& idx : by_class) {
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t j = 0; j < idx.size(); ++j) folds[(offset + j) % k].push_back(idx[j]);
    offset = (offset + idx.size()) % k;
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

}  // namespace cgn
