#include "cgn/linegraph.hpp"

#include <algorithm>
#include <cctype>

#include "cgn/error.hpp"

namespace cgn {

std::vector<std::string> split_lines(std::string_view code) {
  std::vector<std::string> lines;
  std::string current;
  for (std::size_t i = 0; i < code.size(); ++i) {
    const char c = code[i];
    if (c == '\n') {
      while (!current.empty() && current.back() == '\r') current.pop_back();
      lines.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  lines.push_back(std::move(current));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorKind::EmptyInput, "empty code: no lines to split");
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

const std::vector<std::string_view>& operator_table() {
  static const std::vector<std::string_view> table = {
      "<<=", ">>=", "...", "->", "==", "<=", ">=", "!=", "&&", "||", "<<", ">>", "++",
      "--",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "::",
  };
  return table;
}

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

std::size_t scan_number(std::string_view s, std::size_t i) {
  std::size_t j = i;
  while (j < s.size()) {
    const unsigned char c = s[j];
    if (is_ident_char(c) || c == '.') {
      const bool exponent = (c == 'e' || c == 'E' || c == 'p' || c == 'P');
      ++j;
      if (exponent && j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    } else if (c == '\'' && j + 1 < s.size() && is_ident_char(s[j + 1])) {
      ++j;  // digit separator
    } else {
      break;
    }
  }
  return j;
}

std::size_t scan_quoted(std::string_view s, std::size_t i) {
  const char quote = s[i];
  std::size_t j = i + 1;
  while (j < s.size()) {
    if (s[j] == '\\') {
      j += 2;
      continue;
    }
    if (s[j] == quote) return j + 1;
    ++j;
  }
  return s.size();
}

}  // namespace

std::vector<Token> LineLexer::lex(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = line.size();
  auto emit = [&](std::size_t begin, std::size_t end) {
    tokens.push_back(Token{std::string(line.substr(begin, end - begin)), begin, end});
  };
  while (i < n) {
    if (in_block_comment_) {
      const auto close = line.find("*/", i);
      if (close == std::string_view::npos) return tokens;
      in_block_comment_ = false;
      i = close + 2;
      continue;
    }
    const unsigned char c = line[i];
    if (std::isspace(c)) {
      ++i;
    } else if (c == '/' && i + 1 < n && line[i + 1] == '/') {
      break;
    } else if (c == '/' && i + 1 < n && line[i + 1] == '*') {
      in_block_comment_ = true;
      i += 2;
    } else if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && is_ident_char(line[j])) ++j;
      // Prefixed literals such as L"..." or u8'x' stay one token.
      if (j < n && (line[j] == '"' || line[j] == '\'')) {
        const std::string_view prefix = line.substr(i, j - i);
        if (prefix == "L" || prefix == "u" || prefix == "U" || prefix == "u8") j = scan_quoted(line, j);
      }
      emit(i, j);
      i = j;
    } else if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(line[i + 1]))) {
      const std::size_t j = scan_number(line, i);
      emit(i, j);
      i = j;
    } else if (c == '"' || c == '\'') {
      const std::size_t j = scan_quoted(line, i);
      emit(i, j);
      i = j;
    } else {
      std::size_t len = 1;
      for (const auto op : operator_table()) {
        if (op.size() > len && line.substr(i, op.size()) == op) len = op.size();
      }
      emit(i, i + len);
      i += len;
    }
  }
  return tokens;
}

TokenizedLine tokenize_line(std::string_view line, std::size_t line_index) {
  LineLexer lexer;
  TokenizedLine out{line_index, {}};
  for (auto& tok : lexer.lex(line)) out.tokens.push_back(std::move(tok.text));
  return out;
}

std::vector<TokenizedLine> tokenize_lines(const std::vector<std::string>& lines) {
  LineLexer lexer;
  std::vector<TokenizedLine> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    TokenizedLine tl{i, {}};
    for (auto& tok : lexer.lex(lines[i])) tl.tokens.push_back(std::move(tok.text));
    out.push_back(std::move(tl));
  }
  return out;
}

LineGraph::LineGraph(std::size_t n) : n_(n) {
  if (n == 0) throw Error(ErrorKind::EmptyGraph, "line graph needs at least one line");
}

std::vector<std::pair<std::size_t, std::size_t>> LineGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(edge_count());
  for (std::size_t i = 0; i + 1 < n_; ++i) out.emplace_back(i, i + 1);
  return out;
}

LineGraph build_line_graph(std::size_t n) { return LineGraph(n); }

Eigen::MatrixXd adjacency(const LineGraph& graph, bool self_loops) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : graph.edges()) {
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  }
  if (self_loops) a.diagonal().setOnes();
  return a;
}

}  // namespace cgn
