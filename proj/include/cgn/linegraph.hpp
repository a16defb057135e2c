#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cgn {

/// Splits on LF; carriage returns ending a line are dropped (CRLF and CR CR LF). Trailing empty lines are dropped,
/// interior blank lines are kept because each one is a graph node.
/// Throws Error(EmptyInput) when nothing remains.
std::vector<std::string> split_lines(std::string_view code);

/// Joins lines back with LF; split_lines(join_lines(x)) == x for valid x.
std::string join_lines(const std::vector<std::string>& lines);

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offset within the line
  std::size_t end = 0;
};

struct TokenizedLine {
  std::size_t line_index = 0;
  std::vector<std::string> tokens;
};

/// Multi-character operators, longest first within each leading character.
const std::vector<std::string_view>& operator_table();

// C-style lexer over one line at a time. Block comment state carries from
// one line to the next so that comments spanning lines blank their
// interior. Lexing is total: unterminated literals run to end of line.
class LineLexer {
 public:
  std::vector<Token> lex(std::string_view line);
  bool in_block_comment() const noexcept { return in_block_comment_; }

 private:
  bool in_block_comment_ = false;
};

TokenizedLine tokenize_line(std::string_view line, std::size_t line_index = 0);

/// Tokenizes consecutive lines with block comments tracked across them.
std::vector<TokenizedLine> tokenize_lines(const std::vector<std::string>& lines);

// Forward chain over code lines: V = {0..n-1}, E = {(i, i+1)}.
class LineGraph {
 public:
  explicit LineGraph(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return n_ - 1; }
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  bool has_edge(std::size_t i, std::size_t j) const noexcept { return j == i + 1 && j < n_; }

 private:
  std::size_t n_;
};

/// Throws Error(EmptyGraph) for n == 0.
LineGraph build_line_graph(std::size_t n);

/// Dense 0/1 adjacency. With self_loops the identity is added (A + I).
Eigen::MatrixXd adjacency(const LineGraph& graph, bool self_loops = false);

}  // namespace cgn
