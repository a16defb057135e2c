#pragma once

#include <stdexcept>
#include <string>

namespace cgn {

enum class ErrorKind {
  Io,
  Schema,
  Label,
  Uniqueness,
  Data,
  Infeasible,
  Stratification,
  Partition,
  EmptyInput,
  EmptyGraph,
  Dimension,
  EmptyPool,
  Lookup,
  Shape,
  Parse,
  Training,
  DataSize,
  Input,
  Pipeline,
  Usage,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so callers (and tests)
// can dispatch without matching on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cgn
