#ifndef LPCFG_ERRORS_HPP
#define LPCFG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lpcfg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed bracketed input; carries 1-based line/column.
struct BracketError : Error {
  BracketError(const std::string& what, int line, int column)
      : Error(what + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line(line),
        column(column) {}
  int line;
  int column;
};

struct MissingRuleError : Error {
  using Error::Error;
};

struct UnparseableError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace lpcfg

#endif  // LPCFG_ERRORS_HPP
