#pragma once

#include <stdexcept>
#include <string>

namespace agmec {

/// Invalid parameters or invalid inputs to a model operation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (config or checkpoint). `line()` is 1-based, 0 when
/// the problem is not tied to a line (e.g. early end of file).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                           ": " + what),
        line_(line)
  {
  }

  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace agmec
