#pragma once

#include <stdexcept>
#include <string>

namespace liquidstate {

// Raised when input data or configuration violates a documented contract.
// The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record-oriented parse failure that knows where it happened.
class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace liquidstate
