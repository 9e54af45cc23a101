#ifndef OPSEQ_ERRORS_HPP
#define OPSEQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace opseq {

// Error taxonomy mirrors the tool exit codes: usage=1, data=2, numeric=3.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text; carries a position where known.
struct ParseError : DataError {
  ParseError(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
      : DataError(format(msg, line, column)), line(line), column(column) {}
  std::size_t line;
  std::size_t column;

 private:
  static std::string format(const std::string& msg, std::size_t line, std::size_t col) {
    std::string s = msg;
    if (line) s += " at line " + std::to_string(line);
    if (col) s += ", column " + std::to_string(col);
    return s;
  }
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace opseq

#endif
