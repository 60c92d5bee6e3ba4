#pragma once

#include <stdexcept>
#include <string>

namespace ehwrt {

/// Malformed or inconsistent input file. `line` is 1-based, 0 if unknown.
class ParseError : public std::runtime_error {
public:
  ParseError(std::string origin, int line, const std::string& message)
      : std::runtime_error(origin + (line > 0 ? ":" + std::to_string(line) : "") +
                           ": " + message),
        line_(line) {}

  int line() const { return line_; }

private:
  int line_;
};

}  // namespace ehwrt
