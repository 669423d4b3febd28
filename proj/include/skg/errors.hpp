#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skg {

/// Malformed input: wrong column count, bad JSON, missing field.
class FormatError : public std::runtime_error {
  public:
    FormatError(std::string const& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), m_line(line)
    {}

    [[nodiscard]] std::size_t line() const noexcept { return m_line; }

  private:
    std::size_t m_line;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class EncodingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments outside an operation's precondition.
class ArgumentError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss or parameter.
class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace skg
