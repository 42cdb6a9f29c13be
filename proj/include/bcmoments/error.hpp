#pragma once

#include <stdexcept>
#include <string>

namespace bcmoments {

enum class ErrorKind {
  domain,      // parameter outside the validity region of a formula
  divergence,  // a required series does not converge
  range,       // exact arithmetic range exceeded
  input,       // malformed or missing input data
  truncation,  // simulation truncation does not meet its tolerance
  overflow,    // floating point overflow in an estimator
  numeric,     // non-finite value produced during evaluation
  io           // file could not be read or written
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::range: return "range";
    case ErrorKind::input: return "input";
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace bcmoments
