#pragma once

#include <stdexcept>
#include <string>

namespace ves {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  usage,           // bad configuration or arguments
  domain,          // evaluation outside a declared domain
  degenerate,      // 4*alpha - beta^2 <= 0, Im(lambda) <= 0, |mu| >= 1
  underresolved,   // grid too small for the stencil
  singular,        // division by zero, log/sqrt at 0, singular chart
  numerical,       // Newton failure, near-shock, no convergence
  refusal,         // operation refused on a non-rigid structure
  parse,           // seed expression syntax or name errors
  io               // file input/output
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::underresolved: return "underresolved";
    case ErrorKind::singular: return "singular";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::refusal: return "refusal";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ves
