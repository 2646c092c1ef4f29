#pragma once

#include <stdexcept>
#include <string>

namespace gibbsvb {

enum class ErrorKind {
  invalid_argument,
  invalid_radius,
  dimension,
  unsupported,
  infeasible_data,
  numerical_failure,
  unstable_model,
  io,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this one exception type; the kind
// lets the CLI map failures onto exit codes and tests check the error path.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch(kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::invalid_radius: return "invalid radius";
    case ErrorKind::dimension: return "dimension mismatch";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::infeasible_data: return "infeasible data";
    case ErrorKind::numerical_failure: return "numerical failure";
    case ErrorKind::unstable_model: return "unstable model";
    case ErrorKind::io: return "i/o error";
  }
  return "error";
}

} // namespace gibbsvb
