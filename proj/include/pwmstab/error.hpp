#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pwmstab {

/// Failure categories raised by the library. The CLI maps each one onto a
/// process exit code (see `exit_code_for`).
enum class ErrorCode {
  Dimension,        ///< matrix/vector shapes do not agree
  Domain,           ///< argument outside the operation's domain
  Singular,         ///< linear system numerically singular
  NoRoot,           ///< bracket without a sign change
  NoSwitching,      ///< duty saturated, comparator never fires in steady state
  DegenerateOrbit,  ///< I - Phi0 singular, no unique periodic orbit
  Grazing,          ///< switching condition tangent to the ramp
  Precondition,     ///< lambda is an eigenvalue of Phi0
  Pole,             ///< transfer function evaluated at a pole
  NoConvergence,    ///< iteration did not converge
  OracleInvalid,    ///< finite-difference perturbation saturated the duty
  Divergence,       ///< simulated state became non-finite
  Config,           ///< configuration text rejected
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pwmstab
