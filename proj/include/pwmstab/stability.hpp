#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pwmstab/steady_state.hpp"

namespace pwmstab {

/// Jacobian of the cycle-to-cycle map at the periodic orbit and its split
/// Phi = Phi0 - Gamma Psi into an open-loop part and a rank-one feedback.
struct JacobianDecomposition {
  Matrix phi;
  Matrix phi0;      ///< e^{A2(T-d)} e^{A1 d}
  Vector gamma;     ///< e^{A2(T-d)} (xdot(d-) - xdot(d+))
  RowVector psi;    ///< C e^{A1 d} / (C xdot(d-) - h'(d))
};

/// Phi = e^{A2(T-d)} (I - (xdot- - xdot+) C / (C xdot- - h')) e^{A1 d}.
/// Error(Grazing) if C xdot(d-) equals the ramp slope.
JacobianDecomposition jacobian(const SwitchedLinearModel& model, const RampSignal& ramp,
                               const InputVector& u, const SteadyState& ss);

enum class Classification { Stable, PeriodDoubling, SaddleNode, NeimarkSacker, Unstable };

const char* to_string(Classification c);

struct StabilityReport {
  std::vector<Complex> eigenvalues;  ///< sorted by decreasing modulus
  double spectral_radius = 0.0;
  Classification classification = Classification::Stable;
  Complex critical_eigenvalue;  ///< largest modulus
};

/// Classifies the spectrum of Phi. The critical eigenvalue is tested against
/// -1 (period doubling), +1 (saddle node) and the rest of the unit circle
/// (Neimark-Sacker) within `class_tol`; otherwise Stable iff rho < 1 - tol.
StabilityReport classify(const JacobianDecomposition& jd, double class_tol = 1e-4);

/// Same classification applied to an arbitrary map Jacobian.
StabilityReport classify_matrix(const Matrix& phi, double class_tol = 1e-4);

/// Precomputed terms of the characteristic condition
///   C xdot(d-) + C e^{A1 d} (lambda I - Phi0)^{-1} Gamma = h'(d),
/// which holds exactly when lambda (not in spec Phi0) is an eigenvalue of Phi.
class CriticalCondition {
 public:
  CriticalCondition(const SwitchedLinearModel& model, const RampSignal& ramp,
                    const InputVector& u, const SteadyState& ss);

  /// Left side of the condition. Error(Precondition) if lambda I - Phi0 is singular.
  Complex value(Complex lambda) const;

  /// Period doubling, lambda = -1: C xdot- - C e^{A1 d} (I + Phi0)^{-1} Gamma - h'.
  double pdb_residual() const;
  /// Saddle node, lambda = +1: C xdot- + C e^{A1 d} (I - Phi0)^{-1} Gamma - h'.
  double snb_residual() const;
  /// Neimark-Sacker, lambda = e^{j theta}; theta must avoid 0 and pi.
  Complex nsb_residual(double theta) const;

  /// Loop gain of the unity negative feedback form, Psi (z I - Phi0)^{-1} Gamma.
  Complex loop_gain(Complex z) const;

  double ramp_slope() const { return ramp_slope_; }
  double c_xdot_minus() const { return c_xdot_minus_; }
  const Matrix& phi0() const { return phi0_; }
  const Vector& gamma() const { return gamma_; }

 private:
  double real_resolvent_term(double lambda) const;

  Matrix phi0_;
  Vector gamma_;
  RowVector c_e1_;  ///< C e^{A1 d}
  double c_xdot_minus_ = 0.0;
  double ramp_slope_ = 0.0;
};

Complex general_critical_value(const SwitchedLinearModel& model, const RampSignal& ramp,
                               const InputVector& u, const SteadyState& ss, Complex lambda);
double pdb_residual(const SwitchedLinearModel& model, const RampSignal& ramp,
                    const InputVector& u, const SteadyState& ss);
double snb_residual(const SwitchedLinearModel& model, const RampSignal& ramp,
                    const InputVector& u, const SteadyState& ss);
Complex nsb_residual(const SwitchedLinearModel& model, const RampSignal& ramp,
                     const InputVector& u, const SteadyState& ss, double theta);

struct CurveSample {
  double parameter = 0.0;
  Complex value;
  double reference = 0.0;  ///< h'(d) at this sample, NaN if singular
  bool singular = false;
};

/// A sampled critical-condition curve. Singular points stay in place with
/// `singular` set and a NaN value.
struct BoundaryCurve {
  std::string parameter;
  std::vector<CurveSample> samples;
};

/// An operating point fully specifying one sample of a duty family.
struct OperatingPoint {
  SwitchedLinearModel model;
  RampSignal ramp;
  InputVector u;
  SteadyState ss;
};

using DutyFamily = std::function<OperatingPoint(double duty)>;

/// Family that keeps model, ramp and inputs fixed and forces the orbit to
/// switch at the instant belonging to each duty.
DutyFamily fixed_input_family(const SwitchedLinearModel& model, const RampSignal& ramp,
                              const InputVector& u);

/// S(lambda, D) over a duty grid.
BoundaryCurve s_plot(const DutyFamily& family, Complex lambda, std::span<const double> duty_grid);

/// F(theta) = S(e^{j theta}, D) at a fixed operating point.
BoundaryCurve f_plot(const SwitchedLinearModel& model, const RampSignal& ramp,
                     const InputVector& u, const SteadyState& ss,
                     std::span<const double> theta_grid);

/// Discrete-time Nyquist curve N(e^{j omega T}).
BoundaryCurve nyquist(const SwitchedLinearModel& model, const RampSignal& ramp,
                      const InputVector& u, const SteadyState& ss,
                      std::span<const double> omega_grid);

/// n angles evenly covering (-pi, pi], ending at pi.
std::vector<double> theta_grid(int count);

/// n evenly spaced points from lo to hi inclusive (n >= 2).
std::vector<double> linear_grid(double lo, double hi, int count);

}  // namespace pwmstab
