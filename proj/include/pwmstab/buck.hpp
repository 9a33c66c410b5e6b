#pragma once

#include <optional>

#include "pwmstab/model.hpp"

namespace pwmstab {

/// Buck plant with a shared state matrix in both stages; `b` is the v_s
/// column, `c` the compensator row.
struct BuckPlant {
  Matrix a;
  Vector b;
  RowVector c;
  RampSignal ramp;

  void validate() const;
};

/// Extracts the plant from a model that passes `detect_buck_structure`.
std::optional<BuckPlant> buck_plant(const SwitchedLinearModel& model, const RampSignal& ramp);

/// Coefficient of v_s in the LEM period-doubling condition at switching
/// instant d:  C[(I + e^{-AT})^{-1} + (I - e^{AT})^{-1}(e^{AT} - e^{Ad})]B.
/// Error(Singular) if either matrix inverse does not exist.
double lem_boundary_coefficient(const BuckPlant& plant, double d);

/// TEM counterpart:  C[(I - e^{AT})^{-1}(e^{Ad} - I) + (I + e^{AT})^{-1}]B.
double tem_boundary_coefficient(const BuckPlant& plant, double d);

/// Source voltage on the LEM period-doubling boundary at duty D (d = (1-D)T).
/// Returns +infinity when the coefficient vanishes (boundary at infinity).
double vs_critical_lem(const BuckPlant& plant, double duty);

/// Source voltage on the TEM period-doubling boundary at duty D (d = DT).
double vs_critical_tem(const BuckPlant& plant, double duty);

double vs_critical(const BuckPlant& plant, Edge edge, double duty);

/// coefficient·v_s - h'(d); zero on the boundary, affine in v_s.
double pdb_residual_lem(const BuckPlant& plant, double duty, double vs);
double pdb_residual_tem(const BuckPlant& plant, double duty, double vs);

/// G(s) = C (sI - A)^{-1} B, the diode-voltage-to-y transfer function.
/// Error(Pole) at an eigenvalue of A.
Complex transfer_eval(const BuckPlant& plant, Complex s);

struct HarmonicBalanceResult {
  double vs = 0.0;            ///< V_m / (2 Re sum), +inf if the sum vanishes
  double series_real = 0.0;   ///< Re of the truncated sum
  double tail_estimate = 0.0; ///< |last retained term|
  int terms = 0;
};

/// Harmonic-balance period-doubling boundary with K harmonics:
///   v_s = V_m / (2 Re sum_{k=1..K} [(1 - e^{j k w_s d}) G(j k w_s) - G(j (k - 1/2) w_s)]).
/// TEM uses -G. Terms are accumulated in ascending k with compensated summation.
HarmonicBalanceResult harmonic_balance_vs(const BuckPlant& plant, double d, int harmonics,
                                          Edge edge = Edge::LEM);

struct EquivalenceCheck {
  double series_lhs = 0.0;  ///< 2 f_s Re sum(...) truncated at K
  double matrix_rhs = 0.0;  ///< lem_boundary_coefficient(plant, d)
  double residual = 0.0;    ///< |lhs - rhs|
  double tail_estimate = 0.0;
};

/// Compares the truncated harmonic series with the closed matrix form.
EquivalenceCheck equivalence_residual(const BuckPlant& plant, double d, int harmonics);

struct TaylorCoefficients {
  double delta0 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
};

/// delta0 = (1-2D)/2, delta1 = (-1+2D-2D^2)/4, delta2 = (-D+3D^2-2D^3)/12.
TaylorCoefficients taylor_coefficients(double duty);

/// C (sum_{n<=order} delta_n(D) A^n T^n) B, the truncated TEM coefficient.
double taylor_boundary_coefficient(const BuckPlant& plant, double duty, int order);

/// Truncated TEM condition: taylor coefficient·v_s - h'(d).
///
/// Accurate only while the plant poles are small against the switching
/// frequency; with a pole near w_s the neglected terms dominate.
double taylor_pdb_residual(const BuckPlant& plant, double duty, double vs, int order = 2);

/// v_s solving the truncated condition.
double vs_critical_taylor(const BuckPlant& plant, double duty, int order = 2);

}  // namespace pwmstab
