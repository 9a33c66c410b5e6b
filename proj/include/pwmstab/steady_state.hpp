#pragma once

#include "pwmstab/model.hpp"

namespace pwmstab {

/// States of the T-periodic orbit at the clock edge and at the switching instant.
struct BoundaryStates {
  Vector start;      ///< x0(0)
  Vector at_switch;  ///< x0(d)
};

struct SteadyState {
  double d = 0.0;     ///< switching instant, seconds, in (0, T)
  double duty = 0.0;  ///< d/T for TEM, 1 - d/T for LEM
  Vector x0_start;
  Vector x0_switch;
  double y_switch = 0.0;    ///< y0(d) = C x0(d) + D u
  int candidate_count = 0;  ///< sign changes found on the search grid
};

/// One-sided derivatives of the orbit at the switching instant.
struct OrbitDerivatives {
  Vector xdot_minus;  ///< A1 x0(d) + B1 u
  Vector xdot_plus;   ///< A2 x0(d) + B2 u
};

struct SteadyStateOptions {
  int grid_points = 256;
  double d_tol_rel = 1e-12;  ///< root tolerance as a fraction of T
};

/// Periodic orbit that switches at `d`: composes the two stage flows and solves
///   (I - e^{A2(T-d)} e^{A1 d}) x0(0) = e^{A2(T-d)} ∫_0^d e^{A1 s} ds B1 u
///                                     + ∫_0^{T-d} e^{A2 s} ds B2 u.
/// Error(DegenerateOrbit) if the left matrix is singular.
BoundaryStates boundary_states(const SwitchedLinearModel& model, const RampSignal& ramp,
                               const InputVector& u, double d);

/// C x0(d) + D u - h(d) for the orbit that switches at `d`.
double switching_residual(const SwitchedLinearModel& model, const RampSignal& ramp,
                          const InputVector& u, double d);

/// Locates every sign change of `switching_residual` on a uniform grid over
/// [0, T], refines each one, and returns the orbit with the earliest switching
/// instant. Error(NoSwitching) when no interior crossing exists,
/// Error(DegenerateOrbit) when the orbit cannot be formed at any grid point.
SteadyState solve_periodic_orbit(const SwitchedLinearModel& model, const RampSignal& ramp,
                                 const InputVector& u, const SteadyStateOptions& options = {});

/// Orbit forced to switch at `d` without imposing the comparator equation.
/// Used for duty-parameterised sweeps.
SteadyState steady_state_at_instant(const SwitchedLinearModel& model, const RampSignal& ramp,
                                    const InputVector& u, double d);

/// Returns `u` with v_r adjusted so the orbit switching at `d` satisfies
/// y0(d) = h(d). The residual is affine in v_r; Error(Domain) if v_r has no
/// influence on it.
InputVector trim_reference(const SwitchedLinearModel& model, const RampSignal& ramp,
                           const InputVector& u, double d);

OrbitDerivatives orbit_derivatives(const SwitchedLinearModel& model, const InputVector& u,
                                   const SteadyState& ss);

}  // namespace pwmstab
