#include "pwmstab/steady_state.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace pwmstab {

BoundaryStates boundary_states(const SwitchedLinearModel& model, const RampSignal& ramp,
                               const InputVector& u, double d) {
  model.validate();
  ramp.validate();
  const double period = ramp.period;
  if (!(d >= 0.0 && d <= period)) {
    throw Error(ErrorCode::Domain, "switching instant must lie in [0, T]");
  }
  const Eigen::Index n = model.dimension();
  const Vector uv = u.as_vector();

  const Matrix e1 = mat_exp(model.a1, d);
  const Matrix e2 = mat_exp(model.a2, period - d);
  const Vector forced1 = mat_exp_integral(model.a1, d) * (model.b1 * uv);
  const Vector forced2 = mat_exp_integral(model.a2, period - d) * (model.b2 * uv);

  const Matrix lhs = Matrix::Identity(n, n) - e2 * e1;
  Vector start;
  try {
    start = solve_real(lhs, e2 * forced1 + forced2);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Singular) throw;
    throw Error(ErrorCode::DegenerateOrbit,
                "no unique periodic orbit: the open-loop cycle map has a multiplier at 1");
  }
  Vector at_switch = e1 * start + forced1;
  return {std::move(start), std::move(at_switch)};
}

double switching_residual(const SwitchedLinearModel& model, const RampSignal& ramp,
                          const InputVector& u, double d) {
  const BoundaryStates states = boundary_states(model, ramp, u, d);
  return compensator_output(model, states.at_switch, u) - ramp_in_cycle(ramp, d);
}

SteadyState steady_state_at_instant(const SwitchedLinearModel& model, const RampSignal& ramp,
                                    const InputVector& u, double d) {
  BoundaryStates states = boundary_states(model, ramp, u, d);
  SteadyState ss;
  ss.d = d;
  ss.duty = duty_from_instant(model.edge, d, ramp.period);
  ss.y_switch = compensator_output(model, states.at_switch, u);
  ss.x0_start = std::move(states.start);
  ss.x0_switch = std::move(states.at_switch);
  ss.candidate_count = 1;
  return ss;
}

SteadyState solve_periodic_orbit(const SwitchedLinearModel& model, const RampSignal& ramp,
                                 const InputVector& u, const SteadyStateOptions& options) {
  model.validate();
  ramp.validate();
  if (options.grid_points < 2) throw Error(ErrorCode::Domain, "grid_points must be >= 2");
  if (!(options.d_tol_rel > 0.0)) throw Error(ErrorCode::Domain, "d_tol_rel must be positive");

  const double period = ramp.period;
  const int n = options.grid_points;
  const auto residual = [&](double d) { return switching_residual(model, ramp, u, d); };

  std::vector<std::optional<double>> values(static_cast<std::size_t>(n) + 1);
  bool any_valid = false;
  for (int i = 0; i <= n; ++i) {
    try {
      values[i] = residual(period * i / n);
      any_valid = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateOrbit) throw;
    }
  }
  if (!any_valid) {
    throw Error(ErrorCode::DegenerateOrbit, "periodic orbit is degenerate at every grid point");
  }

  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    if (!values[i] || !values[i + 1]) continue;
    const double lo = *values[i];
    const double hi = *values[i + 1];
    if (lo == 0.0) {
      if (i > 0) roots.push_back(period * i / n);
      continue;
    }
    if ((lo > 0.0) != (hi > 0.0) && hi != 0.0) {
      roots.push_back(
          find_root(residual, period * i / n, period * (i + 1) / n, options.d_tol_rel * period));
    }
  }
  if (roots.empty()) {
    throw Error(ErrorCode::NoSwitching,
                "the converter never switches in steady state (duty saturated)");
  }

  SteadyState ss = steady_state_at_instant(model, ramp, u, roots.front());
  ss.candidate_count = static_cast<int>(roots.size());
  return ss;
}

InputVector trim_reference(const SwitchedLinearModel& model, const RampSignal& ramp,
                           const InputVector& u, double d) {
  InputVector shifted = u;
  shifted.vr = u.vr + 1.0;
  const double r0 = switching_residual(model, ramp, u, d);
  const double r1 = switching_residual(model, ramp, shifted, d);
  const double slope = r1 - r0;
  if (!(std::abs(slope) > 0.0)) {
    throw Error(ErrorCode::Domain, "v_r does not influence the switching condition");
  }
  InputVector trimmed = u;
  trimmed.vr = u.vr - r0 / slope;
  return trimmed;
}

OrbitDerivatives orbit_derivatives(const SwitchedLinearModel& model, const InputVector& u,
                                   const SteadyState& ss) {
  const Vector uv = u.as_vector();
  return {model.a1 * ss.x0_switch + model.b1 * uv, model.a2 * ss.x0_switch + model.b2 * uv};
}

}  // namespace pwmstab
