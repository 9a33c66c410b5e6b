#include "pwmstab/sim_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace pwmstab {

namespace {

void require_state(const SwitchedLinearModel& model, const Vector& x) {
  if (x.size() != model.dimension()) {
    throw Error(ErrorCode::Dimension, "state length does not match the model dimension");
  }
  if (!x.allFinite()) throw Error(ErrorCode::Divergence, "state is not finite");
}

}  // namespace

CycleResult simulate_cycle(const SwitchedLinearModel& model, const RampSignal& ramp,
                           const InputVector& u, const Vector& x_in, const SimOptions& options) {
  model.validate();
  ramp.validate();
  require_state(model, x_in);
  if (options.event_grid < 1) throw Error(ErrorCode::Domain, "event grid must be >= 1");

  const Eigen::Index n = model.dimension();
  const double period = ramp.period;
  const Vector uv = u.as_vector();
  const Vector drive1 = model.b1 * uv;
  const Vector drive2 = model.b2 * uv;
  const double y_offset = model.dmat.dot(uv);

  const auto event = [&](double t) {
    const Vector x = propagate_affine(model.a1, drive1, x_in, t);
    return ramp_in_cycle(ramp, t) - (model.c.dot(x) + y_offset);
  };

  CycleResult result;
  if (event(0.0) >= 0.0) {
    result.d_event = 0.0;
    result.saturation = Saturation::AtStart;
  } else {
    // Scan with a fixed-step propagator, then refine on the exact flow.
    const int steps = options.event_grid;
    const double dt = period / steps;
    Matrix block = Matrix::Zero(n + 1, n + 1);
    block.topLeftCorner(n, n) = model.a1;
    block.topRightCorner(n, 1) = drive1;
    const Matrix step = mat_exp(block, dt);
    const Matrix step_a = step.topLeftCorner(n, n);
    const Vector step_b = step.topRightCorner(n, 1);

    result.saturation = Saturation::FullCycle;
    result.d_event = period;
    Vector x = x_in;
    for (int i = 1; i <= steps; ++i) {
      x = step_a * x + step_b;
      if (!x.allFinite()) throw Error(ErrorCode::Divergence, "simulation diverged within a cycle");
      const double t = i == steps ? period : dt * i;
      if (ramp_in_cycle(ramp, t) - (model.c.dot(x) + y_offset) < 0.0) continue;
      const double t_prev = dt * (i - 1);
      if (event(t) < 0.0) continue;  // stepped and exact flows disagree in the last bits
      result.d_event = event(t_prev) >= 0.0 ? t_prev : bracket_root(event, t_prev, t, 0.0).root;
      result.saturation = Saturation::None;
      break;
    }
  }

  result.x_switch = propagate_affine(model.a1, drive1, x_in, result.d_event);
  result.x_out =
      result.d_event < period
          ? propagate_affine(model.a2, drive2, result.x_switch, period - result.d_event)
          : result.x_switch;
  if (!result.x_out.allFinite()) throw Error(ErrorCode::Divergence, "simulation diverged");
  return result;
}

Vector stroboscopic_map(const SwitchedLinearModel& model, const RampSignal& ramp,
                        const InputVector& u, const Vector& x, const SimOptions& options) {
  return simulate_cycle(model, ramp, u, x, options).x_out;
}

std::vector<Vector> Trajectory::tail(std::size_t count) const {
  const std::size_t first = cycles.size() > count ? cycles.size() - count : 0;
  std::vector<Vector> out;
  out.reserve(cycles.size() - first);
  for (std::size_t i = first; i < cycles.size(); ++i) out.push_back(cycles[i].x_start);
  return out;
}

Trajectory simulate(const SwitchedLinearModel& model, const RampSignal& ramp,
                    const InputVector& u, const Vector& x0, int cycles,
                    const SimOptions& options) {
  if (cycles < 0) throw Error(ErrorCode::Domain, "cycle count must be non-negative");
  Trajectory traj;
  traj.cycles.reserve(static_cast<std::size_t>(cycles));
  Vector x = x0;
  for (int k = 0; k < cycles; ++k) {
    CycleResult step = simulate_cycle(model, ramp, u, x, options);
    traj.cycles.push_back(
        {k * ramp.period, step.d_event, step.saturation, x, std::move(step.x_switch)});
    x = std::move(step.x_out);
  }
  traj.final_state = x;
  return traj;
}

Matrix fd_jacobian(const SwitchedLinearModel& model, const RampSignal& ramp,
                   const InputVector& u, const Vector& x_fixed, double eps,
                   const SimOptions& options) {
  if (!(eps > 0.0)) throw Error(ErrorCode::Domain, "finite-difference step must be positive");
  const Eigen::Index n = x_fixed.size();
  Matrix jac(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = eps * std::max(std::abs(x_fixed(j)), 1.0);
    Vector plus = x_fixed;
    Vector minus = x_fixed;
    plus(j) += h;
    minus(j) -= h;
    const CycleResult up = simulate_cycle(model, ramp, u, plus, options);
    const CycleResult down = simulate_cycle(model, ramp, u, minus, options);
    if (up.saturation != Saturation::None || down.saturation != Saturation::None) {
      throw Error(ErrorCode::OracleInvalid, "perturbation pushed the duty into saturation");
    }
    jac.col(j) = (up.x_out - down.x_out) / (2.0 * h);
  }
  return jac;
}

Vector find_fixed_point(const SwitchedLinearModel& model, const RampSignal& ramp,
                        const InputVector& u, const Vector& x_guess, int max_iter,
                        const SimOptions& options) {
  Vector x = x_guess;
  for (int iter = 0; iter < max_iter; ++iter) {
    Vector next = stroboscopic_map(model, ramp, u, x, options);
    if ((next - x).norm() <= 1e-11 * (1.0 + x.norm())) return next;
    x = std::move(next);
  }
  throw Error(ErrorCode::NoConvergence,
              "fixed-point iteration did not converge (orbit may be unstable)");
}

PeriodResult detect_period(std::span<const Vector> tail, double tol) {
  if (tail.size() < 64) throw Error(ErrorCode::Domain, "period detection needs >= 64 samples");
  for (std::size_t k = 1; k <= 8; ++k) {
    bool matches = true;
    for (std::size_t i = 0; i + k < tail.size() && matches; ++i) {
      matches = (tail[i + k] - tail[i]).norm() <= tol * (1.0 + tail[i].norm());
    }
    if (matches) return {true, static_cast<int>(k)};
  }
  return {false, 0};
}

PeriodResult simulate_period(const SwitchedLinearModel& model, const RampSignal& ramp,
                             const InputVector& u, const Vector& x0,
                             const PeriodOptions& options) {
  const Trajectory traj =
      simulate(model, ramp, u, x0, options.transient + options.tail, options.sim);
  const std::vector<Vector> samples = traj.tail(static_cast<std::size_t>(options.tail));
  return detect_period(samples, options.tol);
}

}  // namespace pwmstab
