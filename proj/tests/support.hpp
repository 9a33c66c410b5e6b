#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "pwmstab/buck.hpp"
#include "pwmstab/sim_oracle.hpp"
#include "pwmstab/stability.hpp"

namespace pwmstab::testing {

// Desk-scale voltage-mode buck: L = 20 mH, Cf = 47 uF, R = 22 ohm, T = 400 us.
inline constexpr double kL = 20e-3;
inline constexpr double kC = 47e-6;
inline constexpr double kR = 22.0;
inline constexpr double kGain = 8.4;
inline constexpr double kPeriod = 400e-6;

inline RampSignal buck_ramp() { return {3.8, 8.2, kPeriod}; }

/// The LEM loop needs the opposite feedback sign for a positive boundary voltage.
inline SwitchedLinearModel buck_model(Edge edge) {
  return preset_vmc_buck(kL, kC, kR, edge == Edge::TEM ? kGain : -kGain, edge);
}

struct BuckCase {
  SwitchedLinearModel model;
  RampSignal ramp;
  InputVector u;
  SteadyState ss;
};

/// Operating point with v_r trimmed so the orbit switches at the instant of `duty`.
inline BuckCase buck_case(Edge edge, double duty, double vs) {
  BuckCase bc{buck_model(edge), buck_ramp(), {0.0, vs}, {}};
  const double d = switching_instant(edge, duty, bc.ramp.period);
  bc.u = trim_reference(bc.model, bc.ramp, bc.u, d);
  bc.ss = steady_state_at_instant(bc.model, bc.ramp, bc.u, d);
  return bc;
}

/// Default acceptance operating points: D = 0.4 (TEM) and D = 0.6 (LEM), both d = 0.4 T.
inline double default_duty(Edge edge) { return edge == Edge::TEM ? 0.4 : 0.6; }

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double max_entry_rel_err(const Matrix& got, const Matrix& want) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < want.rows(); ++i) {
    for (Eigen::Index j = 0; j < want.cols(); ++j) {
      worst = std::max(worst, rel_err(got(i, j), want(i, j)));
    }
  }
  return worst;
}

/// Greedy multiset match; returns the largest pairing distance.
inline double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (const Complex& x : a) {
    auto best = std::min_element(b.begin(), b.end(), [&](const Complex& p, const Complex& q) {
      return std::abs(p - x) < std::abs(q - x);
    });
    worst = std::max(worst, std::abs(*best - x));
    b.erase(best);
  }
  return worst;
}

/// Random matrix with entries in [-scale, scale] shifted so every eigenvalue
/// has real part below -margin (Gershgorin).
inline Matrix random_stable(std::mt19937_64& rng, int n, double scale, double margin) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = dist(rng);
  for (int i = 0; i < n; ++i) {
    const double radius = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
    a(i, i) = -radius - margin - std::abs(dist(rng));
  }
  return a;
}

/// Two-state model with a lightly damped rotation; the v_s input drives the
/// first state during the ON stage only. The output row decides which kind
/// of unit-circle crossing the orbit undergoes as the ramp amplitude varies.
inline SwitchedLinearModel synthetic_model(double c0, double c1) {
  Matrix a(2, 2);
  a << -0.3, -1.0, 1.0, -0.3;
  Matrix b1 = Matrix::Zero(2, 2);
  b1(0, 1) = 1.0;
  RowVector c(2);
  c << c0, c1;
  RowVector dmat(2);
  dmat << 1.0, 0.0;
  return {a, a, b1, Matrix::Zero(2, 2), c, dmat, {}, {}, Edge::TEM};
}

/// Operating point of `model` with T = 1, Vl = 0, the given ramp top and v_r
/// trimmed so the orbit switches at d = T/2.
inline BuckCase synthetic_case(const SwitchedLinearModel& model, double vh) {
  BuckCase op{model, {0.0, vh, 1.0}, {0.0, 1.0}, {}};
  op.u = trim_reference(op.model, op.ramp, op.u, 0.5);
  op.ss = steady_state_at_instant(op.model, op.ramp, op.u, 0.5);
  return op;
}

/// Continuation in the ramp top: returns the operating point where the
/// spectral radius of the cycle-map Jacobian reaches 1 inside [lo, hi].
inline BuckCase steer_to_unit_circle(const SwitchedLinearModel& model, double lo, double hi) {
  const auto excess = [&](double vh) {
    const BuckCase op = synthetic_case(model, vh);
    return classify(jacobian(op.model, op.ramp, op.u, op.ss)).spectral_radius - 1.0;
  };
  return synthetic_case(model, find_root(excess, lo, hi, 1e-15));
}

}  // namespace pwmstab::testing
