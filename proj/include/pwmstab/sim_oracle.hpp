#pragma once

#include <span>
#include <vector>

#include "pwmstab/model.hpp"

namespace pwmstab {

// Time-domain reference for the analytic modules. Stages are linear, so each
// stage is propagated exactly with matrix exponentials; the only numerical
// approximation is locating the comparator event.

enum class Saturation {
  None,
  AtStart,    ///< h(0) >= y(0): switched immediately, whole cycle in S2
  FullCycle,  ///< comparator never fired, whole cycle in S1
};

struct SimOptions {
  int event_grid = 512;  ///< scan points per cycle before root refinement
};

struct CycleResult {
  Vector x_out;      ///< x((n+1)T)
  Vector x_switch;   ///< state at the event
  double d_event = 0.0;
  Saturation saturation = Saturation::None;
};

/// One clock period from `x_in`: S1 until the first instant with
/// h(t) >= y(t), then S2 to the end of the period.
CycleResult simulate_cycle(const SwitchedLinearModel& model, const RampSignal& ramp,
                           const InputVector& u, const Vector& x_in,
                           const SimOptions& options = {});

/// x_n -> x_{n+1}.
Vector stroboscopic_map(const SwitchedLinearModel& model, const RampSignal& ramp,
                        const InputVector& u, const Vector& x, const SimOptions& options = {});

struct CycleRecord {
  double t_start = 0.0;
  double d_event = 0.0;
  Saturation saturation = Saturation::None;
  Vector x_start;   ///< x(nT)
  Vector x_switch;
};

struct Trajectory {
  std::vector<CycleRecord> cycles;
  Vector final_state;

  /// Stroboscopic samples x(nT) for the last `count` cycles.
  std::vector<Vector> tail(std::size_t count) const;
};

Trajectory simulate(const SwitchedLinearModel& model, const RampSignal& ramp,
                    const InputVector& u, const Vector& x0, int cycles,
                    const SimOptions& options = {});

/// Central-difference Jacobian of the stroboscopic map, column step
/// eps·max(|x_j|, 1). Error(OracleInvalid) if a perturbed cycle saturates.
Matrix fd_jacobian(const SwitchedLinearModel& model, const RampSignal& ramp,
                   const InputVector& u, const Vector& x_fixed, double eps = 1e-6,
                   const SimOptions& options = {});

/// Plain fixed-point iteration of the stroboscopic map until
/// ||map(x) - x|| <= 1e-11 (1 + ||x||). Converges only to stable orbits;
/// Error(NoConvergence) after `max_iter` iterations.
Vector find_fixed_point(const SwitchedLinearModel& model, const RampSignal& ramp,
                        const InputVector& u, const Vector& x_guess, int max_iter = 20000,
                        const SimOptions& options = {});

struct PeriodResult {
  bool periodic = false;
  int period = 0;  ///< 1..8 when periodic
};

/// Smallest k <= 8 with ||x_{n+k} - x_n|| <= tol (1 + ||x_n||) over the whole
/// tail. Requires at least 64 samples.
PeriodResult detect_period(std::span<const Vector> tail, double tol = 1e-6);

struct PeriodOptions {
  int transient = 512;
  int tail = 64;
  double tol = 1e-6;
  SimOptions sim;
};

/// Runs `transient` cycles from x0, then classifies the next `tail` samples.
PeriodResult simulate_period(const SwitchedLinearModel& model, const RampSignal& ramp,
                             const InputVector& u, const Vector& x0,
                             const PeriodOptions& options = {});

}  // namespace pwmstab
