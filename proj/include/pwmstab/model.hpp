#pragma once

#include <optional>

#include "pwmstab/numerics.hpp"

namespace pwmstab {

/// Modulation edge. TEM: stage S1 is the ON stage. LEM: stage S1 is OFF and
/// S2 is ON. The clock always starts a cycle in S1.
enum class Edge { TEM, LEM };

const char* to_string(Edge edge);

/// Sawtooth h(t) = Vl + (Vh - Vl)·frac(t / T).
struct RampSignal {
  double vl = 0.0;
  double vh = 1.0;
  double period = 1.0;

  double amplitude() const { return vh - vl; }
  double frequency() const { return 1.0 / period; }
  double angular_frequency() const;

  /// Throws Error(Domain) unless Vh > Vl, T > 0 and all finite.
  void validate() const;

  bool operator==(const RampSignal&) const = default;
};

/// External inputs u = (v_r, v_s).
struct InputVector {
  double vr = 0.0;
  double vs = 0.0;

  Vector as_vector() const;

  bool operator==(const InputVector&) const = default;
};

/// Two-stage switched linear converter with compensator output y = Cx + Du.
///
/// Stage k follows x' = A_k x + B_k u with u = (v_r, v_s). The clock switches
/// to S1 at t = nT; the comparator switches to S2 once h(t) >= y(t).
/// E1/E2 are optional per-stage output maps carried for completeness; nothing
/// in the library reads them.
struct SwitchedLinearModel {
  Matrix a1;
  Matrix a2;
  Matrix b1;  ///< N x 2
  Matrix b2;  ///< N x 2
  RowVector c;
  RowVector dmat;  ///< 1 x 2
  std::optional<RowVector> e1;
  std::optional<RowVector> e2;
  Edge edge = Edge::TEM;

  Eigen::Index dimension() const { return a1.rows(); }

  /// Throws Error(Dimension) or Error(Domain) when the invariants fail.
  void validate() const;

  bool operator==(const SwitchedLinearModel& other) const;
};

/// Column partition of a buck model: B multiplies v_s, B12 multiplies v_r.
struct BuckColumns {
  Vector b;
  Vector b12;
};

/// h(t), periodic with period T.
double ramp_value(const RampSignal& ramp, double t);

/// h restricted to one clock cycle, t in [0, T]; h(T) is the pre-reset value Vh.
double ramp_in_cycle(const RampSignal& ramp, double t);

/// dh/dt = (Vh - Vl) / T.
double ramp_slope(const RampSignal& ramp);

/// y = Cx + Du.
double compensator_output(const SwitchedLinearModel& model, const Vector& x,
                          const InputVector& u);

/// Switching instant inside the cycle for duty D: DT (TEM) or (1 - D)T (LEM).
double switching_instant(Edge edge, double duty, double period);

/// Inverse of `switching_instant`.
double duty_from_instant(Edge edge, double d, double period);

/// Voltage-mode buck with proportional feedback y = g (v_r - v_o).
///
/// States are (i_L, v_C). The v_s column (1/L, 0) sits in the ON stage: B1
/// for TEM, B2 for LEM. `gain` may be negative to flip the feedback sense.
SwitchedLinearModel preset_vmc_buck(double inductance, double capacitance, double resistance,
                                    double gain, Edge edge);

/// Recognises the buck structure A1 == A2 with one stage lacking the v_s
/// column and both stages sharing the v_r column. Empty otherwise.
std::optional<BuckColumns> detect_buck_structure(const SwitchedLinearModel& model);

}  // namespace pwmstab
