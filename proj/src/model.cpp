#include "pwmstab/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace pwmstab {

const char* to_string(Edge edge) { return edge == Edge::TEM ? "TEM" : "LEM"; }

double RampSignal::angular_frequency() const { return 2.0 * std::numbers::pi / period; }

void RampSignal::validate() const {
  if (!std::isfinite(vl) || !std::isfinite(vh) || !std::isfinite(period)) {
    throw Error(ErrorCode::Domain, "ramp parameters must be finite");
  }
  if (!(vh > vl)) throw Error(ErrorCode::Domain, "ramp requires Vh > Vl");
  if (!(period > 0.0)) throw Error(ErrorCode::Domain, "ramp period must be positive");
}

Vector InputVector::as_vector() const {
  Vector u(2);
  u << vr, vs;
  return u;
}

namespace {

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " must be " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    throw Error(ErrorCode::Dimension, os.str());
  }
  require_finite(m, name);
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

void SwitchedLinearModel::validate() const {
  const Eigen::Index n = a1.rows();
  if (n < 1) throw Error(ErrorCode::Dimension, "A1 must be at least 1x1");
  require_shape(a1, n, n, "A1");
  require_shape(a2, n, n, "A2");
  require_shape(b1, n, 2, "B1");
  require_shape(b2, n, 2, "B2");
  require_shape(c, 1, n, "C");
  require_shape(dmat, 1, 2, "D");
  if (e1) require_shape(*e1, 1, n, "E1");
  if (e2) require_shape(*e2, 1, n, "E2");
}

bool SwitchedLinearModel::operator==(const SwitchedLinearModel& o) const {
  const auto same_opt = [](const std::optional<RowVector>& x, const std::optional<RowVector>& y) {
    return x.has_value() == y.has_value() && (!x || same(*x, *y));
  };
  return edge == o.edge && same(a1, o.a1) && same(a2, o.a2) && same(b1, o.b1) &&
         same(b2, o.b2) && same(c, o.c) && same(dmat, o.dmat) && same_opt(e1, o.e1) &&
         same_opt(e2, o.e2);
}

double ramp_value(const RampSignal& ramp, double t) {
  const double phase = t / ramp.period;
  return ramp.vl + ramp.amplitude() * (phase - std::floor(phase));
}

double ramp_in_cycle(const RampSignal& ramp, double t) {
  return ramp.vl + ramp.amplitude() * (t / ramp.period);
}

double ramp_slope(const RampSignal& ramp) { return ramp.amplitude() / ramp.period; }

double compensator_output(const SwitchedLinearModel& model, const Vector& x,
                          const InputVector& u) {
  if (x.size() != model.c.size()) {
    throw Error(ErrorCode::Dimension, "state length does not match C");
  }
  return model.c.dot(x) + model.dmat(0) * u.vr + model.dmat(1) * u.vs;
}

double switching_instant(Edge edge, double duty, double period) {
  return edge == Edge::TEM ? duty * period : (1.0 - duty) * period;
}

double duty_from_instant(Edge edge, double d, double period) {
  return edge == Edge::TEM ? d / period : 1.0 - d / period;
}

SwitchedLinearModel preset_vmc_buck(double inductance, double capacitance, double resistance,
                                    double gain, Edge edge) {
  if (!(inductance > 0.0) || !(capacitance > 0.0) || !(resistance > 0.0)) {
    throw Error(ErrorCode::Domain, "buck preset needs positive L, C and R");
  }
  if (!std::isfinite(gain) || !std::isfinite(inductance) || !std::isfinite(capacitance) ||
      !std::isfinite(resistance)) {
    throw Error(ErrorCode::Domain, "buck preset parameters must be finite");
  }
  Matrix a(2, 2);
  a << 0.0, -1.0 / inductance, 1.0 / capacitance, -1.0 / (resistance * capacitance);

  Matrix on = Matrix::Zero(2, 2);
  on(0, 1) = 1.0 / inductance;
  const Matrix off = Matrix::Zero(2, 2);

  SwitchedLinearModel m;
  m.a1 = a;
  m.a2 = a;
  m.b1 = edge == Edge::TEM ? on : off;
  m.b2 = edge == Edge::TEM ? off : on;
  m.c = RowVector(2);
  m.c << 0.0, -gain;
  m.dmat = RowVector(2);
  m.dmat << gain, 0.0;
  m.edge = edge;
  return m;
}

std::optional<BuckColumns> detect_buck_structure(const SwitchedLinearModel& model) {
  if (!same(model.a1, model.a2)) return std::nullopt;
  if (model.b1.cols() != 2 || model.b2.cols() != 2) return std::nullopt;
  // Column 0 carries v_r, column 1 carries v_s.
  if (model.b1.col(1) != model.b2.col(1) && model.b1.col(0) == model.b2.col(0)) {
    const bool s1_off = model.b1.col(1).isZero(0.0);
    const bool s2_off = model.b2.col(1).isZero(0.0);
    if (s1_off == s2_off) return std::nullopt;
    // The v_s column belongs in the ON stage.
    const bool on_first = !s1_off;
    if (on_first != (model.edge == Edge::TEM)) return std::nullopt;
    return BuckColumns{on_first ? Vector(model.b1.col(1)) : Vector(model.b2.col(1)),
                       Vector(model.b1.col(0))};
  }
  return std::nullopt;
}

}  // namespace pwmstab
