#include "pwmstab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pwmstab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// e^{j angle}, exact at the real points of the unit circle.
Complex unit_circle_point(double angle) {
  if (angle == 0.0) return {1.0, 0.0};
  if (angle == kPi || angle == -kPi) return {-1.0, 0.0};
  return std::polar(1.0, angle);
}

struct Propagators {
  Matrix e1;  // e^{A1 d}
  Matrix e2;  // e^{A2 (T - d)}
};

Propagators stage_propagators(const SwitchedLinearModel& model, const RampSignal& ramp,
                              const SteadyState& ss) {
  if (!(ss.d > 0.0 && ss.d < ramp.period)) {
    throw Error(ErrorCode::Domain, "linearisation needs an interior switching instant");
  }
  if (ss.x0_switch.size() != model.dimension()) {
    throw Error(ErrorCode::Dimension, "steady state does not match the model dimension");
  }
  return {mat_exp(model.a1, ss.d), mat_exp(model.a2, ramp.period - ss.d)};
}

}  // namespace

const char* to_string(Classification c) {
  switch (c) {
    case Classification::Stable: return "Stable";
    case Classification::PeriodDoubling: return "PDB";
    case Classification::SaddleNode: return "SNB";
    case Classification::NeimarkSacker: return "NSB";
    case Classification::Unstable: return "Unstable";
  }
  return "Unknown";
}

JacobianDecomposition jacobian(const SwitchedLinearModel& model, const RampSignal& ramp,
                               const InputVector& u, const SteadyState& ss) {
  model.validate();
  ramp.validate();
  const auto [e1, e2] = stage_propagators(model, ramp, ss);
  const OrbitDerivatives od = orbit_derivatives(model, u, ss);
  const double slope = ramp_slope(ramp);
  const double c_xdot = model.c.dot(od.xdot_minus);
  const double denom = c_xdot - slope;
  if (!(std::abs(denom) > 1e-12 * std::max(std::abs(c_xdot), std::abs(slope)))) {
    throw Error(ErrorCode::Grazing,
                "switching condition is tangent to the ramp (C xdot(d-) == h'(d))");
  }
  const Vector jump = od.xdot_minus - od.xdot_plus;
  const Eigen::Index n = model.dimension();

  JacobianDecomposition jd;
  jd.phi = e2 * (Matrix::Identity(n, n) - jump * model.c / denom) * e1;
  jd.phi0 = e2 * e1;
  jd.gamma = e2 * jump;
  jd.psi = model.c * e1 / denom;
  return jd;
}

StabilityReport classify_matrix(const Matrix& phi, double class_tol) {
  StabilityReport report;
  report.eigenvalues = eigenvalues(phi);
  std::stable_sort(report.eigenvalues.begin(), report.eigenvalues.end(),
                   [](Complex a, Complex b) { return std::abs(a) > std::abs(b); });
  if (report.eigenvalues.empty()) return report;

  const Complex critical = report.eigenvalues.front();
  report.critical_eigenvalue = critical;
  report.spectral_radius = std::abs(critical);

  if (std::abs(critical + 1.0) <= class_tol) {
    report.classification = Classification::PeriodDoubling;
  } else if (std::abs(critical - 1.0) <= class_tol) {
    report.classification = Classification::SaddleNode;
  } else if (std::abs(report.spectral_radius - 1.0) <= class_tol) {
    report.classification = Classification::NeimarkSacker;
  } else if (report.spectral_radius < 1.0 - class_tol) {
    report.classification = Classification::Stable;
  } else {
    report.classification = Classification::Unstable;
  }
  return report;
}

StabilityReport classify(const JacobianDecomposition& jd, double class_tol) {
  return classify_matrix(jd.phi, class_tol);
}

CriticalCondition::CriticalCondition(const SwitchedLinearModel& model, const RampSignal& ramp,
                                     const InputVector& u, const SteadyState& ss) {
  model.validate();
  ramp.validate();
  const auto [e1, e2] = stage_propagators(model, ramp, ss);
  const OrbitDerivatives od = orbit_derivatives(model, u, ss);
  phi0_ = e2 * e1;
  gamma_ = e2 * (od.xdot_minus - od.xdot_plus);
  c_e1_ = model.c * e1;
  c_xdot_minus_ = model.c.dot(od.xdot_minus);
  ramp_slope_ = pwmstab::ramp_slope(ramp);
}

Complex CriticalCondition::value(Complex lambda) const {
  const Eigen::Index n = phi0_.rows();
  const ComplexMatrix shifted =
      lambda * ComplexMatrix::Identity(n, n) - phi0_.cast<Complex>();
  ComplexVector resolvent_gamma;
  try {
    resolvent_gamma = solve_complex(shifted, gamma_.cast<Complex>());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Singular) throw;
    throw Error(ErrorCode::Precondition, "lambda is an eigenvalue of Phi0");
  }
  return c_xdot_minus_ + (c_e1_.cast<Complex>() * resolvent_gamma)(0);
}

double CriticalCondition::real_resolvent_term(double lambda) const {
  const Eigen::Index n = phi0_.rows();
  const Matrix shifted = lambda * Matrix::Identity(n, n) - phi0_;
  try {
    return c_e1_.dot(solve_real(shifted, gamma_));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Singular) throw;
    throw Error(ErrorCode::Precondition, "lambda is an eigenvalue of Phi0");
  }
}

double CriticalCondition::pdb_residual() const {
  // (-I - Phi0)^{-1} = -(I + Phi0)^{-1}
  return c_xdot_minus_ + real_resolvent_term(-1.0) - ramp_slope_;
}

double CriticalCondition::snb_residual() const {
  return c_xdot_minus_ + real_resolvent_term(1.0) - ramp_slope_;
}

Complex CriticalCondition::nsb_residual(double theta) const {
  const double wrapped = std::remainder(theta, 2.0 * kPi);
  if (std::abs(wrapped) < 1e-9 || std::abs(std::abs(wrapped) - kPi) < 1e-9) {
    throw Error(ErrorCode::Domain, "Neimark-Sacker angle must avoid 0 and pi");
  }
  return value(unit_circle_point(theta)) - ramp_slope_;
}

Complex CriticalCondition::loop_gain(Complex z) const {
  const double denom = c_xdot_minus_ - ramp_slope_;
  if (!(std::abs(denom) > 1e-12 * std::max(std::abs(c_xdot_minus_), std::abs(ramp_slope_)))) {
    throw Error(ErrorCode::Grazing,
                "switching condition is tangent to the ramp (C xdot(d-) == h'(d))");
  }
  // Psi (zI - Phi0)^{-1} Gamma = (S(z) - C xdot-) / (C xdot- - h')
  return (value(z) - c_xdot_minus_) / denom;
}

Complex general_critical_value(const SwitchedLinearModel& model, const RampSignal& ramp,
                               const InputVector& u, const SteadyState& ss, Complex lambda) {
  return CriticalCondition(model, ramp, u, ss).value(lambda);
}

double pdb_residual(const SwitchedLinearModel& model, const RampSignal& ramp,
                    const InputVector& u, const SteadyState& ss) {
  return CriticalCondition(model, ramp, u, ss).pdb_residual();
}

double snb_residual(const SwitchedLinearModel& model, const RampSignal& ramp,
                    const InputVector& u, const SteadyState& ss) {
  return CriticalCondition(model, ramp, u, ss).snb_residual();
}

Complex nsb_residual(const SwitchedLinearModel& model, const RampSignal& ramp,
                     const InputVector& u, const SteadyState& ss, double theta) {
  return CriticalCondition(model, ramp, u, ss).nsb_residual(theta);
}

DutyFamily fixed_input_family(const SwitchedLinearModel& model, const RampSignal& ramp,
                              const InputVector& u) {
  return [model, ramp, u](double duty) {
    const double d = switching_instant(model.edge, duty, ramp.period);
    return OperatingPoint{model, ramp, u, steady_state_at_instant(model, ramp, u, d)};
  };
}

BoundaryCurve s_plot(const DutyFamily& family, Complex lambda,
                     std::span<const double> duty_grid) {
  BoundaryCurve curve{"D", {}};
  curve.samples.reserve(duty_grid.size());
  for (const double duty : duty_grid) {
    CurveSample sample{duty, Complex(kNaN, kNaN), kNaN, true};
    try {
      const OperatingPoint op = family(duty);
      const CriticalCondition cond(op.model, op.ramp, op.u, op.ss);
      sample.value = cond.value(lambda);
      sample.reference = cond.ramp_slope();
      sample.singular = false;
    } catch (const Error&) {
      // recorded as singular
    }
    curve.samples.push_back(sample);
  }
  return curve;
}

BoundaryCurve f_plot(const SwitchedLinearModel& model, const RampSignal& ramp,
                     const InputVector& u, const SteadyState& ss,
                     std::span<const double> theta_grid) {
  const CriticalCondition cond(model, ramp, u, ss);
  BoundaryCurve curve{"theta", {}};
  curve.samples.reserve(theta_grid.size());
  for (const double theta : theta_grid) {
    CurveSample sample{theta, Complex(kNaN, kNaN), kNaN, true};
    try {
      sample.value = cond.value(unit_circle_point(theta));
      sample.reference = cond.ramp_slope();
      sample.singular = false;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Precondition) throw;
    }
    curve.samples.push_back(sample);
  }
  return curve;
}

BoundaryCurve nyquist(const SwitchedLinearModel& model, const RampSignal& ramp,
                      const InputVector& u, const SteadyState& ss,
                      std::span<const double> omega_grid) {
  const CriticalCondition cond(model, ramp, u, ss);
  BoundaryCurve curve{"omega", {}};
  curve.samples.reserve(omega_grid.size());
  for (const double omega : omega_grid) {
    CurveSample sample{omega, Complex(kNaN, kNaN), kNaN, true};
    try {
      sample.value = cond.loop_gain(unit_circle_point(omega * ramp.period));
      sample.reference = -1.0;
      sample.singular = false;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Precondition) throw;
    }
    curve.samples.push_back(sample);
  }
  return curve;
}

std::vector<double> theta_grid(int count) {
  if (count < 1) throw Error(ErrorCode::Domain, "theta grid needs at least one point");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    grid[i] = -kPi + 2.0 * kPi * (i + 1) / count;
  }
  grid.back() = kPi;
  return grid;
}

std::vector<double> linear_grid(double lo, double hi, int count) {
  if (count < 2) throw Error(ErrorCode::Domain, "grid needs at least two points");
  if (!(lo < hi)) throw Error(ErrorCode::Domain, "grid requires lo < hi");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    grid[i] = lo + (hi - lo) * i / (count - 1);
  }
  grid.back() = hi;
  return grid;
}

}  // namespace pwmstab
