#include "pwmstab/buck.hpp"

#include <cmath>
#include <limits>

namespace pwmstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_duty(double duty) {
  if (!(duty > 0.0 && duty < 1.0)) throw Error(ErrorCode::Domain, "duty must lie in (0, 1)");
}

Vector solve_or_singular(const Matrix& m, const Vector& rhs, const char* what) {
  try {
    return solve_real(m, rhs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Singular) throw;
    throw Error(ErrorCode::Singular, std::string(what) + " is singular");
  }
}

// Coefficient plus the magnitude of its two contributions, for the
// boundary-at-infinity test.
struct Coefficient {
  double value;
  double scale;
};

Coefficient lem_terms(const BuckPlant& plant, double d) {
  plant.validate();
  const Eigen::Index n = plant.a.rows();
  const double period = plant.ramp.period;
  const Matrix id = Matrix::Identity(n, n);
  const Matrix e_t = mat_exp(plant.a, period);
  const double first = plant.c.dot(
      solve_or_singular(id + mat_exp(plant.a, -period), plant.b, "I + e^{-AT}"));
  const double second = plant.c.dot(solve_or_singular(
      id - e_t, (e_t - mat_exp(plant.a, d)) * plant.b, "I - e^{AT}"));
  return {first + second, std::abs(first) + std::abs(second)};
}

Coefficient tem_terms(const BuckPlant& plant, double d) {
  plant.validate();
  const Eigen::Index n = plant.a.rows();
  const double period = plant.ramp.period;
  const Matrix id = Matrix::Identity(n, n);
  const Matrix e_t = mat_exp(plant.a, period);
  const double first = plant.c.dot(
      solve_or_singular(id - e_t, (mat_exp(plant.a, d) - id) * plant.b, "I - e^{AT}"));
  const double second = plant.c.dot(solve_or_singular(id + e_t, plant.b, "I + e^{AT}"));
  return {first + second, std::abs(first) + std::abs(second)};
}

double critical_from(const Coefficient& coef, double slope) {
  if (!(std::abs(coef.value) > 1e-13 * coef.scale)) return kInf;
  return slope / coef.value;
}

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

void BuckPlant::validate() const {
  require_square(a, "buck A");
  require_finite(a, "buck A");
  const Eigen::Index n = a.rows();
  if (n < 1 || b.size() != n || c.size() != n) {
    throw Error(ErrorCode::Dimension, "buck plant B and C must match A");
  }
  ramp.validate();
}

std::optional<BuckPlant> buck_plant(const SwitchedLinearModel& model, const RampSignal& ramp) {
  model.validate();
  const auto columns = detect_buck_structure(model);
  if (!columns) return std::nullopt;
  return BuckPlant{model.a1, columns->b, model.c, ramp};
}

double lem_boundary_coefficient(const BuckPlant& plant, double d) {
  return lem_terms(plant, d).value;
}

double tem_boundary_coefficient(const BuckPlant& plant, double d) {
  return tem_terms(plant, d).value;
}

double vs_critical_lem(const BuckPlant& plant, double duty) {
  require_duty(duty);
  const double d = (1.0 - duty) * plant.ramp.period;
  return critical_from(lem_terms(plant, d), ramp_slope(plant.ramp));
}

double vs_critical_tem(const BuckPlant& plant, double duty) {
  require_duty(duty);
  const double d = duty * plant.ramp.period;
  return critical_from(tem_terms(plant, d), ramp_slope(plant.ramp));
}

double vs_critical(const BuckPlant& plant, Edge edge, double duty) {
  return edge == Edge::TEM ? vs_critical_tem(plant, duty) : vs_critical_lem(plant, duty);
}

double pdb_residual_lem(const BuckPlant& plant, double duty, double vs) {
  require_duty(duty);
  const double d = (1.0 - duty) * plant.ramp.period;
  return lem_boundary_coefficient(plant, d) * vs - ramp_slope(plant.ramp);
}

double pdb_residual_tem(const BuckPlant& plant, double duty, double vs) {
  require_duty(duty);
  const double d = duty * plant.ramp.period;
  return tem_boundary_coefficient(plant, d) * vs - ramp_slope(plant.ramp);
}

Complex transfer_eval(const BuckPlant& plant, Complex s) {
  plant.validate();
  const Eigen::Index n = plant.a.rows();
  const ComplexMatrix resolvent = s * ComplexMatrix::Identity(n, n) - plant.a.cast<Complex>();
  try {
    return (plant.c.cast<Complex>() * solve_complex(resolvent, plant.b.cast<Complex>()))(0);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Singular) throw;
    throw Error(ErrorCode::Pole, "transfer function evaluated at a pole of G");
  }
}

HarmonicBalanceResult harmonic_balance_vs(const BuckPlant& plant, double d, int harmonics,
                                          Edge edge) {
  plant.validate();
  if (harmonics < 1) throw Error(ErrorCode::Domain, "harmonic truncation must be >= 1");
  if (!(d > 0.0 && d < plant.ramp.period)) {
    throw Error(ErrorCode::Domain, "switching instant must lie in (0, T)");
  }
  const double ws = plant.ramp.angular_frequency();
  const double sign = edge == Edge::TEM ? -1.0 : 1.0;

  KahanSum real_sum;
  Complex last;
  for (int k = 1; k <= harmonics; ++k) {
    const Complex g_k = transfer_eval(plant, Complex(0.0, k * ws));
    const Complex g_half = transfer_eval(plant, Complex(0.0, (k - 0.5) * ws));
    const Complex phase = std::polar(1.0, k * ws * d);
    last = sign * ((1.0 - phase) * g_k - g_half);
    real_sum.add(last.real());
  }

  HarmonicBalanceResult result;
  result.series_real = real_sum.sum;
  result.tail_estimate = std::abs(last);
  result.terms = harmonics;
  result.vs = result.series_real != 0.0 ? plant.ramp.amplitude() / (2.0 * result.series_real)
                                        : kInf;
  return result;
}

EquivalenceCheck equivalence_residual(const BuckPlant& plant, double d, int harmonics) {
  const HarmonicBalanceResult hb = harmonic_balance_vs(plant, d, harmonics, Edge::LEM);
  EquivalenceCheck check;
  check.series_lhs = 2.0 * plant.ramp.frequency() * hb.series_real;
  check.matrix_rhs = lem_boundary_coefficient(plant, d);
  check.residual = std::abs(check.series_lhs - check.matrix_rhs);
  check.tail_estimate = 2.0 * plant.ramp.frequency() * hb.tail_estimate;
  return check;
}

TaylorCoefficients taylor_coefficients(double duty) {
  if (!(duty >= 0.0 && duty <= 1.0)) throw Error(ErrorCode::Domain, "duty must lie in [0, 1]");
  const double d = duty;
  return {(1.0 - 2.0 * d) / 2.0, (-1.0 + 2.0 * d - 2.0 * d * d) / 4.0,
          (-d + 3.0 * d * d - 2.0 * d * d * d) / 12.0};
}

double taylor_boundary_coefficient(const BuckPlant& plant, double duty, int order) {
  plant.validate();
  if (order < 0 || order > 2) throw Error(ErrorCode::Domain, "Taylor order must be 0, 1 or 2");
  const TaylorCoefficients delta = taylor_coefficients(duty);
  const double deltas[3] = {delta.delta0, delta.delta1, delta.delta2};
  const Matrix at = plant.a * plant.ramp.period;
  Vector term = plant.b;  // (AT)^n B
  double total = 0.0;
  for (int n = 0; n <= order; ++n) {
    total += deltas[n] * plant.c.dot(term);
    term = at * term;
  }
  return total;
}

double taylor_pdb_residual(const BuckPlant& plant, double duty, double vs, int order) {
  require_duty(duty);
  return taylor_boundary_coefficient(plant, duty, order) * vs - ramp_slope(plant.ramp);
}

double vs_critical_taylor(const BuckPlant& plant, double duty, int order) {
  require_duty(duty);
  const double coef = taylor_boundary_coefficient(plant, duty, order);
  if (coef == 0.0) return kInf;
  return ramp_slope(plant.ramp) / coef;
}

}  // namespace pwmstab
