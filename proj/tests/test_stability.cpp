#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"

using namespace pwmstab;
using namespace pwmstab::testing;

namespace {

constexpr double kPi = std::numbers::pi;

// Model whose stages share dynamics and inputs, so the switch has no effect.
BuckCase smooth_case() {
  Matrix a(2, 2);
  a << -1.0, 2.0, -3.0, -0.5;
  Matrix b(2, 2);
  b << 1.0, 0.5, 0.0, 1.0;
  RowVector c(2);
  c << 1.0, -0.5;
  const SwitchedLinearModel m{a, a, b, b, c, RowVector::Zero(2), {}, {}, Edge::TEM};
  const RampSignal r{-2.0, 2.0, 1.0};
  const InputVector u{0.3, 0.7};
  return {m, r, u, steady_state_at_instant(m, r, u, 0.5)};
}

Complex det2(const ComplexMatrix& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

}  // namespace

TEST_SUITE("jacobian") {
  TEST_CASE("no vector-field jump leaves the open-loop map") {
    const BuckCase sc = smooth_case();
    const JacobianDecomposition jd = jacobian(sc.model, sc.ramp, sc.u, sc.ss);
    CHECK(jd.gamma.isZero(0.0));
    CHECK(jd.phi.isApprox(jd.phi0, 1e-15));
    CHECK(jd.phi.isApprox(mat_exp(sc.model.a1, sc.ramp.period), 1e-13));
  }

  TEST_CASE("buck jacobian matches the simulated map") {
    for (Edge edge : {Edge::TEM, Edge::LEM}) {
      CAPTURE(to_string(edge));
      const BuckCase bc = buck_case(edge, default_duty(edge), 20.0);
      const JacobianDecomposition jd = jacobian(bc.model, bc.ramp, bc.u, bc.ss);
      const Matrix fd = fd_jacobian(bc.model, bc.ramp, bc.u, bc.ss.x0_start, 1e-6, {});
      CHECK(max_entry_rel_err(jd.phi, fd) <= 1e-6);
    }
  }

  TEST_CASE("ramp slope only enters the feedback row") {
    BuckCase bc = buck_case(Edge::TEM, 0.4, 20.0);
    const JacobianDecomposition base = jacobian(bc.model, bc.ramp, bc.u, bc.ss);
    bc.ramp.vh = bc.ramp.vl + 2.0 * bc.ramp.amplitude();
    const JacobianDecomposition scaled = jacobian(bc.model, bc.ramp, bc.u, bc.ss);
    CHECK(scaled.phi0 == base.phi0);
    CHECK(scaled.gamma == base.gamma);
    CHECK_FALSE(scaled.psi.isApprox(base.psi));
  }

  TEST_CASE("decomposition reassembles the jacobian") {
    const BuckCase bc = buck_case(Edge::LEM, 0.35, 21.0);
    const JacobianDecomposition jd = jacobian(bc.model, bc.ramp, bc.u, bc.ss);
    const Matrix assembled = jd.phi0 - jd.gamma * jd.psi;
    CHECK((assembled - jd.phi).norm() <= 1e-12 * jd.phi.norm());
    CHECK(multiset_distance(eigenvalues(jd.phi), eigenvalues(assembled)) <= 1e-9);
  }

  TEST_CASE("tangent switching is rejected") {
    // Output slope equals the ramp slope: y = x with x' = 1 in stage 1.
    const Matrix zero = Matrix::Zero(1, 1);
    Matrix b1(1, 2);
    b1 << 0.0, 1.0;
    Matrix a(1, 1);
    a << -1e-3;
    const SwitchedLinearModel m{a, a, b1, Matrix::Zero(1, 2), Matrix::Ones(1, 1),
                                RowVector::Zero(2), {}, {}, Edge::TEM};
    const RampSignal r{0.0, 1.0, 1.0};
    SteadyState ss = steady_state_at_instant(m, r, {0.0, 1.0}, 0.5);
    const OrbitDerivatives od = orbit_derivatives(m, {0.0, 1.0}, ss);
    const RampSignal tangent{0.0, od.xdot_minus(0), 1.0};
    try {
      jacobian(m, tangent, {0.0, 1.0}, ss);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Grazing);
    }
  }

  TEST_CASE("saturated instants are rejected") {
    BuckCase bc = buck_case(Edge::TEM, 0.4, 20.0);
    bc.ss.d = 0.0;
    CHECK_THROWS_AS(jacobian(bc.model, bc.ramp, bc.u, bc.ss), Error);
  }
}

TEST_SUITE("classification") {
  TEST_CASE("textbook spectra") {
    const StabilityReport half = classify_matrix(0.5 * Matrix::Identity(2, 2));
    CHECK(half.classification == Classification::Stable);
    CHECK(half.spectral_radius == doctest::Approx(0.5));

    Matrix pd = Matrix::Zero(2, 2);
    pd(0, 0) = -1.0;
    pd(1, 1) = 0.3;
    CHECK(classify_matrix(pd).classification == Classification::PeriodDoubling);

    Matrix sn = Matrix::Zero(2, 2);
    sn(0, 0) = 1.0;
    sn(1, 1) = -0.2;
    CHECK(classify_matrix(sn).classification == Classification::SaddleNode);

    Matrix rot(2, 2);
    rot << std::cos(kPi / 3), -std::sin(kPi / 3), std::sin(kPi / 3), std::cos(kPi / 3);
    const StabilityReport ns = classify_matrix(rot);
    CHECK(ns.classification == Classification::NeimarkSacker);
    CHECK(std::abs(std::abs(std::arg(ns.critical_eigenvalue)) - kPi / 3) < 1e-12);

    CHECK(classify_matrix(1.5 * Matrix::Identity(2, 2)).classification ==
          Classification::Unstable);
  }

  TEST_CASE("eigenvalues sorted by modulus") {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 0.1;
    m(1, 1) = -0.7;
    m(2, 2) = 0.4;
    const StabilityReport r = classify_matrix(m);
    REQUIRE(r.eigenvalues.size() == 3);
    CHECK(std::abs(r.eigenvalues[0]) >= std::abs(r.eigenvalues[1]));
    CHECK(std::abs(r.eigenvalues[1]) >= std::abs(r.eigenvalues[2]));
    CHECK(r.critical_eigenvalue == r.eigenvalues[0]);
  }
}

TEST_SUITE("critical condition") {
  TEST_CASE("no feedback leaves the output derivative") {
    const BuckCase sc = smooth_case();
    const CriticalCondition cond(sc.model, sc.ramp, sc.u, sc.ss);
    for (Complex l : {Complex(-1.0, 0.0), Complex(0.3, 0.8), Complex(2.0, -1.0)}) {
      CHECK(cond.value(l) == cond.c_xdot_minus());
    }
    CHECK(cond.pdb_residual() == doctest::Approx(cond.c_xdot_minus() - cond.ramp_slope()));
    CHECK(cond.pdb_residual() != 0.0);
    const Complex ns = cond.nsb_residual(1.1);
    CHECK(ns.real() == doctest::Approx(cond.c_xdot_minus() - cond.ramp_slope()));
    CHECK(ns.imag() == 0.0);
  }

  TEST_CASE("eigenvalues of the jacobian satisfy the condition") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> duty(0.2, 0.8);
    std::uniform_real_distribution<double> vs(10.0, 30.0);
    for (int trial = 0; trial < 20; ++trial) {
      const Edge edge = trial % 2 ? Edge::TEM : Edge::LEM;
      const BuckCase bc = buck_case(edge, duty(rng), vs(rng));
      const JacobianDecomposition jd = jacobian(bc.model, bc.ramp, bc.u, bc.ss);
      const CriticalCondition cond(bc.model, bc.ramp, bc.u, bc.ss);
      for (const Complex& l : classify(jd).eigenvalues) {
        CHECK(std::abs(cond.value(l) - cond.ramp_slope()) <= 1e-6 * cond.ramp_slope());
      }
    }
  }

  TEST_CASE("residual shrinks as lambda approaches an eigenvalue") {
    const BuckCase bc = buck_case(Edge::TEM, 0.4, 20.0);
    const CriticalCondition cond(bc.model, bc.ramp, bc.u, bc.ss);
    const Complex l = classify(jacobian(bc.model, bc.ramp, bc.u, bc.ss)).critical_eigenvalue;
    double prev = INFINITY;
    for (double offset : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const double r = std::abs(cond.value(l + Complex(offset, offset)) - cond.ramp_slope());
      CHECK(r < prev);
      prev = r;
    }
  }

  TEST_CASE("determinant identity") {
    const BuckCase bc = buck_case(Edge::LEM, 0.55, 22.0);
    const JacobianDecomposition jd = jacobian(bc.model, bc.ramp, bc.u, bc.ss);
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
    for (int trial = 0; trial < 20; ++trial) {
      const Complex l(dist(rng), dist(rng));
      const ComplexMatrix open = l * id - jd.phi0.cast<Complex>();
      const ComplexVector rg = solve_complex(open, jd.gamma.cast<Complex>());
      const Complex rhs = det2(open) * (1.0 + (jd.psi.cast<Complex>() * rg)(0));
      const Complex lhs = det2(l * id - jd.phi.cast<Complex>());
      CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(lhs));
    }
  }

  TEST_CASE("period-doubling residual is the condition at minus one") {
    const BuckCase bc = buck_case(Edge::TEM, 0.45, 23.0);
    const CriticalCondition cond(bc.model, bc.ramp, bc.u, bc.ss);
    CHECK(cond.pdb_residual() ==
          doctest::Approx(cond.value(-1.0).real() - cond.ramp_slope()).epsilon(1e-12));
    CHECK(std::abs(cond.value(-1.0).imag()) == 0.0);
    CHECK(cond.snb_residual() ==
          doctest::Approx(cond.value(1.0).real() - cond.ramp_slope()).epsilon(1e-12));
  }

  TEST_CASE("open-loop eigenvalues violate the precondition") {
    const BuckCase bc = buck_case(Edge::TEM, 0.4, 20.0);
    const CriticalCondition cond(bc.model, bc.ramp, bc.u, bc.ss);
    const Complex mu = eigenvalues(cond.phi0())[0];
    try {
      cond.value(mu);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Precondition);
    }
  }

  TEST_CASE("period-doubling residual vanishes on the buck boundary and flips across it") {
    for (Edge edge : {Edge::TEM, Edge::LEM}) {
      CAPTURE(to_string(edge));
      const double duty = default_duty(edge);
      const BuckPlant plant = *buck_plant(buck_model(edge), buck_ramp());
      const double vs_star = vs_critical(plant, edge, duty);
      const BuckCase at = buck_case(edge, duty, vs_star);
      const double slope = ramp_slope(at.ramp);
      CHECK(std::abs(pdb_residual(at.model, at.ramp, at.u, at.ss)) <= 1e-6 * slope);
      const BuckCase below = buck_case(edge, duty, 0.95 * vs_star);
      const BuckCase above = buck_case(edge, duty, 1.05 * vs_star);
      CHECK(pdb_residual(below.model, below.ramp, below.u, below.ss) *
                pdb_residual(above.model, above.ramp, above.u, above.ss) < 0.0);
    }
  }

  TEST_CASE("Neimark-Sacker residual") {
    const BuckCase bc = buck_case(Edge::TEM, 0.4, 20.0);
    const CriticalCondition cond(bc.model, bc.ramp, bc.u, bc.ss);
    for (double theta : {0.3, 1.2, 2.9}) {
      CHECK(std::abs(cond.nsb_residual(theta) - std::conj(cond.nsb_residual(-theta))) <=
            1e-9 * std::abs(cond.nsb_residual(theta)));
    }
    for (double bad : {0.0, kPi, -kPi, 2.0 * kPi}) {
      CHECK_THROWS_AS(cond.nsb_residual(bad), Error);
    }
  }

  TEST_CASE("synthetic boundaries") {
    const BuckCase sn = steer_to_unit_circle(synthetic_model(0.0, 1.0), 0.9, 1.0);
    const StabilityReport sn_report = classify(jacobian(sn.model, sn.ramp, sn.u, sn.ss));
    CHECK(sn_report.classification == Classification::SaddleNode);
    CHECK(std::abs(snb_residual(sn.model, sn.ramp, sn.u, sn.ss)) <= 1e-6 * ramp_slope(sn.ramp));

    const BuckCase ns = steer_to_unit_circle(synthetic_model(1.0, 0.0), 1.6, 1.7);
    const StabilityReport ns_report = classify(jacobian(ns.model, ns.ramp, ns.u, ns.ss));
    CHECK(ns_report.classification == Classification::NeimarkSacker);
    const double theta = std::abs(std::arg(ns_report.critical_eigenvalue));
    CHECK(theta > 0.0);
    CHECK(theta < kPi);
    CHECK(std::abs(nsb_residual(ns.model, ns.ramp, ns.u, ns.ss, theta)) <=
          1e-6 * ramp_slope(ns.ramp));
  }
}

TEST_SUITE("plots") {
  TEST_CASE("grids") {
    const auto th = theta_grid(4);
    REQUIRE(th.size() == 4);
    CHECK(th.back() == kPi);
    CHECK(th.front() == doctest::Approx(-kPi / 2));
    CHECK(theta_grid(1).front() == kPi);
    const auto lin = linear_grid(0.1, 0.9, 81);
    CHECK(lin.front() == 0.1);
    CHECK(lin.back() == 0.9);
    CHECK(lin[40] == doctest::Approx(0.5));
    CHECK_THROWS_AS(linear_grid(1.0, 0.0, 3), Error);
    CHECK_THROWS_AS(theta_grid(0), Error);
  }

  TEST_CASE("S-plot crosses the ramp slope where the boundary meets the operating voltage") {
    const Edge edge = Edge::TEM;
    const BuckPlant plant = *buck_plant(buck_model(edge), buck_ramp());
    const double vs = 23.0;
    // The fixed-input family keeps v_r, so pick it to make D = 0.45 an orbit.
    const BuckCase bc = buck_case(edge, 0.45, vs);
    const auto duties = linear_grid(0.2, 0.45, 251);
    const BoundaryCurve curve = s_plot(fixed_input_family(bc.model, bc.ramp, bc.u), -1.0, duties);
    int crossings = 0;
    for (std::size_t i = 1; i < curve.samples.size(); ++i) {
      const double a = curve.samples[i - 1].value.real() - curve.samples[i - 1].reference;
      const double b = curve.samples[i].value.real() - curve.samples[i].reference;
      if ((a < 0.0) == (b < 0.0)) continue;
      ++crossings;
      // Oracle: the closed-form boundary equals vs between the same duties.
      const double lo = vs_critical_tem(plant, duties[i - 1]) - vs;
      const double hi = vs_critical_tem(plant, duties[i]) - vs;
      CHECK(lo * hi <= 0.0);
    }
    CHECK(crossings == 1);
  }

  TEST_CASE("S-plot of a switch without effect is constant") {
    const BuckCase sc = smooth_case();
    const auto duties = linear_grid(0.2, 0.8, 7);
    const BoundaryCurve curve = s_plot(
        [&](double) { return OperatingPoint{sc.model, sc.ramp, sc.u, sc.ss}; }, -1.0, duties);
    for (const CurveSample& s : curve.samples) {
      CHECK(s.value == curve.samples.front().value);
    }
  }

  TEST_CASE("S-plot marks saturated duties as singular") {
    const BuckCase bc = buck_case(Edge::TEM, 0.4, 20.0);
    const std::vector<double> duties{0.0, 0.4};
    const BoundaryCurve curve = s_plot(fixed_input_family(bc.model, bc.ramp, bc.u), -1.0, duties);
    CHECK(curve.samples[0].singular);
    CHECK(std::isnan(curve.samples[0].value.real()));
    CHECK_FALSE(curve.samples[1].singular);
  }

  TEST_CASE("F-plot at pi equals the ramp slope on the boundary") {
    const Edge edge = Edge::LEM;
    const BuckPlant plant = *buck_plant(buck_model(edge), buck_ramp());
    const BuckCase bc = buck_case(edge, 0.6, vs_critical(plant, edge, 0.6));
    const std::vector<double> th{kPi};
    const BoundaryCurve f = f_plot(bc.model, bc.ramp, bc.u, bc.ss, th);
    CHECK(std::abs(f.samples[0].value - f.samples[0].reference) <= 1e-6 * f.samples[0].reference);
  }

  TEST_CASE("Nyquist curve") {
    const BuckCase bc = buck_case(Edge::TEM, 0.4, 20.0);
    const double ws = bc.ramp.angular_frequency();
    const auto grid = linear_grid(0.0, ws, 9);
    const BoundaryCurve n = nyquist(bc.model, bc.ramp, bc.u, bc.ss, grid);
    CHECK(n.samples.front().value.imag() == 0.0);
    // Conjugate symmetry about half the switching frequency.
    CHECK(std::abs(n.samples[1].value - std::conj(n.samples[7].value)) <=
          1e-9 * std::abs(n.samples[1].value));

    // F(theta) = h' exactly when N(e^{j theta}) = -1.
    const CriticalCondition cond(bc.model, bc.ramp, bc.u, bc.ss);
    for (double theta : {0.4, 1.7, 3.0}) {
      const Complex f_minus = cond.value(std::polar(1.0, theta)) - cond.ramp_slope();
      const Complex n_plus = (cond.loop_gain(std::polar(1.0, theta)) + 1.0) *
                             (cond.c_xdot_minus() - cond.ramp_slope());
      CHECK(std::abs(f_minus - n_plus) <= 1e-9 * std::abs(f_minus));
    }
  }

  TEST_CASE("Nyquist of a switch without effect is zero") {
    const BuckCase sc = smooth_case();
    const auto grid = linear_grid(0.0, sc.ramp.angular_frequency(), 5);
    for (const CurveSample& s : nyquist(sc.model, sc.ramp, sc.u, sc.ss, grid).samples) {
      CHECK(s.value == Complex(0.0, 0.0));
    }
  }
}
