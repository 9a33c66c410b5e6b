#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace pwmstab;
using namespace pwmstab::testing;

namespace {

constexpr double kPi = std::numbers::pi;

BuckPlant plant_for(Edge edge) { return *buck_plant(buck_model(edge), buck_ramp()); }

// First-order plant y/v_s = p / (s + p) with the given pole and period.
BuckPlant first_order_plant(double pole, double period) {
  return {Matrix::Constant(1, 1, -pole), Vector::Constant(1, pole), RowVector::Ones(1),
          {3.8, 8.2, period}};
}

std::vector<double> duty_steps() {
  std::vector<double> out;
  for (int i = 1; i <= 19; ++i) out.push_back(0.05 * i);
  return out;
}

}  // namespace

TEST_SUITE("closed-form boundary") {
  TEST_CASE("jacobian has an eigenvalue at minus one on the boundary") {
    for (Edge edge : {Edge::TEM, Edge::LEM}) {
      for (double duty : {0.3, 0.45, 0.6, 0.7}) {
        CAPTURE(to_string(edge));
        CAPTURE(duty);
        const double vs = vs_critical(plant_for(edge), edge, duty);
        REQUIRE(std::isfinite(vs));
        const BuckCase bc = buck_case(edge, duty, vs);
        const StabilityReport r = classify(jacobian(bc.model, bc.ramp, bc.u, bc.ss));
        double nearest = INFINITY;
        for (const Complex& l : r.eigenvalues) nearest = std::min(nearest, std::abs(l + 1.0));
        CHECK(nearest <= 1e-4);
      }
    }
  }

  TEST_CASE("TEM and LEM boundaries mirror each other") {
    const BuckPlant tem = plant_for(Edge::TEM);
    // The mirror identity is stated for one plant evaluated with both edges.
    for (double duty : duty_steps()) {
      const double t = vs_critical_tem(tem, duty);
      const double l = vs_critical_lem(tem, 1.0 - duty);
      CHECK(std::abs(t + l) <= 1e-9 * std::abs(l));
    }
  }

  TEST_CASE("specialised residual equals the general period-doubling residual") {
    for (Edge edge : {Edge::TEM, Edge::LEM}) {
      const BuckPlant plant = plant_for(edge);
      for (double duty : {0.25, 0.5, 0.7}) {
        for (double vs : {10.0, 20.0, 30.0}) {
          const BuckCase bc = buck_case(edge, duty, vs);
          const double general = pdb_residual(bc.model, bc.ramp, bc.u, bc.ss);
          const double special = edge == Edge::TEM ? pdb_residual_tem(plant, duty, vs)
                                                   : pdb_residual_lem(plant, duty, vs);
          CHECK(std::abs(general - special) <= 1e-8 * std::max(std::abs(general), ramp_slope(bc.ramp)));
        }
      }
    }
  }

  TEST_CASE("residual is affine in v_s with a ramp-independent slope") {
    BuckPlant plant = plant_for(Edge::TEM);
    const double duty = 0.4;
    const double r0 = pdb_residual_tem(plant, duty, 0.0);
    const double r1 = pdb_residual_tem(plant, duty, 1.0);
    const double r7 = pdb_residual_tem(plant, duty, 7.0);
    CHECK(r7 - r0 == doctest::Approx(7.0 * (r1 - r0)).epsilon(1e-12));
    plant.ramp.vh += 3.0;
    CHECK(pdb_residual_tem(plant, duty, 1.0) - pdb_residual_tem(plant, duty, 0.0) ==
          doctest::Approx(r1 - r0).epsilon(1e-12));
  }

  TEST_CASE("vanishing coefficient puts the boundary at infinity") {
    // With C = 0 every term of the coefficient vanishes.
    BuckPlant plant = first_order_plant(100.0, 1e-3);
    plant.c(0) = 0.0;
    CHECK(std::isinf(vs_critical_tem(plant, 0.3)));
    CHECK(std::isinf(vs_critical_lem(plant, 0.3)));
  }

  TEST_CASE("singular plant") {
    BuckPlant plant = first_order_plant(100.0, 1e-3);
    plant.a(0, 0) = 0.0;
    try {
      vs_critical_tem(plant, 0.4);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Singular);
    }
  }

  TEST_CASE("duty outside the open interval") {
    const BuckPlant plant = plant_for(Edge::TEM);
    CHECK_THROWS_AS(vs_critical_tem(plant, 0.0), Error);
    CHECK_THROWS_AS(vs_critical_lem(plant, 1.0), Error);
  }

  TEST_CASE("non-buck models have no plant") {
    auto m = buck_model(Edge::TEM);
    m.a2(0, 0) = -1.0;
    CHECK_FALSE(buck_plant(m, buck_ramp()).has_value());
  }
}

TEST_SUITE("transfer function") {
  TEST_CASE("strictly proper") {
    const BuckPlant plant = plant_for(Edge::TEM);
    double prev = INFINITY;
    for (double s : {1e4, 1e6, 1e8, 1e10}) {
      const double mag = std::abs(transfer_eval(plant, s));
      CHECK(mag < prev);
      prev = mag;
    }
    CHECK(prev < 1e-10);
  }

  TEST_CASE("buck symbolic form") {
    const BuckPlant plant = plant_for(Edge::TEM);
    for (Complex s : {Complex(0, 100), Complex(0, 1e3), Complex(-50, 2e4), Complex(10, 0)}) {
      const Complex want = -kGain / (kL * kC * s * s + (kL / kR) * s + 1.0);
      CHECK(std::abs(transfer_eval(plant, s) - want) <= 1e-12 * std::abs(want));
    }
  }

  TEST_CASE("pole") {
    const BuckPlant plant = first_order_plant(100.0, 1e-3);
    try {
      transfer_eval(plant, -100.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Pole);
    }
  }
}

TEST_SUITE("harmonic balance") {
  TEST_CASE("series agrees with the matrix form at 2000 harmonics") {
    const BuckPlant plant = plant_for(Edge::LEM);
    for (double d_frac : {0.1, 0.3, 0.5, 0.8}) {
      const EquivalenceCheck c = equivalence_residual(plant, d_frac * kPeriod, 2000);
      CHECK(c.residual <= 1e-4 * std::abs(c.matrix_rhs));
      CHECK(c.tail_estimate > 0.0);
    }
  }

  TEST_CASE("symmetric point against direct evaluation") {
    const BuckPlant plant = plant_for(Edge::LEM);
    const EquivalenceCheck c = equivalence_residual(plant, 0.5 * kPeriod, 2000);
    const double direct = lem_boundary_coefficient(plant, 0.5 * kPeriod);
    CHECK(c.matrix_rhs == direct);
    CHECK(rel_err(c.series_lhs, direct) <= 1e-6);
  }

  TEST_CASE("truncation error shrinks with more harmonics") {
    const BuckPlant plant = plant_for(Edge::LEM);
    double prev = INFINITY;
    for (int k : {10, 100, 1000}) {
      const double r = equivalence_residual(plant, 0.3 * kPeriod, k).residual;
      CHECK(r < prev);
      prev = r;
    }
  }

  TEST_CASE("converges to both closed forms") {
    const BuckPlant lem = plant_for(Edge::LEM);
    const BuckPlant tem = plant_for(Edge::TEM);
    for (double duty : {0.3, 0.5, 0.65}) {
      const HarmonicBalanceResult hl =
          harmonic_balance_vs(lem, (1.0 - duty) * kPeriod, 4000, Edge::LEM);
      CHECK(rel_err(hl.vs, vs_critical_lem(lem, duty)) <= 1e-4);
      CHECK(hl.terms == 4000);
      const HarmonicBalanceResult ht = harmonic_balance_vs(tem, duty * kPeriod, 4000, Edge::TEM);
      CHECK(rel_err(ht.vs, vs_critical_tem(tem, duty)) <= 1e-4);
    }
  }

  TEST_CASE("needs at least one harmonic") {
    CHECK_THROWS_AS(harmonic_balance_vs(plant_for(Edge::LEM), 1e-4, 0), Error);
  }
}

TEST_SUITE("Taylor expansion") {
  TEST_CASE("coefficients at the corners") {
    const auto at0 = taylor_coefficients(0.0);
    CHECK(at0.delta0 == 0.5);
    CHECK(at0.delta1 == -0.25);
    CHECK(at0.delta2 == 0.0);
    const auto half = taylor_coefficients(0.5);
    CHECK(half.delta0 == 0.0);
    CHECK(half.delta1 == -0.125);
    CHECK(half.delta2 == 0.0);
    const auto at1 = taylor_coefficients(1.0);
    CHECK(at1.delta0 == -0.5);
    CHECK(at1.delta1 == -0.25);
    CHECK(at1.delta2 == 0.0);
    CHECK_THROWS_AS(taylor_coefficients(1.5), Error);
  }

  TEST_CASE("mirror symmetry of the coefficients") {
    for (double duty : duty_steps()) {
      const auto a = taylor_coefficients(duty);
      const auto b = taylor_coefficients(1.0 - duty);
      CHECK(a.delta0 == doctest::Approx(-b.delta0));
      CHECK(a.delta1 == doctest::Approx(b.delta1));
    }
  }

  TEST_CASE("coefficients are the series of the exact scalar boundary") {
    // Oracle: for scalar A = a, the exact TEM coefficient divided by C B is
    // (e^{a d} - 1)/(1 - e^{a T}) + 1/(1 + e^{a T}); expand in x = a T.
    const double duty = 0.3;
    const auto delta = taylor_coefficients(duty);
    for (double x : {1e-2, 5e-3}) {
      const double exact = std::expm1(x * duty) / -std::expm1(x) + 1.0 / (1.0 + std::exp(x));
      const double series = delta.delta0 + delta.delta1 * x + delta.delta2 * x * x;
      CHECK(std::abs(exact - series) <= 0.1 * x * x * x);
    }
  }

  TEST_CASE("zero dynamics keep only the constant term") {
    BuckPlant plant = first_order_plant(1.0, 1.0);
    plant.a(0, 0) = 0.0;
    plant.b(0) = 2.0;
    for (double duty : {0.2, 0.7}) {
      const double want = taylor_coefficients(duty).delta0 * 2.0 * 5.0 - ramp_slope(plant.ramp);
      for (int order : {0, 1, 2}) {
        CHECK(taylor_pdb_residual(plant, duty, 5.0, order) == doctest::Approx(want));
      }
    }
  }

  TEST_CASE("accurate for slow plants") {
    const BuckPlant plant = first_order_plant(0.1 / kPeriod, kPeriod);
    for (double duty : duty_steps()) {
      CHECK(rel_err(vs_critical_taylor(plant, duty), vs_critical_tem(plant, duty)) <= 0.01);
    }
  }

  TEST_CASE("inaccurate with a pole at half the switching frequency") {
    const BuckPlant plant = first_order_plant(0.5 * 2.0 * kPi / kPeriod, kPeriod);
    double worst = 0.0;
    for (double duty : duty_steps()) {
      worst = std::max(worst, rel_err(vs_critical_taylor(plant, duty), vs_critical_tem(plant, duty)));
    }
    CHECK(worst > 0.1);
  }

  TEST_CASE("order is bounded") {
    CHECK_THROWS_AS(taylor_boundary_coefficient(plant_for(Edge::TEM), 0.4, 3), Error);
  }
}
