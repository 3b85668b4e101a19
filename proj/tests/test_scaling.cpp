#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mfrw/scaling.hpp"

using namespace mfrw;

TEST_CASE("psi normalization and values", "[scaling]") {
  const ScalingModel m = ScalingModel::log_normal(0.1);
  CHECK(psi(m, 1.0) == 0.0);
  CHECK(psi(m, 0.0) == 0.0);
  CHECK(psi(m, 2.0) == Catch::Approx(0.1).epsilon(1e-14));
  const ScalingModel z = ScalingModel::log_normal(0.0);
  CHECK(psi(z, 3.7) == 0.0);
  CHECK_THROWS_AS(ScalingModel::log_normal(-0.1), config_error);
}

TEST_CASE("psi convexity on a grid", "[scaling]") {
  const ScalingModel m = ScalingModel::log_normal(0.3);
  for (double q = -2.0; q <= 10.0 - 0.2; q += 0.1) {
    const double second = psi(m, q) + psi(m, q + 0.2) - 2.0 * psi(m, q + 0.1);
    CHECK(second >= -1e-12);
  }
}

TEST_CASE("zeta values and concavity", "[scaling]") {
  const ScalingModel z = ScalingModel::log_normal(0.0);
  CHECK(zeta(z, 3.25) == 3.25);
  const ScalingModel m = ScalingModel::log_normal(0.1);
  CHECK(zeta(m, 1.0) == 1.0);
  CHECK(zeta(m, 2.0) == Catch::Approx(1.9).epsilon(1e-14));
  CHECK(zeta(m, 4.0) == Catch::Approx(3.4).epsilon(1e-14));
  for (double q = -2.0; q <= 10.0 - 0.2; q += 0.1) {
    const double second = zeta(m, q) + zeta(m, q + 0.2) - 2.0 * zeta(m, q + 0.1);
    CHECK(second <= 1e-12);
  }
}

TEST_CASE("rho_l branches, continuity, monotonicity", "[scaling]") {
  CHECK(rho_l(0.0, 0.01, 1.0) == Catch::Approx(std::log(100.0) + 1.0).epsilon(1e-14));
  CHECK(rho_l(1.0, 0.01, 1.0) == 0.0);
  CHECK(rho_l(2.0, 0.01, 1.0) == 0.0);
  CHECK(rho_l(0.01, 0.01, 1.0) == Catch::Approx(std::log(100.0)).epsilon(1e-14));
  // continuity at the kinks and monotone nonincreasing overall
  double prev = rho_l(0.0, 0.01, 1.0);
  for (double v = 1e-4; v <= 1.2; v += 1e-3) {
    const double r = rho_l(v, 0.01, 1.0);
    CHECK(r <= prev + 1e-12);
    CHECK(r <= rho_l(0.0, 0.01, 1.0));
    prev = r;
  }
  CHECK_THROWS_AS(rho_l(0.1, 2.0, 1.0), config_error);
  CHECK_THROWS_AS(rho_l(0.1, 0.0, 1.0), config_error);
  CHECK_THROWS_AS(rho_l(-0.1, 0.01, 1.0), domain_error);
  // general T reduces to the unit-T form shifted by log T
  CHECK(rho_l(0.05, 0.01, 4.0) == Catch::Approx(rho_l(0.05, 0.01, 1.0) + std::log(4.0)));
}

TEST_CASE("delta_m is the intermittency parameter", "[scaling]") {
  CHECK(delta_m(ScalingModel::log_normal(0.1), 2) == Catch::Approx(0.1).epsilon(1e-14));
  CHECK(delta_m(ScalingModel::log_normal(0.1), 2) ==
        Catch::Approx(psi(ScalingModel::log_normal(0.1), 2.0)).epsilon(1e-14));
  CHECK(delta_m(ScalingModel::log_normal(0.0), 5) == 0.0);
  CHECK(delta_m(ScalingModel::log_normal(0.2), 7) == Catch::Approx(0.2).epsilon(1e-13));
  for (int m = 2; m <= 12; ++m)
    CHECK(delta_m(ScalingModel::log_normal(0.35), m) == Catch::Approx(0.35).epsilon(1e-12));
  CHECK_THROWS_AS(delta_m(ScalingModel::log_normal(0.1), 1), domain_error);
}

TEST_CASE("check_conditions margins", "[scaling]") {
  SECTION("benign parameters pass with the documented A(p) margin") {
    const ConditionReport rep = check_conditions(ScalingModel::log_normal(0.1), 0.7, 2);
    CHECK(rep.all_pass());
    CHECK(rep.a_p.margin == Catch::Approx(0.2).epsilon(1e-12));
  }
  SECTION("strong intermittency breaks H1") {
    const ConditionReport rep = check_conditions(ScalingModel::log_normal(0.5), 0.7, 2);
    CHECK_FALSE(rep.h1.pass);
    CHECK(rep.h1.margin == Catch::Approx(0.45 - 0.5).epsilon(1e-12));
  }
  SECTION("degenerate cascade passes everything") {
    const ConditionReport rep = check_conditions(ScalingModel::log_normal(0.0), 0.7, 4);
    CHECK(rep.all_pass());
  }
  SECTION("H outside the CLT window") {
    CHECK_FALSE(check_conditions(ScalingModel::log_normal(0.05), 0.8, 2).h_range.pass);
  }
  CHECK_THROWS_AS(check_conditions(ScalingModel::log_normal(0.1), 0.7, 3), domain_error);
}

TEST_CASE("omega_law matches the moment identity", "[scaling]") {
  const ScalingModel m = ScalingModel::log_normal(0.1);
  const OmegaLaw law = omega_law(m, 1.0 / 256.0);
  CHECK(law.mean == Catch::Approx(-0.05 * std::log(256.0)).epsilon(1e-13));
  CHECK(law.variance == Catch::Approx(0.1 * std::log(256.0)).epsilon(1e-13));
  for (double ratio : {0.5, 1.0 / 16.0, 1.0 / 1024.0}) {
    const OmegaLaw lw = omega_law(m, ratio);
    for (double q : {1.0, 2.0, 3.0}) {
      const double lhs = std::exp(q * lw.mean + 0.5 * q * q * lw.variance);
      const double rhs = std::pow(ratio, -psi(m, q));
      CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
    }
  }
  // E e^Omega = 1 for every ratio (psi(1) = 0)
  const OmegaLaw lw = omega_law(m, 1e-3);
  CHECK(std::exp(lw.mean + 0.5 * lw.variance) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(omega_law(m, 0.0), domain_error);
  CHECK_THROWS_AS(omega_law(m, 1.0), domain_error);
  CHECK_THROWS_AS(omega_law(m, 1.5), domain_error);
}
