#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mfrw/kernel.hpp"
#include "mfrw/rng.hpp"
#include "oracles.hpp"

using namespace mfrw;

TEST_CASE("cell kernel closed form vs quadrature oracle", "[kernel]") {
  SECTION("same cell is the unit normalization") {
    CHECK(cell_kernel_integral(0.7, 5, 5, 1.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(cell_kernel_integral(0.7, 0, 0, 0.25) ==
          Catch::Approx(std::pow(0.25, 1.4)).epsilon(1e-14));
  }
  SECTION("adjacent cells") {
    const double expected = 0.5 * (std::pow(2.0, 1.4) - 2.0);
    CHECK(cell_kernel_integral(0.7, 1, 0, 1.0) == Catch::Approx(expected).epsilon(1e-13));
    CHECK(cell_kernel_integral(0.7, 1, 0, 1.0) ==
          Catch::Approx(oracles::kernel_pair_integral(0.7, 1, 1.0)).epsilon(1e-10));
  }
  SECTION("vanishing kernel constant near H = 1/2") {
    CHECK(std::abs(cell_kernel_integral(0.5001, 3, 0, 1.0)) < 1e-3);
  }
  SECTION("random offsets against the oracle") {
    Rng rng(20240817ULL);
    for (int trial = 0; trial < 12; ++trial) {
      const double H = 0.55 + 0.4 * rng.next_unit();
      const long d = static_cast<long>(rng.next_u64() % 64);
      const double delta = 0.125;
      const double closed = cell_kernel_integral(H, d, 0, delta);
      const double quad = oracles::kernel_pair_integral(H, d, delta);
      CHECK(closed == Catch::Approx(quad).epsilon(1e-10));
    }
  }
  SECTION("large-offset accuracy (cancellation-safe form)") {
    for (long d : {1000L, 4096L, 100000L}) {
      const double closed = cell_kernel_integral(0.7, d, 0, 1.0);
      const double quad = oracles::kernel_pair_integral(0.7, d, 1.0, 1e-13);
      CHECK(closed == Catch::Approx(quad).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(cell_kernel_integral(0.5, 0, 0, 1.0), domain_error);
  CHECK_THROWS_AS(cell_kernel_integral(1.0, 0, 0, 1.0), domain_error);
  CHECK_THROWS_AS(cell_kernel_integral(0.7, 0, 0, 0.0), domain_error);
}

TEST_CASE("fbm kernel constant", "[kernel]") {
  const FbmKernel k = FbmKernel::with_hurst(0.7);
  CHECK(k.c_H == Catch::Approx(0.7 * 0.4).epsilon(1e-14));
  CHECK(k.c_H > 0.0);
  CHECK_THROWS_AS(FbmKernel::with_hurst(0.5), domain_error);
}

TEST_CASE("fgn covariance agrees with the kernel integral for H > 1/2", "[kernel]") {
  for (long d : {0L, 1L, 2L, 7L, 31L}) {
    CHECK(fgn_covariance(0.7, d, 0.01) ==
          Catch::Approx(cell_kernel_integral(0.7, d, 0, 0.01)).epsilon(1e-13));
    CHECK(fgn_covariance(0.7, d, 0.01) ==
          Catch::Approx(oracles::fgn_gamma_naive(0.7, d, 0.01)).epsilon(1e-10));
  }
  // H = 1/2 gives uncorrelated increments
  CHECK(fgn_covariance(0.5, 1, 0.1) == Catch::Approx(0.0).margin(1e-15));
  CHECK(fgn_covariance(0.5, 0, 1.0) == Catch::Approx(1.0).epsilon(1e-14));
}
