#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mfrw/cascade.hpp"
#include "mfrw/parallel.hpp"

using namespace mfrw;

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  const double n = static_cast<double>(x.size());
  const double m = s / n;
  double q = 0.0;
  for (double v : x) q += (v - m) * (v - m);
  return {m, std::sqrt(q / (n - 1.0) / n)};
}

}  // namespace

TEST_CASE("degenerate cascade is exactly flat", "[cascade]") {
  const ScalingModel model = ScalingModel::log_normal(0.0);
  const CascadeConfig config = CascadeConfig::with_grid_cutoff(1.0, 1.0, 64);
  const LogField field = synth_log_field(model, config, 42);
  for (double v : field.values) CHECK(v == 0.0);
  const MeasureGrid measure = field_to_measure(field, 1.0);
  for (double m : measure.masses) CHECK(m == 1.0 / 64.0);
}

TEST_CASE("log field is deterministic in the seed", "[cascade]") {
  const ScalingModel model = ScalingModel::log_normal(0.15);
  const CascadeConfig config = CascadeConfig::with_grid_cutoff(1.0, 1.0, 256);
  const LogField a = synth_log_field(model, config, 7);
  const LogField b = synth_log_field(model, config, 7);
  const LogField c = synth_log_field(model, config, 8);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
}

TEST_CASE("log field marginal and lag covariance", "[cascade]") {
  const double lambda2 = 0.1;
  const ScalingModel model = ScalingModel::log_normal(lambda2);
  const std::size_t n = 512;
  const CascadeConfig config = CascadeConfig::with_grid_cutoff(1.0, 1.0, n);
  const std::size_t reps = 4000;
  const std::vector<std::size_t> lags{0, 1, 16, 128};

  std::vector<std::vector<double>> prod(lags.size(), std::vector<double>(reps));
  std::vector<double> mean_samples(reps);
  parallel_for(reps, [&](std::size_t r) {
    const LogField f = synth_log_field(model, config, replica_seed(1001, r));
    mean_samples[r] = f.values[0];
    const double mean_w = model.drift * rho_l(0.0, config.l, config.T);
    for (std::size_t i = 0; i < lags.size(); ++i) {
      // average the lag product over the grid for variance reduction
      double acc = 0.0;
      const std::size_t lag = lags[i];
      for (std::size_t j = 0; j + lag < n; ++j)
        acc += (f.values[j] - mean_w) * (f.values[j + lag] - mean_w);
      prod[i][r] = acc / static_cast<double>(n - lag);
    }
  });

  const double rho0 = rho_l(0.0, config.l, config.T);
  SECTION("stationary mean") {
    const MeanSe ms = mean_se(mean_samples);
    CHECK(std::abs(ms.mean - model.drift * rho0) <= 3.0 * ms.se);
  }
  SECTION("lag covariances match lambda2 rho_l") {
    for (std::size_t i = 0; i < lags.size(); ++i) {
      const MeanSe ms = mean_se(prod[i]);
      const double target =
          lambda2 * rho_l(static_cast<double>(lags[i]) * config.step(), config.l, config.T);
      INFO("lag " << lags[i] << " got " << ms.mean << " want " << target << " se " << ms.se);
      CHECK(std::abs(ms.mean - target) <= 3.0 * ms.se);
    }
  }
  SECTION("lag-0 variance formula at the reference resolution") {
    CHECK(0.1 * rho_l(0.0, 1.0 / 4096.0, 1.0) ==
          Catch::Approx(0.1 * (std::log(4096.0) + 1.0)).epsilon(1e-14));
    CHECK(0.1 * (std::log(4096.0) + 1.0) == Catch::Approx(0.93178).epsilon(1e-4));
  }
}

TEST_CASE("measure is mean-one per cell", "[cascade]") {
  const ScalingModel model = ScalingModel::log_normal(0.1);
  const CascadeConfig config = CascadeConfig::with_grid_cutoff(1.0, 1.0, 256);
  const std::size_t reps = 10000;
  std::vector<double> total(reps), half_mass(reps);
  parallel_for(reps, [&](std::size_t r) {
    const LogField f = synth_log_field(model, config, replica_seed(77, r));
    const MeasureGrid m = field_to_measure(f, 1.0);
    total[r] = m.total_mass();
    half_mass[r] = m.mass_up_to(0.5);
  });
  const MeanSe t = mean_se(total);
  INFO("total " << t.mean << " se " << t.se);
  CHECK(std::abs(t.mean - config.domain_length) <= 3.0 * t.se);
  const MeanSe h = mean_se(half_mass);
  CHECK(std::abs(h.mean - 0.5) <= 3.0 * h.se);
}

TEST_CASE("square-root measure has exact unit mean density", "[cascade]") {
  const ScalingModel model = ScalingModel::log_normal(0.1);
  const CascadeConfig config = CascadeConfig::with_grid_cutoff(1.0, 1.0, 256);
  const std::size_t reps = 8000;
  std::vector<double> total(reps);
  parallel_for(reps, [&](std::size_t r) {
    const LogField f = synth_log_field(model, config, replica_seed(91, r));
    total[r] = field_to_measure(f, 0.5).total_mass();
  });
  const MeanSe t = mean_se(total);
  INFO("beta=1/2 total " << t.mean << " se " << t.se);
  CHECK(std::abs(t.mean - config.domain_length) <= 3.0 * t.se);
  CHECK_THROWS_AS(
      field_to_measure(synth_log_field(model, config, 1), 0.75), domain_error);
}

TEST_CASE("measure moment scaling across window sizes", "[cascade]") {
  // E M[0,t]^2 / (t/T)^{zeta(2)} constant in t
  const ScalingModel model = ScalingModel::log_normal(0.1);
  const CascadeConfig config = CascadeConfig::with_grid_cutoff(1.0, 1.0, 1024);
  const std::size_t reps = 6000;
  const std::vector<double> ts{1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0, 1.0};
  std::vector<std::vector<double>> m2(ts.size(), std::vector<double>(reps));
  parallel_for(reps, [&](std::size_t r) {
    const MeasureGrid m = field_to_measure(
        synth_log_field(model, config, replica_seed(3131, r)), 1.0);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double v = m.mass_up_to(ts[i]);
      m2[i][r] = v * v;
    }
  });
  const double z2 = zeta(model, 2.0);
  std::vector<double> normalized(ts.size()), ses(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const MeanSe ms = mean_se(m2[i]);
    normalized[i] = ms.mean / std::pow(ts[i], z2);
    ses[i] = ms.se / std::pow(ts[i], z2);
  }
  for (std::size_t i = 1; i < ts.size(); ++i) {
    INFO("t " << ts[i] << " normalized " << normalized[i] << " vs " << normalized[0]);
    CHECK(std::abs(normalized[i] - normalized[0]) <=
          3.0 * std::sqrt(ses[i] * ses[i] + ses[0] * ses[0]));
  }
}

TEST_CASE("refinement stability of the second moment", "[cascade]") {
  const ScalingModel model = ScalingModel::log_normal(0.1);
  const std::size_t reps = 6000;
  std::vector<double> coarse(reps), fine(reps);
  const CascadeConfig c1 = CascadeConfig::with_grid_cutoff(1.0, 1.0, 512);
  const CascadeConfig c2 = CascadeConfig::with_grid_cutoff(1.0, 1.0, 1024);
  parallel_for(reps, [&](std::size_t r) {
    const double a =
        field_to_measure(synth_log_field(model, c1, replica_seed(51, r)), 1.0).total_mass();
    const double b =
        field_to_measure(synth_log_field(model, c2, replica_seed(52, r)), 1.0).total_mass();
    coarse[r] = a * a;
    fine[r] = b * b;
  });
  const MeanSe a = mean_se(coarse), b = mean_se(fine);
  INFO("coarse " << a.mean << "+-" << a.se << " fine " << b.mean << "+-" << b.se);
  CHECK(std::abs(a.mean - b.mean) <= 3.0 * std::sqrt(a.se * a.se + b.se * b.se));
}

TEST_CASE("coarsening conserves mass bit-exactly", "[cascade]") {
  const ScalingModel model = ScalingModel::log_normal(0.2);
  const CascadeConfig config = CascadeConfig::with_grid_cutoff(1.0, 2.0, 128);
  const MeasureGrid m = field_to_measure(synth_log_field(model, config, 5), 1.0);
  SECTION("identity at the full level") {
    const MeasureGrid same = coarsen_measure(m, 7);
    CHECK(same.masses == m.masses);
  }
  SECTION("uniform masses halve") {
    const MeasureGrid flat =
        field_to_measure(synth_log_field(ScalingModel::log_normal(0.0), config, 1), 1.0);
    const MeasureGrid two = coarsen_measure(flat, 1);
    REQUIRE(two.masses.size() == 2);
    CHECK(two.masses[0] == Catch::Approx(1.0).epsilon(1e-15));
    CHECK(two.masses[1] == Catch::Approx(1.0).epsilon(1e-15));
  }
  SECTION("conservation to the last bit at every level") {
    const double total = m.total_mass();
    for (int level : {0, 1, 3, 5, 7}) {
      const MeasureGrid c = coarsen_measure(m, level);
      CHECK(c.total_mass() == total);
    }
  }
  CHECK_THROWS_AS(coarsen_measure(m, 8), domain_error);
}

TEST_CASE("omega sampling matches its law", "[cascade]") {
  const ScalingModel model = ScalingModel::log_normal(0.1);
  const double ratio = 1.0 / 256.0;
  const OmegaLaw law = omega_law(model, ratio);
  const std::size_t reps = 100000;
  std::vector<double> draws(reps), exp_draws(reps);
  parallel_for(reps, [&](std::size_t r) {
    const double o = sample_omega(model, ratio, replica_seed(2718, r));
    draws[r] = o;
    exp_draws[r] = std::exp(o);
  });
  const MeanSe m = mean_se(draws);
  CHECK(std::abs(m.mean - law.mean) <= 3.0 * m.se);
  std::vector<double> sq(reps);
  for (std::size_t r = 0; r < reps; ++r) sq[r] = (draws[r] - law.mean) * (draws[r] - law.mean);
  const MeanSe v = mean_se(sq);
  CHECK(std::abs(v.mean - law.variance) <= 3.0 * v.se);
  const MeanSe e = mean_se(exp_draws);
  CHECK(std::abs(e.mean - 1.0) <= 3.0 * e.se);
  SECTION("variance additivity across dyadic ratios") {
    const OmegaLaw half = omega_law(model, 0.5);
    const OmegaLaw deep = omega_law(model, std::pow(0.5, 8));
    CHECK(deep.variance == Catch::Approx(8.0 * half.variance).epsilon(1e-12));
    CHECK(deep.mean == Catch::Approx(8.0 * half.mean).epsilon(1e-12));
  }
}

TEST_CASE("config validation", "[cascade]") {
  CHECK_THROWS_AS(CascadeConfig::with_grid_cutoff(1.0, 1.0, 100), config_error);  // not 2^k
  CHECK_THROWS_AS(CascadeConfig::with_grid_cutoff(0.0, 1.0, 64), config_error);
  CascadeConfig c = CascadeConfig::with_grid_cutoff(1.0, 1.0, 64);
  c.l = 0.5;  // above the grid step
  CHECK_THROWS_AS(c.validate(), config_error);
  c.l = 2.0;  // above T
  CHECK_THROWS_AS(c.validate(), config_error);
}
