#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mfrw/config.hpp"
#include "mfrw/errors.hpp"
#include "mfrw/fft.hpp"
#include "mfrw/rng.hpp"
#include "mfrw/scaling.hpp"

namespace mfrw {

/// One draw of the stationary log field w at cell midpoints:
/// Cov(w_i, w_j) = lambda2 * rho_l(|t_i - t_j|), mean = drift * rho_l(0).
struct LogField {
  std::vector<double> values;
  CascadeConfig config;
  ScalingModel model;
  std::uint64_t seed = 0;
};

/// Discretized multifractal measure: positive cell masses on the grid.
/// beta = 1 is the measure driving the walk; beta = 1/2 is the square-root
/// variant with its mean-one renormalizer (see field_to_measure).
struct MeasureGrid {
  std::vector<double> masses;
  double beta = 1.0;
  CascadeConfig config;
  ScalingModel model;
  std::uint64_t seed = 0;

  /// Pairwise-tree sum over a dyadic range; bit-identical under regrouping
  /// into dyadic blocks, which makes coarsening conserve mass to the last bit.
  static double tree_sum(const double* x, std::size_t n) {
    if (n == 1) return x[0];
    const std::size_t h = n / 2;
    return tree_sum(x, h) + tree_sum(x + h, n - h);
  }

  double total_mass() const { return masses.empty() ? 0.0 : tree_sum(masses.data(), masses.size()); }

  /// Mass of [0, t]: whole cells via tree sum plus a proportional part of the
  /// straddling cell.
  double mass_up_to(double t) const {
    const double dt = config.step();
    if (t <= 0.0) return 0.0;
    const double cells = t / dt;
    std::size_t whole = static_cast<std::size_t>(cells);
    if (whole > masses.size()) whole = masses.size();
    double acc = 0.0;
    // fixed-order block sum over the largest dyadic prefix blocks
    std::size_t pos = 0;
    while (pos < whole) {
      std::size_t blk = 1;
      while (blk * 2 <= whole - pos && (pos % (blk * 2)) == 0) blk *= 2;
      acc += tree_sum(masses.data() + pos, blk);
      pos += blk;
    }
    const double frac = cells - static_cast<double>(whole);
    if (whole < masses.size() && frac > 0.0) acc += masses[whole] * frac;
    return acc;
  }
};

namespace detail {

/// Eigenvalues of the circulant embedding of the covariance sequence c_0..c_n
/// (row length 2n). Returns real spectrum.
inline std::vector<double> embedding_spectrum(const std::vector<double>& cov_row) {
  const std::size_t n = cov_row.size() - 1;  // lags 0..n
  const std::size_t N = 2 * n;
  std::vector<std::complex<double>> row(N);
  for (std::size_t k = 0; k <= n; ++k) row[k] = cov_row[k];
  for (std::size_t k = 1; k < n; ++k) row[N - k] = cov_row[k];
  fft_radix2(row, false);
  std::vector<double> eig(N);
  for (std::size_t k = 0; k < N; ++k) eig[k] = row[k].real();
  return eig;
}

/// Stationary Gaussian vector of length n with covariance cov_row[0..n] via
/// circulant embedding; negative eigenvalues below -tol*max trigger the
/// caller's fallback, smaller negatives are clamped to zero.
/// Returns true on success.
inline bool sample_embedded(const std::vector<double>& cov_row, std::size_t n, Rng& rng,
                            std::vector<double>& out, double& most_negative,
                            double clamp_tol = 1e-9) {
  std::vector<double> eig = embedding_spectrum(cov_row);
  const std::size_t N = eig.size();
  double emax = 0.0, emin = 0.0;
  for (double e : eig) {
    emax = std::max(emax, e);
    emin = std::min(emin, e);
  }
  most_negative = emin;
  if (emax <= 0.0) {  // identically zero covariance
    out.assign(n, 0.0);
    return true;
  }
  if (emin < -clamp_tol * emax) return false;
  std::vector<std::complex<double>> z(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double re = rng.next_gaussian();
    const double im = rng.next_gaussian();
    const double s = std::sqrt(std::max(eig[k], 0.0) / (2.0 * static_cast<double>(N)));
    z[k] = std::complex<double>(re * s, im * s);
  }
  fft_radix2(z, false);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i].real() * std::sqrt(2.0);
  return true;
}

/// Dense Cholesky fallback for the stationary draw.
inline void sample_dense(const std::vector<double>& cov_row, std::size_t n, Rng& rng,
                         std::vector<double>& out, double most_negative) {
  Eigen::MatrixXd C(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) C(i, j) = cov_row[i >= j ? i - j : j - i];
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) {
    // tiny diagonal lift before giving up
    const double lift = 1e-12 * C.trace() / static_cast<double>(n);
    C.diagonal().array() += lift;
    llt.compute(C);
    if (llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "log-field synthesis failed: circulant embedding most negative eigenvalue "
         << most_negative << " and dense Cholesky not positive definite";
      throw synthesis_error(os.str());
    }
  }
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < n; ++i) z(static_cast<Eigen::Index>(i)) = rng.next_gaussian();
  Eigen::VectorXd y = llt.matrixL() * z;
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = y(static_cast<Eigen::Index>(i));
}

}  // namespace detail

/// Draws the stationary log field on the configured grid. Deterministic in
/// (model, config, seed). lambda2 = 0 yields the exactly-zero field.
inline LogField synth_log_field(const ScalingModel& model, const CascadeConfig& config,
                                std::uint64_t seed) {
  config.validate();
  LogField field;
  field.config = config;
  field.model = model;
  field.seed = seed;
  const std::size_t n = config.n_cells;
  if (model.lambda2 == 0.0) {
    field.values.assign(n, 0.0);  // drift is 0 as well; w == 0 exactly
    return field;
  }
  const double dt = config.step();
  std::vector<double> cov_row(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double v = static_cast<double>(k) * dt;
    cov_row[k] = model.lambda2 * (v > config.T ? 0.0 : rho_l(v, config.l, config.T));
  }
  Rng rng(mix64(seed, 0x6c6f676669656cULL));  // independent stream per purpose
  std::vector<double> w;
  double most_negative = 0.0;
  if (!detail::sample_embedded(cov_row, n, rng, w, most_negative)) {
    Rng rng2(mix64(seed, 0x64656e7365ULL));
    detail::sample_dense(cov_row, n, rng2, w, most_negative);
  }
  const double mean = model.drift * rho_l(0.0, config.l, config.T);
  field.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) field.values[i] = w[i] + mean;
  return field;
}

/// Turns a log field draw into cell masses (midpoint rule over each cell).
/// beta = 1:   mass = step * exp(w)
/// beta = 1/2: mass = step * exp(-psi(1/2) rho_l(0)) * exp(w/2); the
/// renormalizer is the exact reciprocal of E exp(w/2), so E mass = step and
/// the log(1/l) part cancels identically.
inline MeasureGrid field_to_measure(const LogField& field, double beta) {
  if (beta != 1.0 && beta != 0.5) throw domain_error("field_to_measure: beta must be 1 or 1/2");
  MeasureGrid m;
  m.beta = beta;
  m.config = field.config;
  m.model = field.model;
  m.seed = field.seed;
  const double dt = field.config.step();
  m.masses.resize(field.values.size());
  if (beta == 1.0) {
    for (std::size_t i = 0; i < m.masses.size(); ++i) m.masses[i] = dt * std::exp(field.values[i]);
  } else {
    const double rho0 = rho_l(0.0, field.config.l, field.config.T);
    const double renorm = std::exp(-psi(field.model, 0.5) * rho0);
    for (std::size_t i = 0; i < m.masses.size(); ++i)
      m.masses[i] = dt * renorm * std::exp(0.5 * field.values[i]);
  }
  return m;
}

/// Dyadic aggregation to 2^level cells; the group sums reuse the pairwise
/// tree, so total mass is conserved bit-exactly.
inline MeasureGrid coarsen_measure(const MeasureGrid& measure, int level) {
  const std::size_t n = measure.masses.size();
  if (level < 0) throw domain_error("coarsen_measure: level must be >= 0");
  const std::size_t target = std::size_t{1} << level;
  if (target > n || n % target != 0)
    throw domain_error("coarsen_measure: 2^level must divide n_cells");
  const std::size_t group = n / target;
  MeasureGrid out = measure;
  out.masses.resize(target);
  for (std::size_t j = 0; j < target; ++j)
    out.masses[j] = MeasureGrid::tree_sum(measure.masses.data() + j * group, group);
  out.config.n_cells = target;
  out.config.l = measure.config.l;  // cutoff of the underlying field is unchanged
  return out;
}

/// One draw of the scale factor Omega_lambda (Gaussian with omega_law
/// parameters). Deterministic in the seed.
inline double sample_omega(const ScalingModel& model, double lambda_ratio, std::uint64_t seed) {
  const OmegaLaw law = omega_law(model, lambda_ratio);
  Rng rng(mix64(seed, 0x6f6d656761ULL));
  return law.mean + std::sqrt(law.variance) * rng.next_gaussian();
}

}  // namespace mfrw
