#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mfrw/cascade.hpp"
#include "mfrw/covariance.hpp"
#include "mfrw/errors.hpp"
#include "mfrw/kernel.hpp"
#include "mfrw/parallel.hpp"
#include "mfrw/rng.hpp"
#include "mfrw/scaling.hpp"

namespace mfrw {

/// One sampled path, stored as increments plus running sums. The increments
/// are re-derived from the running sums after accumulation, so
/// cumulative[j] - cumulative[j-1] == increments[j-1] holds bit-exactly.
struct PathSample {
  std::vector<double> increments;  ///< m_n entries
  std::vector<double> cumulative;  ///< m_n + 1 entries, cumulative[0] = 0
  std::uint64_t seed = 0;

  static PathSample from_increments(std::vector<double> inc, std::uint64_t seed) {
    PathSample p;
    p.cumulative.resize(inc.size() + 1);
    p.cumulative[0] = 0.0;
    for (std::size_t j = 0; j < inc.size(); ++j) p.cumulative[j + 1] = p.cumulative[j] + inc[j];
    p.increments.resize(inc.size());
    for (std::size_t j = 0; j < inc.size(); ++j)
      p.increments[j] = p.cumulative[j + 1] - p.cumulative[j];
    p.seed = seed;
    return p;
  }
};

/// Conditionally Gaussian paths from a fixed covariance: increments = L z with
/// L the jittered lower Cholesky factor. Path r uses the stream
/// mix64(seed, r), so path sets are reproducible and order-independent.
inline std::vector<PathSample> sample_conditional_paths(const ConditionalCovariance& cov,
                                                        std::size_t n_paths, std::uint64_t seed) {
  const Eigen::MatrixXd& L = cov.cholesky();
  const std::size_t m = cov.size();
  std::vector<PathSample> out(n_paths);
  parallel_for(n_paths, [&](std::size_t r) {
    Rng rng(replica_seed(seed, r));
    Eigen::VectorXd z(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) z(static_cast<Eigen::Index>(i)) = rng.next_gaussian();
    Eigen::VectorXd x = L * z;
    std::vector<double> inc(m);
    for (std::size_t i = 0; i < m; ++i) inc[i] = x(static_cast<Eigen::Index>(i));
    out[r] = PathSample::from_increments(std::move(inc), replica_seed(seed, r));
  });
  return out;
}

struct MfrwSample {
  MeasureGrid measure;
  ConditionalCovariance cov;
  std::vector<PathSample> paths;
  ConditionReport conditions;
};

/// Full pipeline: log field -> beta=1 measure -> conditional covariance ->
/// conditional paths. Refuses (with the report attached) when the covariance
/// existence condition H - psi(2)/2 > 1/2 fails.
inline MfrwSample synth_mfrw(const ScalingModel& model, const CascadeConfig& config, double H,
                             std::size_t m_n, std::size_t refine, std::uint64_t seed,
                             std::size_t n_paths) {
  if (config.n_cells != m_n * refine)
    throw domain_error("synth_mfrw: config.n_cells must equal m_n * refine");
  ConditionReport rep = check_conditions(model, H, 2);
  if (!rep.h1.pass) throw condition_error("synth_mfrw refused: condition H1 fails", rep);
  LogField field = synth_log_field(model, config, seed);
  MeasureGrid measure = field_to_measure(field, 1.0);
  ConditionalCovariance cov = build_conditional_covariance(measure, H, m_n, refine);
  std::vector<PathSample> paths = sample_conditional_paths(cov, n_paths, mix64(seed, 0x70617468ULL));
  return MfrwSample{std::move(measure), std::move(cov), std::move(paths), rep};
}

/// Exact fractional Gaussian noise at spacing 1/m_n with unit variance at
/// t = 1, sampled by stationary circulant embedding (known nonnegative for
/// this covariance). Independent of the cascade machinery; serves as the
/// lambda2 = 0 oracle.
inline PathSample synth_fgn_exact(double H, std::size_t m_n, std::uint64_t seed) {
  if (!(H > 0.0) || !(H < 1.0)) throw domain_error("synth_fgn_exact: H must lie in (0,1)");
  if (!is_power_of_two(m_n) || m_n < 2)
    throw domain_error("synth_fgn_exact: m_n must be a power of two >= 2");
  const double delta = 1.0 / static_cast<double>(m_n);
  std::vector<double> cov_row(m_n + 1);
  for (std::size_t k = 0; k <= m_n; ++k)
    cov_row[k] = fgn_covariance(H, static_cast<std::int64_t>(k), delta);
  Rng rng(mix64(seed, 0x66676eULL));
  std::vector<double> inc;
  double most_negative = 0.0;
  if (!detail::sample_embedded(cov_row, m_n, rng, inc, most_negative)) {
    std::ostringstream os;
    os << "fGn embedding unexpectedly indefinite (most negative eigenvalue " << most_negative
       << ")";
    throw numerics_error(os.str());
  }
  return PathSample::from_increments(std::move(inc), seed);
}

/// Fractional Brownian motion run in the multifractal time theta_j = M[0,t_j]:
/// exact fBm on the nonuniform grid theta via dense Cholesky of the fBm
/// covariance. Conditional variance at t_j is theta_j^{2H}.
inline PathSample synth_subordinated(const MeasureGrid& measure, double H, std::uint64_t seed) {
  if (measure.beta != 1.0) throw domain_error("synth_subordinated: measure must have beta = 1");
  if (!(H > 0.0) || !(H < 1.0)) throw domain_error("synth_subordinated: H must lie in (0,1)");
  const std::size_t m = measure.masses.size();
  std::vector<double> theta(m);
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    acc += measure.masses[j];
    theta[j] = acc;
  }
  Eigen::MatrixXd C(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = 0.5 * (std::pow(theta[i], 2.0 * H) + std::pow(theta[j], 2.0 * H) -
                              std::pow(std::abs(theta[i] - theta[j]), 2.0 * H));
      C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      C(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) {
    C.diagonal().array() += 1e-12 * C.trace() / static_cast<double>(m);
    llt.compute(C);
    if (llt.info() != Eigen::Success)
      throw numerics_error("synth_subordinated: fBm Cholesky failed on the time-changed grid");
  }
  Rng rng(mix64(seed, 0x737562ULL));
  Eigen::VectorXd z(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) z(static_cast<Eigen::Index>(i)) = rng.next_gaussian();
  Eigen::VectorXd u = llt.matrixL() * z;
  std::vector<double> inc(m);
  double prev = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    inc[j] = u(static_cast<Eigen::Index>(j)) - prev;
    prev = u(static_cast<Eigen::Index>(j));
  }
  return PathSample::from_increments(std::move(inc), seed);
}

}  // namespace mfrw
