#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mfrw/covariance.hpp"
#include "mfrw/errors.hpp"
#include "mfrw/hermite.hpp"
#include "mfrw/paths.hpp"
#include "mfrw/scaling.hpp"

namespace mfrw {

/// One row of the empirical structure-function table: the mean of |dX|^p over
/// all dyadic increments at scale tau = 2^{-level} * domain across the path
/// set. se_log2 carries the across-path spread of log2 of the per-path means
/// (0 when only one path); it feeds the replication confidence interval.
struct StructureRow {
  int level = 0;
  double tau = 0.0;
  double p = 0.0;
  double raw_mean = 0.0;
  std::size_t count = 0;  ///< increments per path at this level, = 2^level
  double se_log2 = 0.0;
  std::size_t n_paths = 0;
};

struct StructureFunctionTable {
  std::vector<StructureRow> rows;
  double domain_length = 1.0;

  const StructureRow* find(int level, double p) const {
    for (const auto& r : rows)
      if (r.level == level && r.p == p) return &r;
    return nullptr;
  }
};

/// Empirical structure functions of a path set over dyadic levels. Increments
/// at level n are differences of the running sums at stride m_n / 2^n, so
/// coarse levels aggregate fine increments exactly. Fixed-order accumulation.
inline StructureFunctionTable structure_function(std::span<const PathSample> paths,
                                                 const std::vector<double>& p_list,
                                                 const std::vector<int>& levels,
                                                 double domain_length = 1.0) {
  if (paths.empty()) throw data_error("structure_function: empty path list");
  const std::size_t m_n = paths[0].increments.size();
  if (!is_power_of_two(m_n)) throw data_error("structure_function: paths must have 2^k increments");
  for (const auto& path : paths)
    if (path.increments.size() != m_n)
      throw data_error("structure_function: paths must share one grid");

  StructureFunctionTable table;
  table.domain_length = domain_length;
  for (double p : p_list) {
    if (!(p > 0.0)) throw domain_error("structure_function: p must be positive");
    for (int level : levels) {
      const std::size_t count = std::size_t{1} << level;
      if (level < 0 || count > m_n)
        throw domain_error("structure_function: level must satisfy 2^level <= m_n");
      const std::size_t stride = m_n / count;
      double grand = 0.0;
      double log_acc = 0.0, log_sq = 0.0;
      std::size_t positive_paths = 0;
      for (const auto& path : paths) {
        double acc = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
          const double inc = path.cumulative[(k + 1) * stride] - path.cumulative[k * stride];
          acc += std::pow(std::abs(inc), p);
        }
        const double mean = acc / static_cast<double>(count);
        grand += mean;
        if (mean > 0.0) {
          const double lg = std::log2(mean);
          log_acc += lg;
          log_sq += lg * lg;
          ++positive_paths;
        }
      }
      StructureRow row;
      row.level = level;
      row.tau = domain_length / static_cast<double>(count);
      row.p = p;
      row.raw_mean = grand / static_cast<double>(paths.size());
      row.count = count;
      row.n_paths = paths.size();
      if (positive_paths >= 2) {
        const double n = static_cast<double>(positive_paths);
        const double var = std::max(0.0, (log_sq - log_acc * log_acc / n) / (n - 1.0));
        row.se_log2 = std::sqrt(var / n);
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

/// Centered p-variation statistic of one path against its conditional law:
/// (1/sqrt(m)) sum_j (|dX_j|^p - c_p a_j^p).
inline double z_statistic(const PathSample& path, const ConditionalCovariance& cov, int p) {
  if (p < 2 || p % 2 != 0) throw domain_error("z_statistic: p must be even and >= 2");
  const std::size_t m = cov.size();
  if (path.increments.size() != m) throw domain_error("z_statistic: path/covariance size mismatch");
  const double c_p = gaussian_abs_moment(static_cast<double>(p));
  const std::vector<double>& a = cov.a();
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    acc += std::pow(std::abs(path.increments[j]), p) - c_p * std::pow(a[j], p);
  return acc / std::sqrt(static_cast<double>(m));
}

/// Quadratic functional (1/m) sum_{j,k} rho(j,k)^r a_j^p a_k^p of the stored
/// covariance. Exact double sum, accumulated row by row in index order.
inline double gamma_n(const ConditionalCovariance& cov, int r, int p) {
  if (r < 2 || r % 2 != 0) throw domain_error("gamma_n: r must be even and >= 2");
  if (p < 2 || p % 2 != 0) throw domain_error("gamma_n: p must be even and >= 2");
  const std::size_t m = cov.size();
  const std::vector<double>& a = cov.a();
  std::vector<double> ap(m);
  for (std::size_t j = 0; j < m; ++j) ap[j] = std::pow(a[j], p);
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double row = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      row += std::pow(cov.rho(j, k), r) * ap[k];
    acc += ap[j] * row;
  }
  return acc / static_cast<double>(m);
}

/// Hermite-weighted variance functional sum_{r even} g_r^2 r! Gamma_n(r,p).
/// Exact for p in {2,4} with the default truncation (the expansion is finite).
inline double gamma_n_weighted(const ConditionalCovariance& cov, int p, int r_max = 8) {
  const HermiteExpansion exp = hermite_coeffs(p, r_max);
  double acc = 0.0, fact = 1.0;
  for (int r = 0; r <= r_max; ++r) {
    if (r > 0) fact *= static_cast<double>(r);
    if (r < 2 || r % 2 != 0) continue;
    const double g = exp.g[static_cast<std::size_t>(r)];
    if (g == 0.0) continue;
    acc += g * g * fact * gamma_n(cov, r, p);
  }
  return acc;
}

/// Normalized conditional-mean statistic
/// B_n(p) = (m^{pH - psi(p)} / m) sum_j c_p a_j^p, with H and psi taken from
/// the covariance provenance.
inline double b_statistic(const ConditionalCovariance& cov, int p) {
  if (p < 2 || p % 2 != 0) throw domain_error("b_statistic: p must be even and >= 2");
  const CovProvenance& prov = cov.provenance();
  if (!(prov.H > 0.0)) throw domain_error("b_statistic: covariance lacks provenance");
  const std::size_t m = cov.size();
  const double c_p = gaussian_abs_moment(static_cast<double>(p));
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) acc += std::pow(cov.a()[j], p);
  const double dm = static_cast<double>(m);
  const double expo = static_cast<double>(p) * prov.H - psi(prov.model, static_cast<double>(p));
  return std::pow(dm, expo) / dm * c_p * acc;
}

/// Scaling-exponent estimate from a structure-function table: ordinary least
/// squares of log2(raw_mean) on the level index, sign-normalized so the slope
/// estimates the p-th moment exponent (pH - psi(p) for walk data). The CI is
/// either the across-path replication spread propagated through the OLS
/// weights (default) or the plug-in conditional width
/// sqrt(Gamma_n(p)) / (B_n(p) m^{1/2+psi(p)-psi(2p)/2} ln m) when a
/// covariance is supplied.
struct ZetaEstimate {
  double p = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<int> levels;
  std::string method;
};

inline ZetaEstimate estimate_zeta(const StructureFunctionTable& table, double p,
                                  std::pair<int, int> scale_range,
                                  const ConditionalCovariance* cov = nullptr) {
  std::vector<const StructureRow*> rows;
  for (const auto& r : table.rows)
    if (r.p == p && r.level >= scale_range.first && r.level <= scale_range.second)
      rows.push_back(&r);
  if (rows.size() < 3) throw data_error("estimate_zeta: need >= 3 levels in scale_range");
  for (const auto* r : rows)
    if (!(r->raw_mean > 0.0)) throw data_error("estimate_zeta: degenerate (nonpositive) raw_mean");

  const double n = static_cast<double>(rows.size());
  double sx = 0.0, sy = 0.0;
  for (const auto* r : rows) {
    sx += r->level;
    sy += std::log2(r->raw_mean);
  }
  const double xbar = sx / n, ybar = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto* r : rows) {
    const double dx = r->level - xbar;
    sxx += dx * dx;
    sxy += dx * (std::log2(r->raw_mean) - ybar);
  }
  const double ols_slope = sxy / sxx;

  ZetaEstimate est;
  est.p = p;
  est.slope = -ols_slope;  // raw_mean ~ tau^zeta = 2^{-level * zeta} * const
  est.intercept = ybar - ols_slope * xbar;
  for (const auto* r : rows) est.levels.push_back(r->level);

  const double z95 = 1.959963984540054;
  if (cov != nullptr) {
    const CovProvenance& prov = cov->provenance();
    const double m = static_cast<double>(cov->size());
    const int pi = static_cast<int>(p);
    const double gam = gamma_n_weighted(*cov, pi);
    const double bnp = b_statistic(*cov, pi);
    const double rate = 0.5 + psi(prov.model, p) - 0.5 * psi(prov.model, 2.0 * p);
    const double width = std::sqrt(gam) / (bnp * std::pow(m, rate) * std::log(m));
    est.ci_low = est.slope - z95 * width;
    est.ci_high = est.slope + z95 * width;
    est.method = "plugin-clt";
  } else {
    // replication CI: Var(slope) = sum c_i^2 se_i^2 with OLS weights c_i
    double var_slope = 0.0;
    bool have_se = false;
    for (const auto* r : rows) {
      const double c = (r->level - xbar) / sxx;
      var_slope += c * c * r->se_log2 * r->se_log2;
      if (r->se_log2 > 0.0) have_se = true;
    }
    if (!have_se) {
      // single-path fallback: residual variance of the fit
      double ss = 0.0;
      for (const auto* r : rows) {
        const double fit = est.intercept + ols_slope * r->level;
        const double res = std::log2(r->raw_mean) - fit;
        ss += res * res;
      }
      if (rows.size() > 2) var_slope = ss / (n - 2.0) / sxx;
    }
    const double width = std::sqrt(var_slope);
    est.ci_low = est.slope - z95 * width;
    est.ci_high = est.slope + z95 * width;
    est.method = "replication";
  }
  return est;
}

}  // namespace mfrw
