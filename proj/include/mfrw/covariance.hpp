#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mfrw/cascade.hpp"
#include "mfrw/errors.hpp"
#include "mfrw/kernel.hpp"
#include "mfrw/parallel.hpp"

namespace mfrw {

struct CovProvenance {
  ScalingModel model;
  CascadeConfig config;
  double H = 0.0;
  std::size_t m_n = 0;
  std::size_t refine = 1;
  std::uint64_t measure_seed = 0;
};

/// Random covariance of the walk increments given one measure draw:
/// sigma_{jk} = sum over sub-cell pairs of mass_u mass_v Kbar(u,v), where
/// Kbar is the cell-pair average of the fBm kernel. Immutable after build.
class ConditionalCovariance {
 public:
  ConditionalCovariance(Eigen::MatrixXd sigma, CovProvenance prov)
      : sigma_(std::move(sigma)), prov_(prov) {
    const Eigen::Index m = sigma_.rows();
    a_.resize(static_cast<std::size_t>(m));
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = sigma_(j, j);
      if (!(d > 0.0)) throw numerics_error("ConditionalCovariance: nonpositive diagonal entry");
      a_[static_cast<std::size_t>(j)] = std::sqrt(d);
    }
  }

  std::size_t size() const noexcept { return a_.size(); }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  const std::vector<double>& a() const noexcept { return a_; }
  const CovProvenance& provenance() const noexcept { return prov_; }

  double rho(std::size_t j, std::size_t k) const { return sigma_(j, k) / (a_[j] * a_[k]); }

  /// Lower Cholesky factor under the jitter policy: plain attempt, then
  /// diagonal lifts of 1e-12 and 1e-10 times the mean diagonal, then failure
  /// reporting the pivot index. The jitter actually applied is recorded.
  const Eigen::MatrixXd& cholesky() const {
    if (!chol_) {
      Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
      double used = 0.0;
      if (llt.info() != Eigen::Success) {
        const double base = sigma_.trace() / static_cast<double>(sigma_.rows());
        for (double eps : {1e-12, 1e-10}) {
          Eigen::MatrixXd lifted = sigma_;
          lifted.diagonal().array() += eps * base;
          llt.compute(lifted);
          if (llt.info() == Eigen::Success) {
            used = eps;
            break;
          }
        }
        if (llt.info() != Eigen::Success) {
          std::ostringstream os;
          os << "conditional covariance Cholesky failed after jitter; pivot index "
             << failing_pivot();
          throw numerics_error(os.str());
        }
      }
      jitter_ = used;
      chol_ = llt.matrixL();
    }
    return *chol_;
  }

  double jitter_used() const {
    cholesky();
    return jitter_;
  }

 private:
  /// Unblocked scan used only on the failure path to name the pivot.
  Eigen::Index failing_pivot() const {
    Eigen::MatrixXd A = sigma_;
    const Eigen::Index m = A.rows();
    for (Eigen::Index k = 0; k < m; ++k) {
      double d = A(k, k);
      for (Eigen::Index i = 0; i < k; ++i) d -= A(k, i) * A(k, i);
      if (!(d > 0.0)) return k;
      A(k, k) = std::sqrt(d);
      for (Eigen::Index r = k + 1; r < m; ++r) {
        double v = A(r, k);
        for (Eigen::Index i = 0; i < k; ++i) v -= A(r, i) * A(k, i);
        A(r, k) = v / A(k, k);
      }
    }
    return -1;
  }

  Eigen::MatrixXd sigma_;
  std::vector<double> a_;
  CovProvenance prov_;
  mutable std::optional<Eigen::MatrixXd> chol_;
  mutable double jitter_ = 0.0;
};

/// Assembles the conditional covariance of m_n increments from a beta = 1
/// measure with n_cells = m_n * refine. The sub-cell kernel average uses the
/// exact closed-form cell integral, so the |u-v|^{2H-2} singularity on the
/// diagonal never appears. Row blocks are assembled in parallel; every entry
/// is written once, so the matrix is identical for any worker count.
inline ConditionalCovariance build_conditional_covariance(const MeasureGrid& measure, double H,
                                                          std::size_t m_n, std::size_t refine) {
  if (measure.beta != 1.0)
    throw domain_error("build_conditional_covariance: measure must have beta = 1");
  if (refine < 1 || measure.masses.size() != m_n * refine)
    throw domain_error("build_conditional_covariance: need n_cells = m_n * refine");
  if (!(H > 0.5) || !(H < 1.0))
    throw domain_error("build_conditional_covariance: H must lie in (1/2, 1)");
  for (double mass : measure.masses)
    if (!std::isfinite(mass)) throw data_error("build_conditional_covariance: non-finite mass");

  const std::size_t n_sub = measure.masses.size();
  const double sub_step = measure.config.step();
  // Kernel cell-pair averages by lag: Kbar(d) = cell integral / sub_step^2.
  std::vector<double> kbar(n_sub);
  const double inv_area = 1.0 / (sub_step * sub_step);
  for (std::size_t d = 0; d < n_sub; ++d)
    kbar[d] = cell_kernel_integral(H, static_cast<std::int64_t>(d), 0, sub_step) * inv_area;

  Eigen::MatrixXd sigma(static_cast<Eigen::Index>(m_n), static_cast<Eigen::Index>(m_n));
  const double* mass = measure.masses.data();
  parallel_for(m_n, [&](std::size_t j) {
    for (std::size_t k = j; k < m_n; ++k) {
      const std::size_t base = (k - j) * refine;
      double acc = 0.0;
      for (std::size_t a = 0; a < refine; ++a) {
        const double mj = mass[j * refine + a];
        const double* mk = mass + k * refine;
        // lag between sub-cell a of block j and sub-cell b of block k
        double row = 0.0;
        for (std::size_t b = 0; b < refine; ++b) {
          const std::size_t lag = base + b >= a ? base + b - a : a - base - b;
          row += mk[b] * kbar[lag];
        }
        acc += mj * row;
      }
      sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = acc;
      sigma(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = acc;
    }
  });

  CovProvenance prov;
  prov.model = measure.model;
  prov.config = measure.config;
  prov.H = H;
  prov.m_n = m_n;
  prov.refine = refine;
  prov.measure_seed = measure.seed;
  return ConditionalCovariance(std::move(sigma), prov);
}

/// Largest rho(j,k) |j-k|^{2-2H} over pairs with |j-k| >= 2; the finite
/// correlation-envelope constant of one draw.
inline double correlation_envelope_constant(const ConditionalCovariance& cov) {
  const std::size_t m = cov.size();
  const double H = cov.provenance().H;
  double best = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = j + 2; k < m; ++k) {
      const double w = cov.rho(j, k) * std::pow(static_cast<double>(k - j), 2.0 - 2.0 * H);
      if (w > best) best = w;
    }
  return best;
}

}  // namespace mfrw
