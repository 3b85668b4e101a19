#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "mfrw/errors.hpp"

namespace mfrw {

/// Log-normal cascade moment structure. The drift is pinned to -lambda2/2 so
/// that the cumulant scaling function psi satisfies psi(0) = psi(1) = 0; the
/// measure then has unit mean density. Other infinitely divisible families
/// would plug in through the same psi/zeta evaluation seam.
struct ScalingModel {
  double lambda2 = 0.0;  ///< intermittency parameter, >= 0
  double drift = 0.0;    ///< cascade drift, always -lambda2/2

  static ScalingModel log_normal(double lambda2) {
    if (!(lambda2 >= 0.0) || !std::isfinite(lambda2))
      throw config_error("ScalingModel: lambda2 must be finite and >= 0");
    return ScalingModel{lambda2, -0.5 * lambda2};
  }
};

/// Cumulant scaling function psi(q) = drift*q + lambda2*q^2/2.
inline double psi(const ScalingModel& model, double q) noexcept {
  return model.drift * q + 0.5 * model.lambda2 * q * q;
}

inline double psi_prime(const ScalingModel& model, double q) noexcept {
  return model.drift + model.lambda2 * q;
}

/// Moment scaling exponent of the measure, zeta(q) = q - psi(q).
inline double zeta(const ScalingModel& model, double q) noexcept {
  return q - psi(model, q);
}

/// Second difference psi(m) + psi(m-2) - 2 psi(m-1); equals lambda2 for every
/// m >= 2 in the log-normal family.
inline double delta_m(const ScalingModel& model, int m) {
  if (m < 2) throw domain_error("delta_m: m must be >= 2");
  return psi(model, m) + psi(model, m - 2) - 2.0 * psi(model, m - 1);
}

/// Covariance kernel of the cascade at cutoff l and decorrelation scale T:
/// log(T/l) + 1 - v/l on [0,l], log(T/v) on [l,T], 0 beyond T.
/// Continuous and nonincreasing in v.
inline double rho_l(double v, double l, double T) {
  if (!(l > 0.0) || !(l <= T)) throw config_error("rho_l: need 0 < l <= T");
  if (v < 0.0) throw domain_error("rho_l: v must be >= 0");
  if (v <= l) return std::log(T / l) + 1.0 - v / l;
  if (v <= T) return std::log(T / v);
  return 0.0;
}

/// Gaussian law of the scale factor Omega_lambda: for ratio in (0,1),
/// mean = drift * log(1/ratio), variance = lambda2 * log(1/ratio), so that
/// E exp(q Omega) = ratio^{-psi(q)} for all q.
struct OmegaLaw {
  double mean = 0.0;
  double variance = 0.0;
};

inline OmegaLaw omega_law(const ScalingModel& model, double lambda_ratio) {
  if (!(lambda_ratio > 0.0) || !(lambda_ratio < 1.0))
    throw domain_error("omega_law: lambda_ratio must lie in (0,1)");
  const double log_inv = std::log(1.0 / lambda_ratio);
  return OmegaLaw{model.drift * log_inv, model.lambda2 * log_inv};
}

struct ConditionEntry {
  bool pass = false;
  double margin = 0.0;  ///< signed distance to the boundary, > 0 means pass
};

/// Admissibility report for a (model, H, p) triple. Never throws; failures are
/// carried in the entries. The A1 existence quantifier is evaluated on the
/// fixed epsilon grid below (recorded in the report).
struct ConditionReport {
  ConditionEntry a1;       ///< zeta(1+eps) > 1 for some eps on the grid
  ConditionEntry a_q;      ///< zeta(p) > 1
  ConditionEntry a_2q;     ///< zeta(2p) > 1
  ConditionEntry h1;       ///< H - psi(2)/2 > 1/2
  ConditionEntry h_half;   ///< H + psi(1/2) > 1/2
  ConditionEntry lemma26;  ///< 2H - 1 - delta_m > 0 for all 2 <= m <= 2p
  ConditionEntry a_p;      ///< 2p psi'(2p) < psi(2p) + 1
  ConditionEntry h_range;  ///< 1/2 < H < 3/4
  double conjectural_margin = 0.0;  ///< 2pH - 1 - psi(2p); informational only
  double H = 0.0;
  int p = 0;
  static constexpr std::array<double, 5> a1_grid{0.01, 0.05, 0.1, 0.5, 1.0};

  bool all_pass() const {
    return a1.pass && a_q.pass && a_2q.pass && h1.pass && h_half.pass &&
           lemma26.pass && a_p.pass && h_range.pass;
  }

  std::string summary() const {
    std::ostringstream os;
    auto row = [&os](const char* name, const ConditionEntry& e) {
      os << name << (e.pass ? " pass " : " FAIL ") << "(margin " << e.margin << ") ";
    };
    row("a1", a1);
    row("a_q", a_q);
    row("a_2q", a_2q);
    row("h1", h1);
    row("h_half", h_half);
    row("lemma26", lemma26);
    row("a_p", a_p);
    row("h_range", h_range);
    return os.str();
  }
};

inline ConditionReport check_conditions(const ScalingModel& model, double H, int p) {
  if (p < 2 || p % 2 != 0) throw domain_error("check_conditions: p must be even and >= 2");
  ConditionReport rep;
  rep.H = H;
  rep.p = p;

  double a1_margin = -1e300;
  for (double eps : ConditionReport::a1_grid)
    a1_margin = std::max(a1_margin, zeta(model, 1.0 + eps) - 1.0);
  rep.a1 = {a1_margin > 0.0, a1_margin};

  const double aq = zeta(model, p) - 1.0;
  rep.a_q = {aq > 0.0, aq};
  const double a2q = zeta(model, 2.0 * p) - 1.0;
  rep.a_2q = {a2q > 0.0, a2q};

  const double h1 = H - 0.5 * psi(model, 2.0) - 0.5;
  rep.h1 = {h1 > 0.0, h1};
  const double hh = H + psi(model, 0.5) - 0.5;
  rep.h_half = {hh > 0.0, hh};

  double l26 = 1e300;
  for (int m = 2; m <= 2 * p; ++m) l26 = std::min(l26, 2.0 * H - 1.0 - delta_m(model, m));
  rep.lemma26 = {l26 > 0.0, l26};

  const double ap = psi(model, 2.0 * p) + 1.0 - 2.0 * p * psi_prime(model, 2.0 * p);
  rep.a_p = {ap > 0.0, ap};

  const double hr = std::min(H - 0.5, 0.75 - H);
  rep.h_range = {hr > 0.0, hr};

  rep.conjectural_margin = 2.0 * p * H - 1.0 - psi(model, 2.0 * p);
  return rep;
}

/// Thrown when an operation refuses to run because admissibility conditions
/// fail; carries the full report for diagnostics and CLI exit-code mapping.
class condition_error : public std::runtime_error {
 public:
  condition_error(const std::string& what, ConditionReport report)
      : std::runtime_error(what + " | " + report.summary()), report_(report) {}
  const ConditionReport& report() const noexcept { return report_; }

 private:
  ConditionReport report_;
};

}  // namespace mfrw
