#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mfrw/errors.hpp"

namespace mfrw {

/// E|Z|^p for standard normal Z and real p > 0:  2^{p/2} Gamma((p+1)/2)/sqrt(pi).
inline double gaussian_abs_moment(double p) {
  if (!(p > 0.0)) throw domain_error("gaussian_abs_moment: p must be positive");
  return std::exp(0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0))) /
         std::sqrt(3.14159265358979323846264338327950288);
}

/// Gauss-Hermite rule for the standard normal weight: integrates f against
/// phi(x) dx exactly for polynomials of degree <= 2n-1. Nodes and weights by
/// Golub-Welsch on the probabilists' recurrence (off-diagonal sqrt(k)).
inline std::pair<std::vector<double>, std::vector<double>> gauss_hermite_prob(int n) {
  if (n < 1) throw domain_error("gauss_hermite_prob: need n >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> nodes(n), weights(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = v0 * v0;  // weights of the probability measure sum to 1
  }
  return {nodes, weights};
}

/// Hermite expansion of G(x) = |x|^p - c_p over the probabilists' polynomials
/// He_r: g_r = E[G(Z) He_r(Z)] / r!. G is centered and even, so g_0 = g_1 = 0
/// and odd coefficients vanish; for even p the expansion terminates at r = p.
/// truncation_tail = E G(Z)^2 - sum_{r<=r_max} g_r^2 r! (zero when r_max >= p).
struct HermiteExpansion {
  int p = 0;
  int r_max = 8;
  std::vector<double> g;  ///< g_0 .. g_{r_max}
  double truncation_tail = 0.0;

  double weighted_square_sum() const {
    double acc = 0.0, fact = 1.0;
    for (std::size_t r = 0; r < g.size(); ++r) {
      if (r > 0) fact *= static_cast<double>(r);
      acc += g[r] * g[r] * fact;
    }
    return acc;
  }
};

inline HermiteExpansion hermite_coeffs(int p, int r_max = 8) {
  if (p < 2 || p % 2 != 0) throw domain_error("hermite_coeffs: p must be even and >= 2");
  if (r_max < 2) throw domain_error("hermite_coeffs: r_max must be >= 2");
  const double c_p = gaussian_abs_moment(static_cast<double>(p));
  const int n_nodes = std::max(64, (p + r_max) / 2 + 8);
  auto [x, w] = gauss_hermite_prob(n_nodes);
  const std::size_t nn = x.size();

  // He_r at every node, r = 0..r_max
  std::vector<std::vector<double>> he(static_cast<std::size_t>(r_max) + 1,
                                      std::vector<double>(nn));
  for (std::size_t i = 0; i < nn; ++i) he[0][i] = 1.0;
  if (r_max >= 1)
    for (std::size_t i = 0; i < nn; ++i) he[1][i] = x[i];
  for (int r = 2; r <= r_max; ++r)
    for (std::size_t i = 0; i < nn; ++i)
      he[r][i] = x[i] * he[r - 1][i] - static_cast<double>(r - 1) * he[r - 2][i];

  HermiteExpansion exp;
  exp.p = p;
  exp.r_max = r_max;
  exp.g.assign(static_cast<std::size_t>(r_max) + 1, 0.0);
  double fact = 1.0;
  for (int r = 0; r <= r_max; ++r) {
    if (r > 0) fact *= static_cast<double>(r);
    if (r < 2 || r % 2 != 0) continue;  // centered even function
    double acc = 0.0;
    for (std::size_t i = 0; i < nn; ++i)
      acc += w[i] * (std::pow(std::abs(x[i]), p) - c_p) * he[static_cast<std::size_t>(r)][i];
    exp.g[static_cast<std::size_t>(r)] = acc / fact;
  }
  const double full = gaussian_abs_moment(2.0 * p) - c_p * c_p;  // E G(Z)^2
  exp.truncation_tail = full - exp.weighted_square_sum();
  return exp;
}

}  // namespace mfrw
