#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: plain adaptive Simpson quadrature and direct closed forms written
// the naive way.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracles {

inline double adaptive_simpson_impl(const std::function<double(double)>& f, double a, double b,
                                    double fa, double fb, double fc, double tol, int depth) {
  const double c = 0.5 * (a + b);
  const double d = 0.5 * (a + c), e = 0.5 * (c + b);
  const double fd = f(d), fe = f(e);
  const double s_whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
  const double s_left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
  const double s_right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
  const double err = s_left + s_right - s_whole;
  if (depth > 60) throw std::runtime_error("oracle quadrature: depth limit");
  if (std::abs(err) <= 15.0 * tol * std::max(1.0, std::abs(s_left + s_right)))
    return s_left + s_right + err / 15.0;
  return adaptive_simpson_impl(f, a, c, fa, fc, fd, 0.5 * tol, depth + 1) +
         adaptive_simpson_impl(f, c, b, fc, fb, fe, 0.5 * tol, depth + 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol) {
  const double c = 0.5 * (a + b);
  return adaptive_simpson_impl(f, a, b, f(a), f(b), f(c), tol, 0);
}

/// Quadrature oracle for the double integral of H(2H-1)|u-v|^{2H-2} over the
/// unit-cell pair at integer offset d, scaled by delta^{2H} for cell width
/// delta. Reduced to one dimension through the overlap weight; the endpoint
/// singularity at zero separation is removed by substitution.
inline double kernel_pair_integral(double H, long d, double delta, double tol = 1e-12) {
  const double cH = H * (2.0 * H - 1.0);
  const double q = 2.0 * H - 1.0;
  double value;
  if (d == 0) {
    // 2 cH int_0^1 (1-g) g^{2H-2} dg, sub g = x^{1/q}
    value = 2.0 * cH / q *
            adaptive_simpson(
                [q](double x) { return x <= 0.0 ? 1.0 : (1.0 - std::pow(x, 1.0 / q)); }, 0.0, 1.0,
                tol);
  } else {
    const double dd = static_cast<double>(d < 0 ? -d : d);
    // cH int_{d-1}^{d+1} (1 - |g - d|) g^{2H-2} dg, smooth away from 0
    auto f = [H, dd](double g) {
      return (1.0 - std::abs(g - dd)) * std::pow(g, 2.0 * H - 2.0);
    };
    if (dd > 1.0) {
      value = cH * adaptive_simpson(f, dd - 1.0, dd + 1.0, tol);
    } else {
      // d == 1: integrand touches g = 0 with weight 0; substitution again
      value = cH / q *
                  adaptive_simpson(
                      [q](double x) {
                        const double g = std::pow(x, 1.0 / q);
                        return (1.0 - std::abs(g - 1.0)) / std::max(g, 1e-300) * g;
                      },
                      0.0, 1.0, tol) +
              cH * adaptive_simpson(f, 1.0, 2.0, tol);
    }
  }
  return value * std::pow(delta, 2.0 * H);
}

/// E|Z|^p by quadrature of 2 int_0^inf x^p phi(x) dx.
inline double gaussian_abs_moment_quadrature(double p, double tol = 1e-12) {
  const double inv_sqrt2pi = 0.39894228040143267793994605993438;
  auto f = [p, inv_sqrt2pi](double x) {
    return 2.0 * std::pow(x, p) * inv_sqrt2pi * std::exp(-0.5 * x * x);
  };
  return adaptive_simpson(f, 0.0, 40.0, tol);
}

/// Probabilists' Hermite polynomial by recurrence.
inline double hermite_he(int r, double x) {
  double h0 = 1.0, h1 = x;
  if (r == 0) return h0;
  if (r == 1) return h1;
  for (int k = 2; k <= r; ++k) {
    const double h2 = x * h1 - static_cast<double>(k - 1) * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// Quadrature oracle for g_r = E[(|Z|^p - c_p) He_r(Z)] / r!.
inline double hermite_coeff_quadrature(int p, int r, double tol = 1e-12) {
  const double c_p = gaussian_abs_moment_quadrature(static_cast<double>(p), tol);
  const double inv_sqrt2pi = 0.39894228040143267793994605993438;
  auto f = [p, r, c_p, inv_sqrt2pi](double x) {
    return (std::pow(std::abs(x), p) - c_p) * hermite_he(r, x) * inv_sqrt2pi *
           std::exp(-0.5 * x * x);
  };
  double fact = 1.0;
  for (int k = 2; k <= r; ++k) fact *= k;
  return adaptive_simpson(f, -40.0, 40.0, tol) / fact;
}

/// Plain-form fGn autocovariance (unit-variance normalization at spacing
/// delta); naive arithmetic on purpose.
inline double fgn_gamma_naive(double H, long lag, double delta) {
  const double d = static_cast<double>(lag < 0 ? -lag : lag);
  return 0.5 * std::pow(delta, 2.0 * H) *
         (std::pow(d + 1.0, 2.0 * H) + std::pow(std::abs(d - 1.0), 2.0 * H) -
          2.0 * std::pow(d, 2.0 * H));
}

}  // namespace oracles
