#pragma once

#include <cmath>
#include <cstddef>

#include "mfrw/errors.hpp"

namespace mfrw {

inline bool is_power_of_two(std::size_t n) noexcept { return n >= 1 && (n & (n - 1)) == 0; }

/// Geometry of a cascade synthesis: decorrelation scale T, small-scale cutoff
/// l, simulated window length and grid resolution. The cutoff defaults to the
/// grid step (the field is flat in law below the cutoff, so finer sampling
/// would add nothing).
struct CascadeConfig {
  double T = 1.0;
  double l = 0.0;
  double domain_length = 1.0;
  std::size_t n_cells = 0;

  static CascadeConfig with_grid_cutoff(double T, double domain_length, std::size_t n_cells) {
    CascadeConfig cfg;
    cfg.T = T;
    cfg.domain_length = domain_length;
    cfg.n_cells = n_cells;
    cfg.l = domain_length / static_cast<double>(n_cells);
    cfg.validate();
    return cfg;
  }

  double step() const noexcept { return domain_length / static_cast<double>(n_cells); }

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw config_error("CascadeConfig: T must be positive");
    if (!(domain_length > 0.0) || !std::isfinite(domain_length))
      throw config_error("CascadeConfig: domain_length must be positive");
    if (n_cells < 2 || !is_power_of_two(n_cells))
      throw config_error("CascadeConfig: n_cells must be a power of two >= 2");
    if (!(l > 0.0) || !(l <= T)) throw config_error("CascadeConfig: need 0 < l <= T");
    if (l > step() * (1.0 + 1e-12))
      throw config_error("CascadeConfig: cutoff l must not exceed the grid step");
  }
};

}  // namespace mfrw
