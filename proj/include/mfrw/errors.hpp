#pragma once

#include <stdexcept>
#include <string>

namespace mfrw {

/// Invalid CascadeConfig or kernel parameters (bad ranges, non power-of-two grid).
class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

/// Malformed or degenerate input data (files, series, empty path lists).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (open/read/write), as opposed to malformed content.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// Gaussian synthesis failed (embedding and Cholesky both unusable).
class synthesis_error : public std::runtime_error {
 public:
  explicit synthesis_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (Cholesky breakdown after jitter, quadrature non-convergence).
class numerics_error : public std::runtime_error {
 public:
  explicit numerics_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mfrw
