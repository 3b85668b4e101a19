#pragma once

#include <cmath>
#include <cstdint>

namespace mfrw {

/// Avalanche-mixes two 64-bit words (splitmix64 finalizer constants).
/// Used to derive independent, order-free per-replica seed streams:
/// replica r of base seed s draws from Rng(mix64(s, r)).
constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

constexpr std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) noexcept {
  return mix64(seed, replica);
}

/// Deterministic splitmix64 stream with Box-Muller gaussians.
/// std::normal_distribution is implementation-defined, so the gaussian
/// path is spelled out here to keep outputs byte-stable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on (0,1]; never returns 0 so logs are safe.
  double next_unit() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal draw (Box-Muller pair, cached).
  double next_gaussian() noexcept {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(t);
    have_cached_ = true;
    return r * std::cos(t);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace mfrw
