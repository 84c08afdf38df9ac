#pragma once

#include <cstdint>

namespace volterra {

/// Inverse of the standard normal CDF (Wichura's AS 241, ~1e-16 relative).
double normal_quantile(double p);

/// Counter-based stream: draw k of stream (seed, id) is a pure function of
/// (seed, id, k), so replications are reproducible regardless of which
/// thread generates them.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal by inversion.
  double normal() { return normal_quantile(uniform()); }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace volterra
