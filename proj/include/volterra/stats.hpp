#pragma once

#include <cstdint>
#include <vector>

namespace volterra {

/// Count / mean / sum of squared deviations (Welford), mergeable.
struct RunningStats {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t rejected = 0;

  void add(double x) {
    count += 1.0;
    const double d = x - mean;
    mean += d / count;
    m2 += d * (x - mean);
  }

  double variance() const { return count > 1.0 ? m2 / (count - 1.0) : 0.0; }

  static RunningStats merge(const RunningStats& a, const RunningStats& b);
};

/// Merges adjacent pairs level by level, so the result depends only on the
/// order of `parts`.
RunningStats reduce_pairwise(std::vector<RunningStats> parts);

}  // namespace volterra
