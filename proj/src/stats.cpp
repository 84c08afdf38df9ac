#include "volterra/stats.hpp"

namespace volterra {

RunningStats RunningStats::merge(const RunningStats& a, const RunningStats& b) {
  RunningStats c;
  c.rejected = a.rejected + b.rejected;
  c.count = a.count + b.count;
  if (c.count == 0.0) return c;
  const double d = b.mean - a.mean;
  c.mean = a.mean + d * b.count / c.count;
  c.m2 = a.m2 + b.m2 + d * d * a.count * b.count / c.count;
  return c;
}

RunningStats reduce_pairwise(std::vector<RunningStats> parts) {
  if (parts.empty()) return {};
  while (parts.size() > 1) {
    std::vector<RunningStats> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      next.push_back(RunningStats::merge(parts[i], parts[i + 1]));
    }
    if (parts.size() % 2 == 1) next.push_back(parts.back());
    parts = std::move(next);
  }
  return parts.front();
}

}  // namespace volterra
