#pragma once

#include <functional>

namespace volterra {

/// Runs body(b) for b = 0..batches-1 on up to `threads` workers. Which thread
/// runs a batch is unspecified, so bodies must write only to per-batch slots.
/// The first exception thrown by a body is rethrown after all workers stop.
void for_each_batch(int batches, int threads, const std::function<void(int)>& body);

/// Replication range [lo, hi) of batch b when N replications are cut into
/// `batches` contiguous pieces.
inline void batch_range(long long N, int batches, int b, long long& lo, long long& hi) {
  lo = N * b / batches;
  hi = N * (b + 1) / batches;
}

}  // namespace volterra
