#pragma once

#include <span>
#include <string>
#include <vector>

namespace rshe::stats {

struct EnsembleStats {
  double estimate = 0.0;
  double std_error = 0.0;
  int sample_size = 0;
  std::string definition;
};

// Deterministic partition of replicas 0..m-1 into contiguous batches of >= 20
// (at most 40 batches). The batch is both the unit of standard-error
// estimation and the unit of parallel scheduling: a batch is always processed
// sequentially in replica order, and batch results are combined in batch
// order, so every reduction is independent of the worker count.
class BatchPlan {
 public:
  explicit BatchPlan(int replica_count);  // throws std::invalid_argument if < 40

  int replica_count() const { return replica_count_; }
  int num_batches() const { return num_batches_; }
  int batch_of(int replica) const;
  // Half-open replica range of batch b.
  std::pair<int, int> batch_range(int b) const;

  static constexpr int kMinPerBatch = 20;
  static constexpr int kMaxBatches = 40;

 private:
  int replica_count_;
  int num_batches_;
};

// Standard error of the grand mean from per-batch means (equal batch weights).
double batch_mean_std_error(std::span<const double> batch_means);

// Mean / quantile helpers with fixed summation order.
double mean(std::span<const double> values);
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace rshe::stats
