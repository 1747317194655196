#include "rshe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rshe::stats {

BatchPlan::BatchPlan(int replica_count) : replica_count_(replica_count) {
  if (replica_count < 2 * kMinPerBatch) {
    throw std::invalid_argument(
        "BatchPlan: need at least 40 replicas for batched standard errors");
  }
  num_batches_ = std::min(kMaxBatches, replica_count / kMinPerBatch);
}

int BatchPlan::batch_of(int replica) const {
  if (replica < 0 || replica >= replica_count_) {
    throw std::out_of_range("BatchPlan::batch_of");
  }
  // Contiguous blocks; the first (m % B) batches are one longer.
  const int base = replica_count_ / num_batches_;
  const int extra = replica_count_ % num_batches_;
  const int cutover = extra * (base + 1);
  if (replica < cutover) return replica / (base + 1);
  return extra + (replica - cutover) / base;
}

std::pair<int, int> BatchPlan::batch_range(int b) const {
  if (b < 0 || b >= num_batches_) throw std::out_of_range("BatchPlan::batch_range");
  const int base = replica_count_ / num_batches_;
  const int extra = replica_count_ % num_batches_;
  const int lo = b < extra ? b * (base + 1) : extra * (base + 1) + (b - extra) * base;
  const int len = b < extra ? base + 1 : base;
  return {lo, lo + len};
}

double batch_mean_std_error(std::span<const double> batch_means) {
  const std::size_t b = batch_means.size();
  if (b < 2) throw std::invalid_argument("batch_mean_std_error: need >= 2 batches");
  double m = 0.0;
  for (double v : batch_means) m += v;
  m /= static_cast<double>(b);
  double ss = 0.0;
  for (double v : batch_means) ss += (v - m) * (v - m);
  return std::sqrt(ss / (static_cast<double>(b) * (b - 1)));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean: empty");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_sorted: q outside [0,1]");
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace rshe::stats
