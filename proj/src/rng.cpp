#include "rshe/rng.hpp"

#include <cmath>
#include <numbers>

namespace rshe::rng {

namespace {

// 53-bit uniform in (0, 1]: never 0, so log() below is always finite.
inline double uniform_open(std::mt19937_64& engine) {
  return (static_cast<double>(engine() >> 11) + 1.0) * 0x1p-53;
}

}  // namespace

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open(engine_);
  const double u2 = uniform_open(engine_);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

void GaussianStream::fill(std::span<double> out, double stddev) {
  for (double& v : out) v = stddev * next();
}

}  // namespace rshe::rng
