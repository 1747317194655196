#pragma once

#include <stdexcept>

namespace rshe {

// Noise color index. Values in (0,1) select the Riesz-kernel covariance
// c_{1-alpha} |x|^{-alpha}; the boundary value 1 is the white-noise tag and is
// treated exactly (identity coloring), never as a limit of the power law.
class Alpha {
 public:
  explicit Alpha(double value) : value_(value) {
    if (!(value > 0.0) || !(value <= 1.0)) {
      throw std::domain_error("Alpha: value must lie in (0, 1]");
    }
  }

  double value() const { return value_; }
  bool is_white() const { return value_ == 1.0; }

  friend bool operator==(Alpha a, Alpha b) { return a.value_ == b.value_; }
  friend bool operator!=(Alpha a, Alpha b) { return !(a == b); }

 private:
  double value_;
};

}  // namespace rshe
