#include "rshe/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rshe {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void GridSpec::validate() const {
  if (!(horizon > 0.0)) throw std::invalid_argument("GridSpec: horizon must be > 0");
  if (n_time < 1) throw std::invalid_argument("GridSpec: n_time must be >= 1");
  if (!(half_width > 0.0)) throw std::invalid_argument("GridSpec: half_width must be > 0");
  if (!is_power_of_two(n_space)) {
    throw std::invalid_argument("GridSpec: n_space must be a power of two");
  }
  if (!(kappa > 0.0)) throw std::invalid_argument("GridSpec: kappa must be > 0");
  if (!(obs_half_width > 0.0) || obs_half_width >= half_width) {
    throw std::invalid_argument("GridSpec: observation window must lie strictly inside the torus");
  }
  const double margin = half_width - obs_half_width;
  const double required = 4.0 * std::sqrt(kappa * horizon);
  if (margin < required) {
    throw std::invalid_argument(
        "GridSpec: observation margin " + std::to_string(margin) +
        " below periodic-contamination guard 4*sqrt(kappa*T) = " +
        std::to_string(required));
  }
}

int GridSpec::obs_begin() const {
  // First column with x >= -obs_half_width (tolerant to representation noise).
  const double d = dx();
  int i = static_cast<int>(std::ceil((half_width - obs_half_width) / d - 1e-9));
  return i < 0 ? 0 : i;
}

int GridSpec::obs_end() const {
  const double d = dx();
  int i = static_cast<int>(std::floor((half_width + obs_half_width) / d + 1e-9));
  if (i >= n_space) i = n_space - 1;
  return i + 1;
}

int GridSpec::obs_column_at(double x) const {
  const double d = dx();
  const int i = static_cast<int>(std::llround((x + half_width) / d));
  if (i < obs_begin() || i >= obs_end() || std::abs(x_at(i) - x) > 0.25 * d) {
    throw std::invalid_argument("GridSpec: x = " + std::to_string(x) +
                                " is not an observation grid point");
  }
  return i;
}

std::vector<double> GridSpec::frequencies() const {
  std::vector<double> xi(static_cast<std::size_t>(n_space) / 2 + 1);
  for (std::size_t j = 0; j < xi.size(); ++j) {
    xi[j] = static_cast<double>(j) / (2.0 * half_width);
  }
  return xi;
}

}  // namespace rshe
