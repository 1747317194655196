#pragma once

#include <vector>

namespace rshe {

// Space-time discretization. Space is a periodic torus of circumference
// 2*half_width sampled at n_space points (power of two, for the FFT);
// statistics are only ever read on the observation window
// [-obs_half_width, obs_half_width], which must keep a margin of at least
// 4*sqrt(kappa*horizon) to the torus edge so wrap-around contamination stays
// below the noise floor of every estimator.
struct GridSpec {
  double horizon = 0.5;        // T
  int n_time = 2000;           // time steps
  double half_width = 50.0;    // L
  int n_space = 4096;          // grid points, power of two
  double kappa = 1.0;          // diffusion coefficient
  double obs_half_width = 10.0;

  double dt() const { return horizon / n_time; }
  double dx() const { return 2.0 * half_width / n_space; }
  double x_at(int i) const { return -half_width + i * dx(); }

  // Observation window as a half-open column range [obs_begin, obs_end).
  int obs_begin() const;
  int obs_end() const;
  int n_obs() const { return obs_end() - obs_begin(); }

  // Column index closest to physical coordinate x; throws if x is not a grid
  // point of the observation window (tolerance dx/4).
  int obs_column_at(double x) const;

  // Real-spectrum frequencies xi_j = j/(2L), j = 0..n_space/2.
  std::vector<double> frequencies() const;

  void validate() const;  // throws std::invalid_argument

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

}  // namespace rshe
