#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rshe/alpha.hpp"
#include "rshe/fft.hpp"
#include "rshe/grid.hpp"
#include "rshe/rng.hpp"

namespace rshe::noise {

// One realization of scaled space-time noise increments on the grid. White
// cells are i.i.d. N(0, 1/(dt*dx)), matching the density form of the
// covariance delta(t-s)*delta(x-y): sums sum phi * value * dt * dx then
// approximate Walsh integrals with the right variance. Colored slabs carry
// the per-row spatial covariance C_disc(r)/dt (see
// discrete_target_covariance).
struct NoiseSlab {
  GridSpec grid;
  Alpha alpha{1.0};
  std::uint64_t seed = 0;
  int replica = 0;
  std::vector<double> values;  // n_time x n_space, row-major

  double at(int it, int ix) const { return values[static_cast<std::size_t>(it) * grid.n_space + ix]; }
  std::span<double> row(int it) { return {values.data() + static_cast<std::size_t>(it) * grid.n_space, static_cast<std::size_t>(grid.n_space)}; }
  std::span<const double> row(int it) const { return {values.data() + static_cast<std::size_t>(it) * grid.n_space, static_cast<std::size_t>(grid.n_space)}; }
};

// Spectral coupling multiplier m(xi_j) = |xi_j|^{-(1-alpha)/2} with m(0) = 0,
// one entry per real-spectrum bin j = 0..n/2. For alpha = 1 the multiplier is
// identically 1 (the coloring path is bypassed entirely in that case).
std::vector<double> coloring_multiplier(const GridSpec& grid, Alpha alpha);

// Streaming white-noise source: row it of the slab for (seed, replica), in
// time order. Used by the solver so whole slabs never need materializing.
class WhiteRowSource {
 public:
  WhiteRowSource(const GridSpec& grid, std::uint64_t seed, int replica);
  void next_row(std::span<double> out);

 private:
  rng::GaussianStream stream_;
  double stddev_;
};

NoiseSlab sample_white_slab(const GridSpec& grid, std::uint64_t seed, int replica);

// Applies the coupling multiplier row by row. Pure function of its inputs;
// alpha = 1 returns the input bit-for-bit.
NoiseSlab color_slab(const NoiseSlab& white, Alpha alpha, fft::Workspace& ws);
NoiseSlab color_slab(const NoiseSlab& white, Alpha alpha);

// Exact covariance of one colored row under the construction, as a function
// of the lag index r = 0..n/2 (even in r):
//   C_disc(r) = (1/(2L)) * sum_{j != 0} m(xi_j)^2 e^{2 pi i xi_j r dx}.
// The full cell covariance of a slab row at lag r is C_disc(r)/dt. For
// alpha = 1 the separate white path returns Kronecker delta / dx.
std::vector<double> discrete_target_covariance(const GridSpec& grid, Alpha alpha);

struct LagEstimate {
  int lag;
  double estimate;
  double std_error;
};

// Unbiased cross moments E[v_i v_{i+lag}] averaged circularly over positions,
// over time rows and over replicas; standard errors from replica-level
// batches. All slabs must share grid and alpha, count >= 100.
std::vector<LagEstimate> empirical_covariance(std::span<const NoiseSlab> slabs,
                                              std::span<const int> lags);

// Debug dump: little-endian header (grid, seed, replica, alpha) + row-major
// doubles.
void write_slab(const NoiseSlab& slab, const std::filesystem::path& path);
NoiseSlab read_slab(const std::filesystem::path& path);

}  // namespace rshe::noise
