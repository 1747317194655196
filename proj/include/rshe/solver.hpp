#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rshe/alpha.hpp"
#include "rshe/fft.hpp"
#include "rshe/grid.hpp"
#include "rshe/sigma.hpp"

namespace rshe::solver {

struct InitialProfile {
  enum class Kind { kConstantOne, kBump, kCustom };

  Kind kind = Kind::kConstantOne;
  std::vector<double> custom;

  static InitialProfile constant_one() { return {Kind::kConstantOne, {}}; }
  static InitialProfile bump() { return {Kind::kBump, {}}; }
  static InitialProfile custom_profile(std::vector<double> values) {
    return {Kind::kCustom, std::move(values)};
  }

  // constant_one -> all ones; bump -> exp(-x^2/2); custom -> validated copy.
  std::vector<double> realize(const GridSpec& grid) const;
  std::string name() const;

  friend bool operator==(const InitialProfile&, const InitialProfile&) = default;
};

// One realization of u for one alpha, recorded on the observation window at
// every time level. Row 0 is the initial profile restricted to the window.
struct SolutionPath {
  GridSpec grid;
  double alpha = 1.0;
  SigmaSpec sigma;
  std::uint64_t seed = 0;
  int replica = 0;
  int obs_offset = 0;  // grid column of observation column 0
  int n_obs = 0;
  std::vector<double> values;  // (n_time+1) x n_obs, row-major

  double at(int it, int j) const { return values[static_cast<std::size_t>(it) * n_obs + j]; }
  std::span<const double> time_row(int it) const {
    return {values.data() + static_cast<std::size_t>(it) * n_obs, static_cast<std::size_t>(n_obs)};
  }
  double x_of(int j) const { return grid.x_at(obs_offset + j); }
  bool coupled_with(const SolutionPath& other) const {
    return seed == other.seed && replica == other.replica && grid == other.grid;
  }
};

// Discrete heat semigroup symbol exp(-2*pi^2*kappa*t*xi_j^2), j = 0..n/2.
std::vector<double> semigroup_symbol(const GridSpec& grid, double t);

// One exponential-Euler step: u_next = S_dt[u_now + sigma(u_now)*noise*dt],
// semigroup applied spectrally. Noise enters at the left endpoint (Ito).
// Throws BlowUpError (replica id set by the caller via `replica`) if a
// non-finite value appears.
void step_in_place(std::span<double> u, std::span<const double> noise_row,
                   const SigmaSpec& sigma, const GridSpec& grid,
                   fft::Workspace& ws, int replica = -1, int time_index = -1);
std::vector<double> step(std::span<const double> u_now,
                         std::span<const double> noise_row,
                         const SigmaSpec& sigma, const GridSpec& grid);

SolutionPath solve_path(const GridSpec& grid, Alpha alpha, const SigmaSpec& sigma,
                        const InitialProfile& init, std::uint64_t seed,
                        int replica);

// Solves the whole alpha family on ONE white-noise realization: every alpha
// (including 1, which consumes the rows untouched) is driven by colorings of
// the same rows. This is what makes pathwise differences u_alpha - u
// meaningful. Duplicated alphas are allowed and give bit-identical paths.
std::vector<SolutionPath> solve_coupled_family(const GridSpec& grid,
                                               std::span<const Alpha> alphas,
                                               const SigmaSpec& sigma,
                                               const InitialProfile& init,
                                               std::uint64_t seed, int replica);

struct PicardRun {
  SolutionPath path;                  // final iterate
  std::vector<double> iterate_deltas; // deltas[i] = max|u^(i+1) - u^(i)| on window
  bool contraction_warning = false;   // deltas grew somewhere past iterate 3
};

// Picard iteration of the mild form, every iterate driven by the same colored
// slab. u^(0) is the deterministic heat flow of the initial profile.
PicardRun picard_solve(const GridSpec& grid, Alpha alpha, const SigmaSpec& sigma,
                       const InitialProfile& init, std::uint64_t seed,
                       int replica, int n_iter);

// Binary export in the slab layout plus a JSON sidecar (grid, sigma, alpha,
// provenance, solver version).
void write_path(const SolutionPath& path, const std::filesystem::path& base);

}  // namespace rshe::solver
