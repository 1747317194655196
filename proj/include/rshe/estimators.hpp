#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rshe/alpha.hpp"
#include "rshe/grid.hpp"
#include "rshe/solver.hpp"
#include "rshe/stats.hpp"

namespace rshe::estimators {

struct PointIndex {
  int time_index = 0;
  int obs_index = 0;
};

// ---- L^k(P) moments -------------------------------------------------------

// Per-point estimates of E|u_t(x) - center|^k (k even). Requires at least 40
// replicas so standard errors can come from replica batches.
std::vector<stats::EnsembleStats> moment_field(
    std::span<const solver::SolutionPath> ensemble, int k,
    std::span<const PointIndex> points, double center = 0.0);

// ---- N_{gamma,k} ----------------------------------------------------------

struct NormEstimate {
  stats::EnsembleStats stats;
  PointIndex argmax;
};

// max over (all time levels) x (observation columns) of
//   e^{-gamma t} (mean_M |u_a - u_b|^k)^{1/k},
// the grid stand-in for sup over [0,T] x R. Ensembles must be coupled
// (replica-wise identical seeds); gamma >= 1 as in the source estimate. The
// standard error is the batch-mean delta-method error at the argmax point.
NormEstimate n_gamma_k_norm(std::span<const solver::SolutionPath> a,
                            std::span<const solver::SolutionPath> b,
                            double gamma, int k);

// Streaming pieces of the same computation (used by the harness; the wrapper
// above goes through these, so both paths agree bit for bit).
void add_abs_pow_k_diff(const solver::SolutionPath& a,
                        const solver::SolutionPath& b, int k,
                        std::span<double> sums);
struct NormFromField {
  double value = 0.0;
  PointIndex argmax;
};
NormFromField norm_from_mean_field(std::span<const double> mean_pow_k,
                                   int n_time_levels, int n_obs, double dt,
                                   double gamma, int k);

// ---- Structure functions --------------------------------------------------

enum class Axis { kSpace, kTime };

struct LagStat {
  double lag = 0.0;  // physical units
  double mean = 0.0;
  double std_error = 0.0;
};

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;
  double exponent = 0.0;  // slope / k
  bool degenerate = false;
};

struct StructureFunctionResult {
  PowerLawFit space_fit;
  PowerLawFit time_fit;
  std::vector<LagStat> space_stats;
  std::vector<LagStat> time_stats;
};

// Per-path means of |u(t, x+r) - u(t, x)|^k (resp. time increments) over base
// points with t >= T/2, one entry per lag. Lags are grid cells / steps.
std::vector<double> structure_means_one_path(const solver::SolutionPath& path,
                                             int k, std::span<const int> lags,
                                             Axis axis, int base_time_stride);

// Validates lags (>= 4 cells/steps, <= 1/8 of the window, >= 4 distinct,
// spanning at least one decade) and fits log-mean vs log-lag by least
// squares; exponent = slope/k.
StructureFunctionResult structure_function_exponents(
    std::span<const solver::SolutionPath> ensemble, int k,
    std::span<const int> space_lag_cells, std::span<const int> time_lag_steps,
    int base_time_stride = 1);

void validate_structure_lags(const GridSpec& grid, std::span<const int> lags,
                             Axis axis);
PowerLawFit fit_power_law(std::span<const double> lag_values,
                          std::span<const double> means, int k);

// ---- Kolmogorov modulus / tightness proxy ---------------------------------

struct ModulusSpec {
  double a = 0.4;                // spatial exponent in rho, must be in (0, 1/2)
  std::vector<double> deltas;    // evaluated in the given order
  int offset_time_stride = 1;    // offset lattice resolution (time steps)
  int offset_space_stride = 1;   // offset lattice resolution (columns)
  int base_time_stride = 1;      // base-point subsampling
  int base_space_stride = 1;
};

// Per-delta maximal increment sup |u(s,x) - u(t,y)| over evaluation pairs with
// rho(s-t, x-y) = |x-y|^a + |s-t|^{1/4} < delta. Unresolvable deltas
// (delta < 2*max(dx_eval^a, dt_eval^{1/4})) yield NaN entries.
std::vector<double> modulus_maxima_one_path(const solver::SolutionPath& path,
                                            const ModulusSpec& spec);

struct TailPoint {
  double delta = 0.0;
  bool resolvable = true;
  std::string skip_reason;
  stats::EnsembleStats prob;
};

std::vector<TailPoint> modulus_tail_probability(
    std::span<const solver::SolutionPath> ensemble, const ModulusSpec& spec,
    double epsilon);

// ---- Finite-dimensional-distribution distance ------------------------------

// Order-statistics (quantile coupling) Wasserstein-1 between two equally
// sized marginal samples.
double wasserstein1(std::span<const double> a, std::span<const double> b);

// W1 with a bootstrap standard error (independent resampling of both sides,
// deterministic given the stream id).
stats::EnsembleStats fdd_wasserstein1(std::span<const double> a,
                                      std::span<const double> b,
                                      std::uint64_t bootstrap_stream,
                                      int n_bootstrap = 200);

// ---- k = 2 isometry check ---------------------------------------------------

struct IntegrandSpec {
  enum class Kind { kBox, kGaussian };
  Kind kind = Kind::kBox;
  double center = 0.0;
  double width = 1.0;      // box half-width / Gaussian width
  double amplitude = 1.0;
  int time_rows = 1;       // phi is constant over this many leading rows

  std::vector<double> realize(const GridSpec& grid) const;
  std::string name() const;
};

struct IsometryResult {
  double mc_variance = 0.0;     // MC variance of the discrete Walsh integral
  double exact_variance = 0.0;  // phi^T C_disc phi * dt * dx * dx * rows
  double std_error = 0.0;
  int sample_size = 0;
};

IsometryResult ito_isometry_check(const GridSpec& grid, Alpha alpha,
                                  const IntegrandSpec& integrand, int replicas,
                                  std::uint64_t seed);

}  // namespace rshe::estimators
