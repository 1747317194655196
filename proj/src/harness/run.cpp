#include "rshe/harness/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "rshe/build_info_fwd.hpp"
#include "rshe/errors.hpp"
#include "rshe/estimators.hpp"
#include "rshe/harness/csv.hpp"
#include "rshe/harness/scheduler.hpp"
#include "rshe/kernels.hpp"
#include "rshe/noise.hpp"
#include "rshe/quadrature.hpp"
#include "rshe/rng.hpp"
#include "rshe/solver.hpp"

namespace rshe::harness {

namespace {

using estimators::PointIndex;
using solver::SolutionPath;

std::string fmt(double v) { return format_double(v); }

void push_result_row(Table& results, const std::string& estimator,
                     const nlohmann::json& params, double estimate,
                     double std_error, int m, std::uint64_t seed) {
  results.rows.push_back({estimator, params.dump(), fmt(estimate),
                          fmt(std_error), std::to_string(m),
                          std::to_string(seed), build_describe()});
}

Table make_results_table() {
  Table t;
  t.columns = {"estimator", "params", "estimate", "std_error", "M", "seed", "build"};
  return t;
}

// ---------------------------------------------------------------------------
// kernel verification sweep
// ---------------------------------------------------------------------------

long double riesz_constant_long(long double a) {
  const long double pi = 3.14159265358979323846264338327950288L;
  return 2.0L * sinl(a * pi / 2.0L) * tgammal(1.0L - a) / powl(2.0L * pi, 1.0L - a);
}

struct KernelRowSink {
  Table table;
  std::map<std::string, double> overrides;
  bool all_pass = true;

  KernelRowSink() {
    table.columns = {"quantity", "params", "closed_form", "oracle", "rel_err",
                     "tol", "pass"};
  }

  void add(const std::string& quantity, const nlohmann::json& params,
           double closed_form, double oracle, double rel_err, double tol) {
    auto it = overrides.find(quantity);
    if (it != overrides.end()) tol = it->second;
    const bool pass = rel_err <= tol;
    all_pass = all_pass && pass;
    table.rows.push_back({quantity, params.dump(), fmt(closed_form), fmt(oracle),
                          fmt(rel_err), fmt(tol), pass ? "1" : "0"});
  }

  void add_pair(const std::string& quantity, const nlohmann::json& params,
                double closed_form, double oracle, double tol) {
    const double denom = std::max(std::abs(oracle), 1e-300);
    add(quantity, params, closed_form, oracle,
        std::abs(closed_form - oracle) / denom, tol);
  }
};

}  // namespace

Table kernel_verification_table(const std::map<std::string, double>& tol_overrides) {
  KernelRowSink sink;
  sink.overrides = tol_overrides;

  // c_alpha against an exact value and an extended-precision route.
  sink.add_pair("riesz_constant_half", {{"alpha", 0.5}},
                kernels::riesz_constant(0.5), 1.0, 1e-12);
  for (double a : {0.1, 0.25, 0.5, 0.75, 0.9, 0.99}) {
    sink.add_pair("riesz_constant", {{"alpha", a}}, kernels::riesz_constant(a),
                  static_cast<double>(riesz_constant_long(a)), 1e-12);
  }

  // Lemma: negative moment integral, closed form vs adaptive quadrature.
  for (double g : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    for (double s : {0.04, 0.2, 1.0, 5.0, 25.0}) {
      sink.add_pair("negative_moment_integral", {{"gamma", g}, {"s", s}},
                    kernels::negative_moment_integral(g, s),
                    kernels::negative_moment_integral_quadrature(g, s), 1e-8);
    }
  }

  // (f_alpha * p_s)(0): closed form vs quadrature, and the exact s-scaling.
  for (double a : {0.25, 0.5, 0.75, 0.9}) {
    for (double s : {0.1, 1.0}) {
      sink.add_pair("f_conv_heat_zero", {{"alpha", a}, {"s", s}, {"kappa", 1.0}},
                    kernels::f_conv_heat_zero(a, s, 1.0),
                    kernels::f_conv_heat_zero_quadrature(a, s, 1.0), 1e-6);
    }
    const double ratio =
        kernels::f_conv_heat_zero(a, 4.0, 1.0) / kernels::f_conv_heat_zero(a, 1.0, 1.0);
    sink.add_pair("f_conv_heat_zero_scaling", {{"alpha", a}}, ratio,
                  std::pow(4.0, -a / 2.0), 1e-10);
  }

  // Heat kernel mass and transform normalization.
  for (double t : {0.25, 1.0}) {
    const double mass = quad::real_line(
        [t](double x) { return kernels::heat_kernel(1.0, t, x); }, 1e-13);
    sink.add_pair("heat_kernel_mass", {{"kappa", 1.0}, {"t", t}}, mass, 1.0, 1e-10);
    sink.add_pair("heat_kernel_ft_zero", {{"kappa", 1.0}, {"t", t}},
                  kernels::heat_kernel_ft(1.0, t, 0.0), 1.0, 1e-15);
  }

  // Spatial L1 lemma: quadrature vs shifted-Gaussian closed form, the hard
  // bound by 2, and the (|x|/sqrt(kappa t) ^ 1) ratio with its sweep constant.
  double max_ratio = 0.0;
  for (double t : {0.25, 1.0, 4.0}) {
    for (double x : {0.25, 1.0, 4.0}) {
      const double quad_value = kernels::spatial_l1_heat_diff(t, x, 1.0);
      const double closed = kernels::spatial_l1_heat_diff_closed(t, x, 1.0);
      sink.add_pair("spatial_l1_heat_diff", {{"t", t}, {"x", x}}, quad_value,
                    closed, 1e-8);
      const double cap = std::min(x / std::sqrt(t), 1.0);
      max_ratio = std::max(max_ratio, quad_value / cap);
    }
  }
  // Ratio bound: 2 * (2 Phi(z) - 1) <= min(2 z, 1) * 2 for every z.
  sink.add("spatial_l1_ratio_bound", {{"sweep", "t,x in {0.25,1,4}^2"}}, max_ratio,
           2.0, std::max(0.0, (max_ratio - 2.0) / 2.0), 0.0);

  // Temporal L1 lemma: quadrature vs closed form and the log bound.
  for (double t : {0.1, 0.5, 2.0}) {
    for (double eps : {0.05, 0.5, 5.0}) {
      const double quad_value = kernels::temporal_l1_heat_diff(t, eps, 1.0);
      const double closed = kernels::temporal_l1_heat_diff_closed(t, eps, 1.0);
      sink.add_pair("temporal_l1_heat_diff", {{"t", t}, {"eps", eps}}, quad_value,
                    closed, 1e-8);
      const double bound = std::min(std::log(t + eps) - std::log(t), 2.0);
      sink.add("temporal_l1_bound", {{"t", t}, {"eps", eps}}, quad_value, bound,
               std::max(0.0, (quad_value - bound) / bound), 0.0);
    }
  }

  // Quadratic-form identity on Gaussian test functions.
  for (double w : {0.5, 1.0, 2.0}) {
    for (double a : {0.3, 0.5, 0.8}) {
      const auto r = kernels::riesz_quadratic_form(
          kernels::gaussian_test_function(w), Alpha(a));
      sink.add_pair("riesz_quadratic_form", {{"width", w}, {"alpha", a}}, r.lhs,
                    r.rhs, 1e-6);
    }
  }

  return sink.table;
}

bool kernel_table_all_pass(const Table& table) {
  for (const auto& row : table.rows) {
    if (row.back() != "1") return false;
  }
  return true;
}

namespace {

// ---------------------------------------------------------------------------
// shared pieces for the Monte Carlo experiments
// ---------------------------------------------------------------------------

std::vector<Alpha> family_of(const RunConfig& config, bool with_reference,
                             double reference) {
  std::vector<Alpha> family;
  family.reserve(config.alphas.size() + 1);
  for (double a : config.alphas) family.emplace_back(a);
  if (with_reference) family.emplace_back(reference);
  return family;
}

void enforce_blowup_budget(const RunConfig& config, int blowups) {
  if (blowups * 100 > config.replicas) {
    throw BlowUpBudgetExceeded(
        "blow-up budget exceeded: " + std::to_string(blowups) + " of " +
        std::to_string(config.replicas) + " replicas");
  }
}

// Norm experiments track per-batch sums at a column lattice so the argmax
// standard error never needs the full per-batch field. Statistics are
// x-stationary, so the nearest tracked column in the argmax time row carries
// the right error magnitude.
std::vector<int> tracked_columns(int n_obs) {
  const int want = std::min(8, n_obs);
  std::vector<int> cols;
  cols.reserve(want);
  for (int i = 0; i < want; ++i) {
    cols.push_back(static_cast<int>((i + 0.5) * n_obs / want));
  }
  return cols;
}

struct NormPartial {
  std::vector<std::vector<double>> fields;        // [alpha*k][levels*n_obs]
  std::vector<std::vector<double>> tracked;       // [alpha*k][levels*n_tracked]
  std::vector<std::vector<std::vector<double>>> fdd;  // [alpha(+ref)][point][...]
  int used = 0;
  int blowups = 0;
};

void run_norm_experiment(const RunConfig& config, RunResult& result) {
  const bool continuity = config.experiment == Experiment::kAlphaContinuity;
  const double ref_alpha = continuity ? *config.alpha0 : 1.0;
  const auto family = family_of(config, true, ref_alpha);
  const int n_alpha = static_cast<int>(config.alphas.size());
  const int n_k = static_cast<int>(config.k_list.size());
  const GridSpec& grid = config.grid;
  const int n_levels = grid.n_time + 1;
  const int n_obs = grid.n_obs();
  const std::size_t cells = static_cast<std::size_t>(n_levels) * n_obs;
  const auto cols = tracked_columns(n_obs);
  const int n_tracked = static_cast<int>(cols.size());

  std::vector<std::pair<int, int>> fdd_cells;  // (time index, obs column)
  for (const auto& [t, x] : config.fdd_points) {
    const int it = static_cast<int>(std::llround(t / grid.dt()));
    if (it < 0 || it > grid.n_time ||
        std::abs(it * grid.dt() - t) > 0.25 * grid.dt()) {
      throw ConfigError("fdd point t is not a time level");
    }
    fdd_cells.emplace_back(it, grid.obs_column_at(x) - grid.obs_begin());
  }

  stats::BatchPlan plan(config.replicas);
  const int n_batches = plan.num_batches();

  std::vector<std::vector<double>> global_fields(
      static_cast<std::size_t>(n_alpha) * n_k, std::vector<double>(cells, 0.0));
  std::vector<std::vector<std::vector<double>>> tracked_by_batch(n_batches);
  std::vector<int> used_by_batch(n_batches, 0);
  std::vector<std::vector<std::vector<double>>> fdd_samples(
      n_alpha + 1,
      std::vector<std::vector<double>>(fdd_cells.size()));
  int blowups = 0;

  auto work = [&](int b) -> NormPartial {
    NormPartial p;
    p.fields.assign(static_cast<std::size_t>(n_alpha) * n_k,
                    std::vector<double>(cells, 0.0));
    p.fdd.assign(n_alpha + 1,
                 std::vector<std::vector<double>>(fdd_cells.size()));
    auto [lo, hi] = plan.batch_range(b);
    for (int r = lo; r < hi; ++r) {
      std::vector<SolutionPath> paths;
      try {
        paths = solver::solve_coupled_family(grid, family, config.sigma,
                                             config.init, config.seed, r);
      } catch (const BlowUpError&) {
        ++p.blowups;
        continue;
      }
      const SolutionPath& ref = paths.back();
      for (int ai = 0; ai < n_alpha; ++ai) {
        for (int ki = 0; ki < n_k; ++ki) {
          estimators::add_abs_pow_k_diff(paths[ai], ref, config.k_list[ki],
                                         p.fields[ai * n_k + ki]);
        }
      }
      for (int ai = 0; ai <= n_alpha; ++ai) {
        const SolutionPath& path = ai == n_alpha ? ref : paths[ai];
        for (std::size_t pi = 0; pi < fdd_cells.size(); ++pi) {
          p.fdd[ai][pi].push_back(
              path.at(fdd_cells[pi].first, fdd_cells[pi].second));
        }
      }
      ++p.used;
    }
    // The tracked slice is just a restriction of the batch field sums.
    p.tracked.assign(static_cast<std::size_t>(n_alpha) * n_k,
                     std::vector<double>(static_cast<std::size_t>(n_levels) * n_tracked));
    for (int ak = 0; ak < n_alpha * n_k; ++ak) {
      for (int it = 0; it < n_levels; ++it) {
        for (int ti = 0; ti < n_tracked; ++ti) {
          p.tracked[ak][static_cast<std::size_t>(it) * n_tracked + ti] =
              p.fields[ak][static_cast<std::size_t>(it) * n_obs + cols[ti]];
        }
      }
    }
    return p;
  };

  auto combine = [&](int b, NormPartial&& p) {
    for (int ak = 0; ak < n_alpha * n_k; ++ak) {
      auto& g = global_fields[ak];
      const auto& f = p.fields[ak];
      for (std::size_t i = 0; i < cells; ++i) g[i] += f[i];
    }
    p.fields.clear();
    tracked_by_batch[b] = std::move(p.tracked);
    used_by_batch[b] = p.used;
    blowups += p.blowups;
    for (int ai = 0; ai <= n_alpha; ++ai) {
      for (std::size_t pi = 0; pi < fdd_cells.size(); ++pi) {
        auto& dst = fdd_samples[ai][pi];
        dst.insert(dst.end(), p.fdd[ai][pi].begin(), p.fdd[ai][pi].end());
      }
    }
  };

  run_batches_ordered<NormPartial>(n_batches, config.effective_workers(), work,
                                   combine);
  enforce_blowup_budget(config, blowups);
  int used_total = 0;
  for (int u : used_by_batch) {
    if (u == 0) throw BlowUpBudgetExceeded("an entire batch blew up");
    used_total += u;
  }
  result.blow_up_count = blowups;
  result.replicas_used = used_total;

  Table norms;
  norms.columns = {"alpha", "k", "gamma", "norm", "std_error", "norm_gamma0",
                   "argmax_t", "argmax_x", "M"};
  Table results = make_results_table();
  std::vector<double> mean_field(cells);
  std::vector<double> batch_means(n_batches);
  for (int ai = 0; ai < n_alpha; ++ai) {
    for (int ki = 0; ki < n_k; ++ki) {
      const int ak = ai * n_k + ki;
      const int k = config.k_list[ki];
      for (std::size_t i = 0; i < cells; ++i) {
        mean_field[i] = global_fields[ak][i] / used_total;
      }
      const auto nf = estimators::norm_from_mean_field(
          mean_field, n_levels, n_obs, grid.dt(), config.gamma, k);
      const auto nf0 = estimators::norm_from_mean_field(mean_field, n_levels,
                                                        n_obs, grid.dt(), 0.0, k);
      // Standard error from batch means at the tracked column nearest to the
      // argmax, delta method through the 1/k power.
      int best_col = 0;
      for (int ti = 1; ti < n_tracked; ++ti) {
        if (std::abs(cols[ti] - nf.argmax.obs_index) <
            std::abs(cols[best_col] - nf.argmax.obs_index)) {
          best_col = ti;
        }
      }
      const std::size_t slot =
          static_cast<std::size_t>(nf.argmax.time_index) * n_tracked + best_col;
      double tracked_total = 0.0;
      for (int b = 0; b < n_batches; ++b) {
        batch_means[b] = tracked_by_batch[b][ak][slot] / used_by_batch[b];
        tracked_total += tracked_by_batch[b][ak][slot];
      }
      const double m_hat = tracked_total / used_total;
      const double se_m = stats::batch_mean_std_error(batch_means);
      const double weight = std::exp(-config.gamma * nf.argmax.time_index * grid.dt());
      const double se =
          m_hat > 0.0 ? weight * std::pow(m_hat, 1.0 / k - 1.0) * se_m / k : 0.0;

      const double ax = grid.x_at(grid.obs_begin() + nf.argmax.obs_index);
      norms.rows.push_back({fmt(config.alphas[ai]), std::to_string(k),
                            fmt(config.gamma), fmt(nf.value), fmt(se),
                            fmt(nf0.value), fmt(nf.argmax.time_index * grid.dt()),
                            fmt(ax), std::to_string(used_total)});
      push_result_row(results, "n_gamma_k_norm",
                      {{"alpha", config.alphas[ai]},
                       {"reference", ref_alpha},
                       {"k", k},
                       {"gamma", config.gamma}},
                      nf.value, se, used_total, config.seed);
    }
  }
  result.tables["norms"] = std::move(norms);

  Table fdd;
  fdd.columns = {"alpha", "reference", "t", "x", "w1", "std_error", "M"};
  // The marginal-distance estimator needs 500 samples a side; smaller runs
  // get the header-only table.
  const bool fdd_feasible = used_total >= 500;
  for (int ai = 0; fdd_feasible && ai < n_alpha; ++ai) {
    for (std::size_t pi = 0; pi < fdd_cells.size(); ++pi) {
      const auto stream = rng::derive_stream(
          config.seed, static_cast<std::uint64_t>(ai) * 4096 + pi, "fdd-bootstrap");
      const auto est = estimators::fdd_wasserstein1(fdd_samples[ai][pi],
                                                    fdd_samples[n_alpha][pi], stream);
      fdd.rows.push_back({fmt(config.alphas[ai]), fmt(ref_alpha),
                          fmt(config.fdd_points[pi].first),
                          fmt(config.fdd_points[pi].second), fmt(est.estimate),
                          fmt(est.std_error), std::to_string(est.sample_size)});
      push_result_row(results, "fdd_wasserstein1",
                      {{"alpha", config.alphas[ai]},
                       {"reference", ref_alpha},
                       {"t", config.fdd_points[pi].first},
                       {"x", config.fdd_points[pi].second}},
                      est.estimate, est.std_error, est.sample_size, config.seed);
    }
  }
  result.tables["fdd"] = std::move(fdd);
  result.tables["results"] = std::move(results);
}

// ---------------------------------------------------------------------------

struct HolderPartial {
  std::vector<std::vector<double>> space_sums;  // [alpha*k][lag]
  std::vector<std::vector<double>> time_sums;
  int used = 0;
  int blowups = 0;
};

void run_holder(const RunConfig& config, RunResult& result) {
  const auto family = family_of(config, false, 1.0);
  const int n_alpha = static_cast<int>(family.size());
  const int n_k = static_cast<int>(config.k_list.size());
  const GridSpec& grid = config.grid;
  const auto& sl = config.holder.spatial_lag_cells;
  const auto& tl = config.holder.temporal_lag_steps;
  estimators::validate_structure_lags(grid, sl, estimators::Axis::kSpace);
  estimators::validate_structure_lags(grid, tl, estimators::Axis::kTime);

  stats::BatchPlan plan(config.replicas);
  const int n_batches = plan.num_batches();
  const int n_ak = n_alpha * n_k;

  std::vector<std::vector<std::vector<double>>> space_by_batch(n_batches);
  std::vector<std::vector<std::vector<double>>> time_by_batch(n_batches);
  std::vector<int> used_by_batch(n_batches, 0);
  int blowups = 0;

  auto work = [&](int b) -> HolderPartial {
    HolderPartial p;
    p.space_sums.assign(n_ak, std::vector<double>(sl.size(), 0.0));
    p.time_sums.assign(n_ak, std::vector<double>(tl.size(), 0.0));
    auto [lo, hi] = plan.batch_range(b);
    for (int r = lo; r < hi; ++r) {
      std::vector<SolutionPath> paths;
      try {
        paths = solver::solve_coupled_family(grid, family, config.sigma,
                                             config.init, config.seed, r);
      } catch (const BlowUpError&) {
        ++p.blowups;
        continue;
      }
      for (int ai = 0; ai < n_alpha; ++ai) {
        for (int ki = 0; ki < n_k; ++ki) {
          const int k = config.k_list[ki];
          const auto sm = estimators::structure_means_one_path(
              paths[ai], k, sl, estimators::Axis::kSpace,
              config.holder.base_time_stride);
          const auto tm = estimators::structure_means_one_path(
              paths[ai], k, tl, estimators::Axis::kTime,
              config.holder.base_time_stride);
          for (std::size_t i = 0; i < sm.size(); ++i) {
            p.space_sums[ai * n_k + ki][i] += sm[i];
          }
          for (std::size_t i = 0; i < tm.size(); ++i) {
            p.time_sums[ai * n_k + ki][i] += tm[i];
          }
        }
      }
      ++p.used;
    }
    return p;
  };

  auto combine = [&](int b, HolderPartial&& p) {
    space_by_batch[b] = std::move(p.space_sums);
    time_by_batch[b] = std::move(p.time_sums);
    used_by_batch[b] = p.used;
    blowups += p.blowups;
  };

  run_batches_ordered<HolderPartial>(n_batches, config.effective_workers(), work,
                                     combine);
  enforce_blowup_budget(config, blowups);
  int used_total = 0;
  for (int u : used_by_batch) {
    if (u == 0) throw BlowUpBudgetExceeded("an entire batch blew up");
    used_total += u;
  }
  result.blow_up_count = blowups;
  result.replicas_used = used_total;

  Table structure;
  structure.columns = {"alpha", "k", "axis", "lag", "mean", "std_error", "M"};
  Table fits;
  fits.columns = {"alpha",     "k",  "axis",     "slope", "intercept",
                  "r_squared", "exponent", "degenerate", "M"};
  Table results = make_results_table();

  std::vector<double> batch_means(n_batches);
  for (int ai = 0; ai < n_alpha; ++ai) {
    for (int ki = 0; ki < n_k; ++ki) {
      const int ak = ai * n_k + ki;
      const int k = config.k_list[ki];
      for (estimators::Axis axis :
           {estimators::Axis::kSpace, estimators::Axis::kTime}) {
        const bool is_space = axis == estimators::Axis::kSpace;
        const auto& lags = is_space ? sl : tl;
        const auto& by_batch = is_space ? space_by_batch : time_by_batch;
        const double unit = is_space ? grid.dx() : grid.dt();
        std::vector<double> means(lags.size(), 0.0);
        std::vector<double> phys(lags.size());
        for (std::size_t i = 0; i < lags.size(); ++i) {
          phys[i] = lags[i] * unit;
          double total = 0.0;
          for (int b = 0; b < n_batches; ++b) {
            total += by_batch[b][ak][i];
            batch_means[b] = by_batch[b][ak][i] / used_by_batch[b];
          }
          means[i] = total / used_total;
          structure.rows.push_back(
              {fmt(family[ai].value()), std::to_string(k),
               is_space ? "space" : "time", fmt(phys[i]), fmt(means[i]),
               fmt(stats::batch_mean_std_error(batch_means)),
               std::to_string(used_total)});
        }
        const auto fit = estimators::fit_power_law(phys, means, k);
        fits.rows.push_back({fmt(family[ai].value()), std::to_string(k),
                             is_space ? "space" : "time", fmt(fit.slope),
                             fmt(fit.intercept), fmt(fit.r_squared),
                             fmt(fit.exponent), fit.degenerate ? "1" : "0",
                             std::to_string(used_total)});
        push_result_row(results, "structure_function_exponent",
                        {{"alpha", family[ai].value()},
                         {"k", k},
                         {"axis", is_space ? "space" : "time"}},
                        fit.exponent, 0.0, used_total, config.seed);
      }
    }
  }
  result.tables["structure"] = std::move(structure);
  result.tables["fits"] = std::move(fits);
  result.tables["results"] = std::move(results);
}

// ---------------------------------------------------------------------------

struct TightnessPartial {
  std::vector<std::vector<std::vector<double>>> maxima;  // [alpha][replica][delta]
  std::vector<double> samples;                           // pooled field values
  int used = 0;
  int blowups = 0;
};

void run_tightness(const RunConfig& config, RunResult& result) {
  const auto family = family_of(config, false, 1.0);
  const int n_alpha = static_cast<int>(family.size());
  const GridSpec& grid = config.grid;
  const auto& tcfg = config.tightness;

  estimators::ModulusSpec spec;
  spec.a = tcfg.a;
  spec.deltas = tcfg.delta_grid;
  spec.offset_time_stride = tcfg.offset_time_stride;
  spec.offset_space_stride = tcfg.offset_space_stride;
  spec.base_time_stride = tcfg.base_time_stride;
  spec.base_space_stride = tcfg.base_space_stride;

  stats::BatchPlan plan(config.replicas);
  const int n_batches = plan.num_batches();

  std::vector<std::vector<std::vector<std::vector<double>>>> maxima_by_batch(
      n_batches);
  std::vector<int> used_by_batch(n_batches, 0);
  std::vector<double> pooled;
  int blowups = 0;

  auto work = [&](int b) -> TightnessPartial {
    TightnessPartial p;
    p.maxima.assign(n_alpha, {});
    auto [lo, hi] = plan.batch_range(b);
    for (int r = lo; r < hi; ++r) {
      std::vector<SolutionPath> paths;
      try {
        paths = solver::solve_coupled_family(grid, family, config.sigma,
                                             config.init, config.seed, r);
      } catch (const BlowUpError&) {
        ++p.blowups;
        continue;
      }
      for (int ai = 0; ai < n_alpha; ++ai) {
        p.maxima[ai].push_back(
            estimators::modulus_maxima_one_path(paths[ai], spec));
        const auto& values = paths[ai].values;
        for (std::size_t i = 0; i < values.size();
             i += static_cast<std::size_t>(tcfg.value_sample_stride)) {
          p.samples.push_back(values[i]);
        }
      }
      ++p.used;
    }
    return p;
  };

  auto combine = [&](int b, TightnessPartial&& p) {
    maxima_by_batch[b] = std::move(p.maxima);
    pooled.insert(pooled.end(), p.samples.begin(), p.samples.end());
    used_by_batch[b] = p.used;
    blowups += p.blowups;
  };

  run_batches_ordered<TightnessPartial>(n_batches, config.effective_workers(),
                                        work, combine);
  enforce_blowup_budget(config, blowups);
  int used_total = 0;
  for (int u : used_by_batch) {
    if (u == 0) throw BlowUpBudgetExceeded("an entire batch blew up");
    used_total += u;
  }
  result.blow_up_count = blowups;
  result.replicas_used = used_total;

  std::sort(pooled.begin(), pooled.end());
  const double iqr = stats::quantile_sorted(pooled, 0.75) -
                     stats::quantile_sorted(pooled, 0.25);
  const double epsilon = tcfg.epsilon_iqr_factor * iqr;

  const double dt_eval = grid.dt() * spec.offset_time_stride;
  const double dx_eval = grid.dx() * spec.offset_space_stride;
  const double floor_delta =
      2.0 * std::max(std::pow(dx_eval, spec.a), std::pow(dt_eval, 0.25));

  Table tail;
  tail.columns = {"alpha",     "delta",   "resolvable", "tail_prob",
                  "std_error", "epsilon", "iqr",        "M"};
  Table results = make_results_table();
  std::vector<double> batch_means(n_batches);
  for (int ai = 0; ai < n_alpha; ++ai) {
    for (std::size_t di = 0; di < spec.deltas.size(); ++di) {
      const double d = spec.deltas[di];
      if (d < floor_delta) {
        tail.rows.push_back({fmt(family[ai].value()), fmt(d), "0", "", "",
                             fmt(epsilon), fmt(iqr), std::to_string(used_total)});
        continue;
      }
      double total = 0.0;
      for (int b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (const auto& per_replica : maxima_by_batch[b][ai]) {
          s += per_replica[di] > epsilon ? 1.0 : 0.0;
        }
        batch_means[b] = s / used_by_batch[b];
        total += s;
      }
      const double prob = total / used_total;
      const double se = stats::batch_mean_std_error(batch_means);
      tail.rows.push_back({fmt(family[ai].value()), fmt(d), "1", fmt(prob),
                           fmt(se), fmt(epsilon), fmt(iqr),
                           std::to_string(used_total)});
      push_result_row(results, "modulus_tail_probability",
                      {{"alpha", family[ai].value()},
                       {"delta", d},
                       {"epsilon", epsilon},
                       {"a", spec.a}},
                      prob, se, used_total, config.seed);
    }
  }
  result.tables["tail"] = std::move(tail);
  result.tables["results"] = std::move(results);
}

}  // namespace

RunResult run_experiment(const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.config = config;
  switch (config.experiment) {
    case Experiment::kKernelVerify: {
      result.tables["kernels"] = kernel_verification_table();
      result.replicas_used = 0;
      break;
    }
    case Experiment::kAlphaToOne:
    case Experiment::kAlphaContinuity:
      run_norm_experiment(config, result);
      break;
    case Experiment::kHolder:
      run_holder(config, result);
      break;
    case Experiment::kTightness:
      run_tightness(config, result);
      break;
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

std::filesystem::path result_dir(const RunConfig& config) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(config.config_hash()));
  return std::filesystem::path(config.output_dir) /
         (experiment_name(config.experiment) + "-" + hex);
}

bool write_result(const RunResult& result) {
  const auto dir = result_dir(result.config);
  if (std::filesystem::exists(dir / "_complete")) return false;
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.json");
    out << result.config.canonical_json().dump(2) << "\n";
  }
  for (const auto& [name, table] : result.tables) {
    write_table_csv(table, dir / (name + ".csv"));
  }
  {
    nlohmann::json summary{{"experiment", experiment_name(result.config.experiment)},
                           {"blow_up_count", result.blow_up_count},
                           {"replicas_used", result.replicas_used}};
    std::ofstream out(dir / "summary.json");
    out << summary.dump(2) << "\n";
  }
  {
    // Wall time is diagnostic only; it lives outside the deterministic set.
    std::ofstream out(dir / "timing.log");
    out << result.wall_seconds << " s\n";
  }
  std::ofstream marker(dir / "_complete");
  marker << "ok\n";
  return true;
}

namespace {

void emit_projection(const std::filesystem::path& dir, const char* in_name,
                     const char* out_name,
                     const std::vector<std::string>& want_columns) {
  const auto src = dir / in_name;
  if (!std::filesystem::exists(src)) return;
  const Table table = read_table_csv(src);
  Table out;
  out.columns = want_columns;
  std::vector<int> idx;
  for (const auto& c : want_columns) {
    const auto it = std::find(table.columns.begin(), table.columns.end(), c);
    if (it == table.columns.end()) {
      throw std::runtime_error(std::string("emit_plotdata: missing column ") + c);
    }
    idx.push_back(static_cast<int>(it - table.columns.begin()));
  }
  for (const auto& row : table.rows) {
    std::vector<std::string> r;
    r.reserve(idx.size());
    for (int i : idx) r.push_back(row[i]);
    out.rows.push_back(std::move(r));
  }
  write_table_csv(out, dir / out_name);
}

}  // namespace

void emit_plotdata(const std::filesystem::path& result_directory) {
  if (!std::filesystem::exists(result_directory / "config.json")) {
    throw std::runtime_error("emit_plotdata: " + result_directory.string() +
                             " is not a result directory");
  }
  emit_projection(result_directory, "norms.csv", "plot_norm_vs_alpha.csv",
                  {"alpha", "k", "norm", "std_error"});
  emit_projection(result_directory, "fdd.csv", "plot_fdd_distance.csv",
                  {"alpha", "t", "x", "w1", "std_error"});
  emit_projection(result_directory, "structure.csv",
                  "plot_structure_function.csv",
                  {"alpha", "k", "axis", "lag", "mean", "std_error"});
  emit_projection(result_directory, "fits.csv", "plot_holder_fits.csv",
                  {"alpha", "k", "axis", "slope", "intercept", "r_squared",
                   "exponent"});
  emit_projection(result_directory, "tail.csv", "plot_tightness.csv",
                  {"alpha", "delta", "tail_prob", "std_error", "epsilon"});
  emit_projection(result_directory, "kernels.csv", "plot_kernel_relerr.csv",
                  {"quantity", "rel_err", "tol", "pass"});
}

}  // namespace rshe::harness
