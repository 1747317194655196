#include "rshe/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "rshe/noise.hpp"

namespace rshe::estimators {

namespace {

void require_even_k(int k) {
  if (k < 2 || k % 2 != 0) {
    throw std::invalid_argument("k must be an even integer >= 2");
  }
}

// |d|^k for even k without pow().
inline double pow_even(double d, int k) {
  const double d2 = d * d;
  switch (k) {
    case 2:
      return d2;
    case 4:
      return d2 * d2;
    case 6:
      return d2 * d2 * d2;
    default: {
      double r = 1.0;
      for (int i = 0; i < k / 2; ++i) r *= d2;
      return r;
    }
  }
}

void require_homogeneous(std::span<const solver::SolutionPath> ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("empty ensemble");
  const auto& first = ensemble.front();
  for (const auto& p : ensemble) {
    if (!(p.grid == first.grid) || p.alpha != first.alpha ||
        !(p.sigma == first.sigma)) {
      throw std::invalid_argument("ensemble metadata is not homogeneous");
    }
  }
}

void require_coupled(std::span<const solver::SolutionPath> a,
                     std::span<const solver::SolutionPath> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("coupled ensembles must have equal nonzero size");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].coupled_with(b[i])) {
      throw std::invalid_argument(
          "ensembles are not coupled: seed/replica/grid mismatch at index " +
          std::to_string(i));
    }
  }
}

}  // namespace

// ---- moments ----------------------------------------------------------------

std::vector<stats::EnsembleStats> moment_field(
    std::span<const solver::SolutionPath> ensemble, int k,
    std::span<const PointIndex> points, double center) {
  require_even_k(k);
  require_homogeneous(ensemble);
  const auto& grid = ensemble.front().grid;
  const int n_obs = ensemble.front().n_obs;
  stats::BatchPlan plan(static_cast<int>(ensemble.size()));

  std::vector<stats::EnsembleStats> out;
  out.reserve(points.size());
  std::vector<double> batch_means(plan.num_batches());
  for (const auto& pt : points) {
    if (pt.time_index < 0 || pt.time_index > grid.n_time || pt.obs_index < 0 ||
        pt.obs_index >= n_obs) {
      throw std::invalid_argument("moment_field: point outside the recorded window");
    }
    double total = 0.0;
    for (int b = 0; b < plan.num_batches(); ++b) {
      auto [lo, hi] = plan.batch_range(b);
      double s = 0.0;
      for (int r = lo; r < hi; ++r) {
        s += pow_even(ensemble[r].at(pt.time_index, pt.obs_index) - center, k);
      }
      batch_means[b] = s / (hi - lo);
      total += s;
    }
    stats::EnsembleStats e;
    e.estimate = total / static_cast<double>(ensemble.size());
    e.std_error = stats::batch_mean_std_error(batch_means);
    e.sample_size = static_cast<int>(ensemble.size());
    e.definition = "E|u-center|^" + std::to_string(k);
    out.push_back(std::move(e));
  }
  return out;
}

// ---- N_{gamma,k} -------------------------------------------------------------

void add_abs_pow_k_diff(const solver::SolutionPath& a,
                        const solver::SolutionPath& b, int k,
                        std::span<double> sums) {
  if (!a.coupled_with(b)) {
    throw std::invalid_argument("add_abs_pow_k_diff: paths are not coupled");
  }
  if (a.values.size() != b.values.size() || sums.size() != a.values.size()) {
    throw std::invalid_argument("add_abs_pow_k_diff: size mismatch");
  }
  const double* pa = a.values.data();
  const double* pb = b.values.data();
  for (std::size_t i = 0; i < sums.size(); ++i) {
    sums[i] += pow_even(pa[i] - pb[i], k);
  }
}

NormFromField norm_from_mean_field(std::span<const double> mean_pow_k,
                                   int n_time_levels, int n_obs, double dt,
                                   double gamma, int k) {
  if (static_cast<std::size_t>(n_time_levels) * n_obs != mean_pow_k.size()) {
    throw std::invalid_argument("norm_from_mean_field: shape mismatch");
  }
  // e^{-gamma t} m^{1/k} is maximal where e^{-k gamma t} m is, so scan the
  // k-th powers and take one root at the end.
  double best = -1.0;
  PointIndex arg{0, 0};
  std::size_t idx = 0;
  for (int it = 0; it < n_time_levels; ++it) {
    const double w = std::exp(-static_cast<double>(k) * gamma * it * dt);
    for (int j = 0; j < n_obs; ++j, ++idx) {
      const double v = w * mean_pow_k[idx];
      if (v > best) {
        best = v;
        arg = {it, j};
      }
    }
  }
  NormFromField r;
  r.value = std::pow(best, 1.0 / k);
  r.argmax = arg;
  return r;
}

NormEstimate n_gamma_k_norm(std::span<const solver::SolutionPath> a,
                            std::span<const solver::SolutionPath> b,
                            double gamma, int k) {
  require_even_k(k);
  if (!(gamma >= 1.0)) {
    throw std::invalid_argument("n_gamma_k_norm: gamma must be >= 1");
  }
  require_coupled(a, b);
  require_homogeneous(a);
  require_homogeneous(b);
  const auto& grid = a.front().grid;
  const int n_obs = a.front().n_obs;
  const std::size_t cells = a.front().values.size();
  stats::BatchPlan plan(static_cast<int>(a.size()));

  std::vector<std::vector<double>> batch_sums(
      plan.num_batches(), std::vector<double>(cells, 0.0));
  for (int bidx = 0; bidx < plan.num_batches(); ++bidx) {
    auto [lo, hi] = plan.batch_range(bidx);
    for (int r = lo; r < hi; ++r) {
      add_abs_pow_k_diff(a[r], b[r], k, batch_sums[bidx]);
    }
  }
  std::vector<double> mean_field(cells, 0.0);
  for (const auto& bs : batch_sums) {
    for (std::size_t i = 0; i < cells; ++i) mean_field[i] += bs[i];
  }
  const double inv_m = 1.0 / static_cast<double>(a.size());
  for (auto& v : mean_field) v *= inv_m;

  const auto nf = norm_from_mean_field(mean_field, grid.n_time + 1, n_obs,
                                       grid.dt(), gamma, k);

  // Delta method at the argmax: se(m^{1/k}) = m^{1/k - 1} se(m) / k.
  const std::size_t arg_idx =
      static_cast<std::size_t>(nf.argmax.time_index) * n_obs + nf.argmax.obs_index;
  std::vector<double> batch_means(plan.num_batches());
  for (int bidx = 0; bidx < plan.num_batches(); ++bidx) {
    auto [lo, hi] = plan.batch_range(bidx);
    batch_means[bidx] = batch_sums[bidx][arg_idx] / (hi - lo);
  }
  const double m_hat = mean_field[arg_idx];
  const double se_m = stats::batch_mean_std_error(batch_means);
  const double weight =
      std::exp(-gamma * nf.argmax.time_index * grid.dt());
  double se = 0.0;
  if (m_hat > 0.0) {
    se = weight * std::pow(m_hat, 1.0 / k - 1.0) * se_m / k;
  }

  NormEstimate est;
  est.stats.estimate = nf.value;
  est.stats.std_error = se;
  est.stats.sample_size = static_cast<int>(a.size());
  est.stats.definition = "N_{gamma,k}";
  est.argmax = nf.argmax;
  return est;
}

// ---- structure functions -----------------------------------------------------

std::vector<double> structure_means_one_path(const solver::SolutionPath& path,
                                             int k, std::span<const int> lags,
                                             Axis axis, int base_time_stride) {
  require_even_k(k);
  if (base_time_stride < 1) throw std::invalid_argument("base_time_stride >= 1");
  const int nt = path.grid.n_time;
  const int n_obs = path.n_obs;
  const int t_start = (nt + 1) / 2;  // initial layer excluded: t >= T/2
  std::vector<double> means(lags.size(), 0.0);
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const int lag = lags[li];
    double sum = 0.0;
    std::int64_t count = 0;
    if (axis == Axis::kSpace) {
      if (lag < 1 || lag >= n_obs) throw std::invalid_argument("bad spatial lag");
      for (int it = t_start; it <= nt; it += base_time_stride) {
        auto row = path.time_row(it);
        for (int j = 0; j + lag < n_obs; ++j) {
          sum += pow_even(row[j + lag] - row[j], k);
        }
        count += n_obs - lag;
      }
    } else {
      if (lag < 1 || lag > nt) throw std::invalid_argument("bad temporal lag");
      for (int it = t_start; it + lag <= nt; it += base_time_stride) {
        auto row0 = path.time_row(it);
        auto row1 = path.time_row(it + lag);
        for (int j = 0; j < n_obs; ++j) {
          sum += pow_even(row1[j] - row0[j], k);
        }
        count += n_obs;
      }
    }
    if (count == 0) throw std::invalid_argument("structure lag leaves no base points");
    means[li] = sum / static_cast<double>(count);
  }
  return means;
}

void validate_structure_lags(const GridSpec& grid, std::span<const int> lags,
                             Axis axis) {
  if (lags.size() < 4) {
    throw std::invalid_argument("structure fit needs at least 4 lags");
  }
  const double unit = axis == Axis::kSpace ? grid.dx() : grid.dt();
  const double window =
      axis == Axis::kSpace ? 2.0 * grid.obs_half_width : grid.horizon;
  double lo = 1e300, hi = 0.0;
  for (int lag : lags) {
    if (lag < 4) {
      throw std::invalid_argument("structure lags below the 4-cell discretization floor");
    }
    const double phys = lag * unit;
    if (phys > window / 8.0) {
      throw std::invalid_argument("structure lags above 1/8 of the window");
    }
    lo = std::min(lo, phys);
    hi = std::max(hi, phys);
  }
  if (hi < 10.0 * lo) {
    throw std::invalid_argument("structure lags must span at least one decade");
  }
}

PowerLawFit fit_power_law(std::span<const double> lag_values,
                          std::span<const double> means, int k) {
  PowerLawFit fit;
  if (lag_values.size() != means.size() || lag_values.size() < 2) {
    throw std::invalid_argument("fit_power_law: bad inputs");
  }
  for (double m : means) {
    if (!(m > 1e-300)) {
      fit.degenerate = true;
      return fit;
    }
  }
  const std::size_t n = means.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = std::log(lag_values[i]);
    ys[i] = std::log(means[i]);
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  fit.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = fit.slope * xs[i] + fit.intercept;
    fit.residuals[i] = ys[i] - pred;
    ss_res += fit.residuals[i] * fit.residuals[i];
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.exponent = fit.slope / k;
  return fit;
}

StructureFunctionResult structure_function_exponents(
    std::span<const solver::SolutionPath> ensemble, int k,
    std::span<const int> space_lag_cells, std::span<const int> time_lag_steps,
    int base_time_stride) {
  require_even_k(k);
  require_homogeneous(ensemble);
  const auto& grid = ensemble.front().grid;
  validate_structure_lags(grid, space_lag_cells, Axis::kSpace);
  validate_structure_lags(grid, time_lag_steps, Axis::kTime);
  stats::BatchPlan plan(static_cast<int>(ensemble.size()));

  StructureFunctionResult result;
  for (Axis axis : {Axis::kSpace, Axis::kTime}) {
    const auto lags = axis == Axis::kSpace ? space_lag_cells : time_lag_steps;
    const double unit = axis == Axis::kSpace ? grid.dx() : grid.dt();
    std::vector<double> total(lags.size(), 0.0);
    std::vector<std::vector<double>> batch_means(
        plan.num_batches(), std::vector<double>(lags.size(), 0.0));
    for (int b = 0; b < plan.num_batches(); ++b) {
      auto [lo, hi] = plan.batch_range(b);
      for (int r = lo; r < hi; ++r) {
        const auto m =
            structure_means_one_path(ensemble[r], k, lags, axis, base_time_stride);
        for (std::size_t i = 0; i < m.size(); ++i) batch_means[b][i] += m[i];
      }
      for (std::size_t i = 0; i < lags.size(); ++i) {
        total[i] += batch_means[b][i];
        batch_means[b][i] /= (hi - lo);
      }
    }
    std::vector<LagStat> lag_stats(lags.size());
    std::vector<double> means(lags.size());
    std::vector<double> phys(lags.size());
    std::vector<double> per_batch(plan.num_batches());
    for (std::size_t i = 0; i < lags.size(); ++i) {
      phys[i] = lags[i] * unit;
      means[i] = total[i] / static_cast<double>(ensemble.size());
      for (int b = 0; b < plan.num_batches(); ++b) per_batch[b] = batch_means[b][i];
      lag_stats[i] = {phys[i], means[i], stats::batch_mean_std_error(per_batch)};
    }
    auto fit = fit_power_law(phys, means, k);
    if (axis == Axis::kSpace) {
      result.space_fit = std::move(fit);
      result.space_stats = std::move(lag_stats);
    } else {
      result.time_fit = std::move(fit);
      result.time_stats = std::move(lag_stats);
    }
  }
  return result;
}

// ---- modulus / tightness ------------------------------------------------------

std::vector<double> modulus_maxima_one_path(const solver::SolutionPath& path,
                                            const ModulusSpec& spec) {
  if (!(spec.a > 0.0 && spec.a < 0.5)) {
    throw std::invalid_argument("modulus: a must lie in (0, 1/2)");
  }
  if (spec.offset_time_stride < 1 || spec.offset_space_stride < 1 ||
      spec.base_time_stride < 1 || spec.base_space_stride < 1) {
    throw std::invalid_argument("modulus: strides must be >= 1");
  }
  const auto& grid = path.grid;
  const double dt_eval = grid.dt() * spec.offset_time_stride;
  const double dx_eval = grid.dx() * spec.offset_space_stride;
  const double floor_delta =
      2.0 * std::max(std::pow(dx_eval, spec.a), std::pow(dt_eval, 0.25));

  double delta_cap = 0.0;
  for (double d : spec.deltas) {
    if (!(d > 0.0)) throw std::invalid_argument("modulus: deltas must be > 0");
    if (d >= floor_delta) delta_cap = std::max(delta_cap, d);
  }
  std::vector<double> out(spec.deltas.size(),
                          std::numeric_limits<double>::quiet_NaN());
  if (delta_cap == 0.0) return out;

  const int nt = grid.n_time;
  const int n_obs = path.n_obs;
  // Offsets of the largest resolvable ball, with rho; each is scanned over the
  // base lattice once and reused for every smaller delta.
  struct Offset {
    int dit, dj;
    double rho;
    double base_max;
  };
  std::vector<Offset> offsets;
  const int max_q = static_cast<int>(std::pow(delta_cap, 4.0) / dt_eval);
  for (int q = 0; q <= max_q; ++q) {
    const double rho_t = std::pow(q * dt_eval, 0.25);
    if (rho_t >= delta_cap) break;
    const double budget = delta_cap - rho_t;
    const int max_p =
        static_cast<int>(std::pow(budget, 1.0 / spec.a) / dx_eval);
    for (int p = (q == 0 ? 1 : -max_p); p <= max_p; ++p) {
      if (q == 0 && p <= 0) continue;
      const double rho = rho_t + std::pow(std::abs(p) * dx_eval, spec.a);
      if (rho >= delta_cap) continue;
      offsets.push_back({q * spec.offset_time_stride,
                         p * spec.offset_space_stride, rho, 0.0});
    }
  }

  for (auto& off : offsets) {
    double best = 0.0;
    const int j_lo = off.dj < 0 ? -off.dj : 0;
    const int j_hi = off.dj < 0 ? n_obs : n_obs - off.dj;
    for (int it = 0; it + off.dit <= nt; it += spec.base_time_stride) {
      auto row0 = path.time_row(it);
      auto row1 = path.time_row(it + off.dit);
      for (int j = j_lo; j < j_hi; j += spec.base_space_stride) {
        best = std::max(best, std::abs(row1[j + off.dj] - row0[j]));
      }
    }
    off.base_max = best;
  }

  for (std::size_t di = 0; di < spec.deltas.size(); ++di) {
    const double d = spec.deltas[di];
    if (d < floor_delta) continue;  // stays NaN: unresolvable on this lattice
    double m = 0.0;
    for (const auto& off : offsets) {
      if (off.rho < d) m = std::max(m, off.base_max);
    }
    out[di] = m;
  }
  return out;
}

std::vector<TailPoint> modulus_tail_probability(
    std::span<const solver::SolutionPath> ensemble, const ModulusSpec& spec,
    double epsilon) {
  require_homogeneous(ensemble);
  if (!(epsilon > 0.0)) throw std::invalid_argument("modulus: epsilon must be > 0");
  stats::BatchPlan plan(static_cast<int>(ensemble.size()));

  std::vector<std::vector<double>> maxima(ensemble.size());
  for (std::size_t r = 0; r < ensemble.size(); ++r) {
    maxima[r] = modulus_maxima_one_path(ensemble[r], spec);
  }

  const auto& grid = ensemble.front().grid;
  const double dt_eval = grid.dt() * spec.offset_time_stride;
  const double dx_eval = grid.dx() * spec.offset_space_stride;
  const double floor_delta =
      2.0 * std::max(std::pow(dx_eval, spec.a), std::pow(dt_eval, 0.25));

  std::vector<TailPoint> out(spec.deltas.size());
  std::vector<double> batch_means(plan.num_batches());
  for (std::size_t di = 0; di < spec.deltas.size(); ++di) {
    TailPoint& tp = out[di];
    tp.delta = spec.deltas[di];
    if (spec.deltas[di] < floor_delta) {
      tp.resolvable = false;
      tp.skip_reason = "delta below evaluation-lattice floor " +
                       std::to_string(floor_delta);
      continue;
    }
    double total = 0.0;
    for (int b = 0; b < plan.num_batches(); ++b) {
      auto [lo, hi] = plan.batch_range(b);
      double s = 0.0;
      for (int r = lo; r < hi; ++r) {
        s += maxima[r][di] > epsilon ? 1.0 : 0.0;
      }
      batch_means[b] = s / (hi - lo);
      total += s;
    }
    tp.prob.estimate = total / static_cast<double>(ensemble.size());
    tp.prob.std_error = stats::batch_mean_std_error(batch_means);
    tp.prob.sample_size = static_cast<int>(ensemble.size());
    tp.prob.definition = "P{sup_(rho<delta) |du| > eps}";
  }
  return out;
}

// ---- fdd -----------------------------------------------------------------------

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("wasserstein1: samples must have equal nonzero size");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double s = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) s += std::abs(sa[i] - sb[i]);
  return s / static_cast<double>(sa.size());
}

stats::EnsembleStats fdd_wasserstein1(std::span<const double> a,
                                      std::span<const double> b,
                                      std::uint64_t bootstrap_stream,
                                      int n_bootstrap) {
  if (a.size() < 500 || b.size() < 500) {
    throw std::invalid_argument("fdd_wasserstein1: needs at least 500 samples per side");
  }
  const double w1 = wasserstein1(a, b);
  std::mt19937_64 engine(bootstrap_stream);
  const std::size_t m = a.size();
  std::vector<double> ra(m), rb(m), boots(n_bootstrap);
  for (int it = 0; it < n_bootstrap; ++it) {
    for (std::size_t i = 0; i < m; ++i) ra[i] = a[engine() % m];
    for (std::size_t i = 0; i < m; ++i) rb[i] = b[engine() % m];
    boots[it] = wasserstein1(ra, rb);
  }
  const double bm = stats::mean(boots);
  double ss = 0.0;
  for (double v : boots) ss += (v - bm) * (v - bm);
  stats::EnsembleStats e;
  e.estimate = w1;
  e.std_error = std::sqrt(ss / (n_bootstrap - 1));
  e.sample_size = static_cast<int>(m);
  e.definition = "W1";
  return e;
}

// ---- isometry -------------------------------------------------------------------

std::vector<double> IntegrandSpec::realize(const GridSpec& grid) const {
  std::vector<double> phi(static_cast<std::size_t>(grid.n_space), 0.0);
  for (int i = 0; i < grid.n_space; ++i) {
    const double x = grid.x_at(i);
    switch (kind) {
      case Kind::kBox:
        phi[i] = std::abs(x - center) <= width ? amplitude : 0.0;
        break;
      case Kind::kGaussian: {
        const double z = (x - center) / width;
        phi[i] = amplitude * std::exp(-z * z / 2.0);
        break;
      }
    }
  }
  return phi;
}

std::string IntegrandSpec::name() const {
  return kind == Kind::kBox ? "box" : "gaussian";
}

IsometryResult ito_isometry_check(const GridSpec& grid, Alpha alpha,
                                  const IntegrandSpec& integrand, int replicas,
                                  std::uint64_t seed) {
  grid.validate();
  if (integrand.time_rows < 1) {
    throw std::invalid_argument("ito_isometry_check: time_rows must be >= 1");
  }
  // Slabs only need the rows phi touches; keep dt identical by scaling the
  // horizon with the row count.
  GridSpec slab_grid = grid;
  slab_grid.n_time = integrand.time_rows;
  slab_grid.horizon = grid.dt() * integrand.time_rows;

  const auto phi = integrand.realize(grid);
  const int n = grid.n_space;
  const double dt = grid.dt();
  const double dx = grid.dx();

  stats::BatchPlan plan(replicas);
  fft::Workspace ws(n);
  std::vector<double> batch_means(plan.num_batches());
  double total = 0.0;
  for (int b = 0; b < plan.num_batches(); ++b) {
    auto [lo, hi] = plan.batch_range(b);
    double s = 0.0;
    for (int r = lo; r < hi; ++r) {
      const auto slab = noise::color_slab(
          noise::sample_white_slab(slab_grid, seed, r), alpha, ws);
      double integral = 0.0;
      for (int it = 0; it < integrand.time_rows; ++it) {
        auto row = slab.row(it);
        double rs = 0.0;
        for (int i = 0; i < n; ++i) rs += phi[i] * row[i];
        integral += rs;
      }
      integral *= dt * dx;
      s += integral * integral;
    }
    batch_means[b] = s / (hi - lo);
    total += s;
  }

  // Exact discrete double sum over the support of phi.
  const auto cov = noise::discrete_target_covariance(grid, alpha);
  double phi_max = 0.0;
  for (double v : phi) phi_max = std::max(phi_max, std::abs(v));
  std::vector<int> support;
  for (int i = 0; i < n; ++i) {
    if (std::abs(phi[i]) > 1e-14 * phi_max) support.push_back(i);
  }
  double quad_form = 0.0;
  for (int i : support) {
    double inner = 0.0;
    for (int j : support) {
      int r = std::abs(i - j);
      if (r > n / 2) r = n - r;
      inner += cov[r] * phi[j];
    }
    quad_form += phi[i] * inner;
  }

  IsometryResult res;
  res.mc_variance = total / static_cast<double>(replicas);
  res.exact_variance = quad_form * integrand.time_rows * dt * dx * dx;
  res.std_error = stats::batch_mean_std_error(batch_means);
  res.sample_size = replicas;
  return res;
}

}  // namespace rshe::estimators
