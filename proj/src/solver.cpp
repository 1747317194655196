#include "rshe/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "rshe/build_info_fwd.hpp"
#include "rshe/errors.hpp"
#include "rshe/noise.hpp"

namespace rshe::solver {

namespace {

void check_finite(std::span<const double> u, int replica, int time_index) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) {
      throw BlowUpError(replica, time_index, static_cast<int>(i));
    }
  }
}

void copy_obs_row(std::span<const double> u, SolutionPath& path,
                  int time_index) {
  std::memcpy(path.values.data() + static_cast<std::size_t>(time_index) * path.n_obs,
              u.data() + path.obs_offset, sizeof(double) * path.n_obs);
}

SolutionPath make_path_shell(const GridSpec& grid, double alpha,
                             const SigmaSpec& sigma, std::uint64_t seed,
                             int replica) {
  SolutionPath path;
  path.grid = grid;
  path.alpha = alpha;
  path.sigma = sigma;
  path.seed = seed;
  path.replica = replica;
  path.obs_offset = grid.obs_begin();
  path.n_obs = grid.n_obs();
  path.values.assign(static_cast<std::size_t>(grid.n_time + 1) * path.n_obs, 0.0);
  return path;
}

// Semigroup application in place: u <- S[u] with the given symbol.
void apply_symbol(std::span<double> u, std::span<const double> symbol,
                  fft::Workspace& ws) {
  ws.fft.forward(u, ws.spec_b);
  for (std::size_t j = 0; j < symbol.size(); ++j) ws.spec_b[j] *= symbol[j];
  ws.fft.inverse(ws.spec_b, u);
}

// u += sigma(u) * noise * dt, with the sigma evaluation routed through the
// vectorized SigmaSpec::apply on the nonlinear path.
void apply_drive(std::span<double> u, std::span<const double> noise_row,
                 const SigmaSpec& sigma, double dt, fft::Workspace& ws) {
  const std::size_t n = u.size();
  switch (sigma.kind) {
    case SigmaSpec::Kind::kConstant: {
      const double c = sigma.lambda * dt;
      for (std::size_t i = 0; i < n; ++i) u[i] += c * noise_row[i];
      return;
    }
    case SigmaSpec::Kind::kLinear: {
      for (std::size_t i = 0; i < n; ++i) {
        u[i] += sigma.lambda * u[i] * noise_row[i] * dt;
      }
      return;
    }
    case SigmaSpec::Kind::kTanh: {
      std::span<double> s(ws.sigma_scratch.data(), n);
      sigma.apply(u, s);
      for (std::size_t i = 0; i < n; ++i) u[i] += s[i] * noise_row[i] * dt;
      return;
    }
  }
}

}  // namespace

std::vector<double> InitialProfile::realize(const GridSpec& grid) const {
  switch (kind) {
    case Kind::kConstantOne:
      return std::vector<double>(static_cast<std::size_t>(grid.n_space), 1.0);
    case Kind::kBump: {
      std::vector<double> u(static_cast<std::size_t>(grid.n_space));
      for (int i = 0; i < grid.n_space; ++i) {
        const double x = grid.x_at(i);
        u[i] = std::exp(-x * x / 2.0);
      }
      return u;
    }
    case Kind::kCustom:
      if (static_cast<int>(custom.size()) != grid.n_space) {
        throw std::invalid_argument("InitialProfile: custom vector length != n_space");
      }
      return custom;
  }
  throw std::logic_error("InitialProfile: bad kind");
}

std::string InitialProfile::name() const {
  switch (kind) {
    case Kind::kConstantOne:
      return "constant_one";
    case Kind::kBump:
      return "bump";
    case Kind::kCustom:
      return "custom";
  }
  throw std::logic_error("InitialProfile: bad kind");
}

std::vector<double> semigroup_symbol(const GridSpec& grid, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("semigroup_symbol: t must be >= 0");
  const auto xi = grid.frequencies();
  std::vector<double> s(xi.size());
  const double c = 2.0 * std::numbers::pi * std::numbers::pi * grid.kappa * t;
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = std::exp(-c * xi[j] * xi[j]);
  return s;
}

void step_in_place(std::span<double> u, std::span<const double> noise_row,
                   const SigmaSpec& sigma, const GridSpec& grid,
                   fft::Workspace& ws, int replica, int time_index) {
  const auto symbol = semigroup_symbol(grid, grid.dt());
  apply_drive(u, noise_row, sigma, grid.dt(), ws);
  apply_symbol(u, symbol, ws);
  check_finite(u, replica, time_index);
}

std::vector<double> step(std::span<const double> u_now,
                         std::span<const double> noise_row,
                         const SigmaSpec& sigma, const GridSpec& grid) {
  if (static_cast<int>(u_now.size()) != grid.n_space ||
      static_cast<int>(noise_row.size()) != grid.n_space) {
    throw std::invalid_argument("step: arrays must have length n_space");
  }
  fft::Workspace ws(grid.n_space);
  std::vector<double> u(u_now.begin(), u_now.end());
  step_in_place(u, noise_row, sigma, grid, ws);
  return u;
}

std::vector<SolutionPath> solve_coupled_family(const GridSpec& grid,
                                               std::span<const Alpha> alphas,
                                               const SigmaSpec& sigma,
                                               const InitialProfile& init,
                                               std::uint64_t seed, int replica) {
  grid.validate();
  if (alphas.empty()) throw std::invalid_argument("solve_coupled_family: no alphas");
  const int n = grid.n_space;
  const double dt = grid.dt();
  const auto symbol = semigroup_symbol(grid, dt);
  fft::Workspace ws(n);

  const std::vector<double> u0 = init.realize(grid);
  std::vector<SolutionPath> paths;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> multipliers;
  paths.reserve(alphas.size());
  states.reserve(alphas.size());
  for (Alpha a : alphas) {
    paths.push_back(make_path_shell(grid, a.value(), sigma, seed, replica));
    states.push_back(u0);
    copy_obs_row(u0, paths.back(), 0);
    multipliers.push_back(a.is_white() ? std::vector<double>{}
                                       : noise::coloring_multiplier(grid, a));
  }

  // One white realization drives every alpha: rows are streamed in time order
  // from the (seed, replica) stream and each alpha consumes its own coloring
  // of the same row. The forward transform of the row is shared.
  noise::WhiteRowSource source(grid, seed, replica);
  std::vector<double> white_row(static_cast<std::size_t>(n));
  std::vector<double> colored_row(static_cast<std::size_t>(n));
  bool any_colored = false;
  for (const auto& m : multipliers) any_colored |= !m.empty();

  for (int it = 0; it < grid.n_time; ++it) {
    source.next_row(white_row);
    if (any_colored) ws.fft.forward(white_row, ws.spec_a);
    for (std::size_t p = 0; p < paths.size(); ++p) {
      std::span<const double> noise_row;
      if (multipliers[p].empty()) {
        noise_row = white_row;  // alpha = 1: identity, bit for bit
      } else {
        const auto& m = multipliers[p];
        for (std::size_t j = 0; j < m.size(); ++j) ws.spec_b[j] = ws.spec_a[j] * m[j];
        ws.fft.inverse(ws.spec_b, colored_row);
        noise_row = colored_row;
      }
      auto& u = states[p];
      apply_drive(u, noise_row, sigma, dt, ws);
      apply_symbol(u, symbol, ws);
      check_finite(u, replica, it + 1);
      copy_obs_row(u, paths[p], it + 1);
    }
  }
  return paths;
}

SolutionPath solve_path(const GridSpec& grid, Alpha alpha, const SigmaSpec& sigma,
                        const InitialProfile& init, std::uint64_t seed,
                        int replica) {
  const Alpha family[] = {alpha};
  auto paths = solve_coupled_family(grid, family, sigma, init, seed, replica);
  return std::move(paths.front());
}

PicardRun picard_solve(const GridSpec& grid, Alpha alpha, const SigmaSpec& sigma,
                       const InitialProfile& init, std::uint64_t seed,
                       int replica, int n_iter) {
  grid.validate();
  if (n_iter < 1) throw std::invalid_argument("picard_solve: n_iter must be >= 1");
  const int n = grid.n_space;
  const int nt = grid.n_time;
  const double dt = grid.dt();
  const auto symbol = semigroup_symbol(grid, dt);
  fft::Workspace ws(n);

  const auto colored =
      noise::color_slab(noise::sample_white_slab(grid, seed, replica), alpha, ws);

  // u^(0): deterministic heat flow of the initial profile, all time levels.
  const std::size_t n_levels = static_cast<std::size_t>(nt) + 1;
  std::vector<std::vector<double>> flow(n_levels);
  flow[0] = init.realize(grid);
  for (int k = 0; k < nt; ++k) {
    flow[k + 1] = flow[k];
    apply_symbol(flow[k + 1], symbol, ws);
  }

  std::vector<std::vector<double>> current = flow;
  std::vector<std::vector<double>> next(n_levels);
  std::vector<double> conv(static_cast<std::size_t>(n));
  std::vector<double> deltas;
  deltas.reserve(n_iter);
  const int obs_lo = grid.obs_begin();
  const int obs_hi = grid.obs_end();

  for (int iter = 0; iter < n_iter; ++iter) {
    // v_{k+1} = S_dt[v_k + sigma(u^(n)_k) * noise_k * dt] accumulates the
    // whole stochastic convolution against the frozen previous iterate.
    std::fill(conv.begin(), conv.end(), 0.0);
    next[0] = flow[0];
    for (int k = 0; k < nt; ++k) {
      const auto row = colored.row(k);
      const auto& frozen = current[k];
      sigma.apply(frozen, ws.sigma_scratch);
      for (int i = 0; i < n; ++i) {
        conv[i] += ws.sigma_scratch[i] * row[i] * dt;
      }
      apply_symbol(conv, symbol, ws);
      next[k + 1].resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) next[k + 1][i] = flow[k + 1][i] + conv[i];
      check_finite(next[k + 1], replica, k + 1);
    }
    double delta = 0.0;
    for (std::size_t k = 0; k < n_levels; ++k) {
      for (int i = obs_lo; i < obs_hi; ++i) {
        delta = std::max(delta, std::abs(next[k][i] - current[k][i]));
      }
    }
    deltas.push_back(delta);
    current.swap(next);
  }

  bool warning = false;
  for (std::size_t i = 3; i < deltas.size(); ++i) {
    if (deltas[i] > deltas[i - 1]) warning = true;
  }

  PicardRun run;
  run.iterate_deltas = std::move(deltas);
  run.contraction_warning = warning;
  run.path = make_path_shell(grid, alpha.value(), sigma, seed, replica);
  for (std::size_t k = 0; k < n_levels; ++k) {
    copy_obs_row(current[k], run.path, static_cast<int>(k));
  }
  return run;
}

void write_path(const SolutionPath& path, const std::filesystem::path& base) {
  std::filesystem::path bin = base;
  bin += ".bin";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw std::runtime_error("write_path: cannot open " + bin.string());
  const char magic[8] = {'R', 'S', 'H', 'E', 'P', 'A', 'T', 'H'};
  out.write(magic, sizeof(magic));
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  auto put_d = [&out](double v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  auto put_i = [&out](std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put_d(path.grid.horizon);
  put_i(path.grid.n_time);
  put_d(path.grid.half_width);
  put_i(path.grid.n_space);
  put_d(path.grid.kappa);
  put_d(path.grid.obs_half_width);
  const std::uint64_t seed = path.seed;
  out.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
  put_i(path.replica);
  put_d(path.alpha);
  put_i(path.obs_offset);
  put_i(path.n_obs);
  out.write(reinterpret_cast<const char*>(path.values.data()),
            static_cast<std::streamsize>(path.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_path: short write");

  nlohmann::json sidecar{
      {"grid",
       {{"horizon", path.grid.horizon},
        {"time_steps", path.grid.n_time},
        {"half_width", path.grid.half_width},
        {"space_points", path.grid.n_space},
        {"kappa", path.grid.kappa},
        {"obs_half_width", path.grid.obs_half_width}}},
      {"sigma", {{"kind", path.sigma.name()}, {"lambda", path.sigma.lambda}}},
      {"alpha", path.alpha},
      {"seed", path.seed},
      {"replica", path.replica},
      {"solver_version", build_describe()}};
  std::filesystem::path meta = base;
  meta += ".json";
  std::ofstream js(meta);
  js << sidecar.dump(2) << "\n";
}

}  // namespace rshe::solver
