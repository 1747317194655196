#include "rshe/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "rshe/stats.hpp"

namespace rshe::noise {

namespace {

constexpr char kSlabMagic[8] = {'R', 'S', 'H', 'E', 'S', 'L', 'A', 'B'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

std::vector<double> coloring_multiplier(const GridSpec& grid, Alpha alpha) {
  const auto xi = grid.frequencies();
  std::vector<double> m(xi.size(), 1.0);
  if (alpha.is_white()) return m;
  const double exponent = -(1.0 - alpha.value()) / 2.0;
  m[0] = 0.0;  // no canonical zero mode for the homogeneous kernel on a torus
  for (std::size_t j = 1; j < m.size(); ++j) m[j] = std::pow(xi[j], exponent);
  return m;
}

WhiteRowSource::WhiteRowSource(const GridSpec& grid, std::uint64_t seed, int replica)
    : stream_(rng::derive_stream(seed, static_cast<std::uint64_t>(replica), "white-slab")),
      stddev_(1.0 / std::sqrt(grid.dt() * grid.dx())) {}

void WhiteRowSource::next_row(std::span<double> out) {
  stream_.fill(out, stddev_);
}

NoiseSlab sample_white_slab(const GridSpec& grid, std::uint64_t seed, int replica) {
  grid.validate();
  NoiseSlab slab;
  slab.grid = grid;
  slab.alpha = Alpha(1.0);
  slab.seed = seed;
  slab.replica = replica;
  slab.values.resize(static_cast<std::size_t>(grid.n_time) * grid.n_space);
  WhiteRowSource source(grid, seed, replica);
  for (int it = 0; it < grid.n_time; ++it) source.next_row(slab.row(it));
  return slab;
}

NoiseSlab color_slab(const NoiseSlab& white, Alpha alpha, fft::Workspace& ws) {
  if (!white.alpha.is_white()) {
    throw std::invalid_argument("color_slab: input must be a white slab");
  }
  if (alpha.is_white()) return white;  // exact identity, bit for bit
  if (ws.fft.size() != white.grid.n_space) {
    throw std::invalid_argument("color_slab: workspace size mismatch");
  }
  NoiseSlab colored = white;
  colored.alpha = alpha;
  const auto m = coloring_multiplier(white.grid, alpha);
  for (int it = 0; it < white.grid.n_time; ++it) {
    ws.fft.forward(white.row(it), ws.spec_a);
    for (std::size_t j = 0; j < m.size(); ++j) ws.spec_a[j] *= m[j];
    ws.fft.inverse(ws.spec_a, colored.row(it));
  }
  return colored;
}

NoiseSlab color_slab(const NoiseSlab& white, Alpha alpha) {
  if (alpha.is_white()) {
    if (!white.alpha.is_white()) {
      throw std::invalid_argument("color_slab: input must be a white slab");
    }
    return white;
  }
  fft::Workspace ws(white.grid.n_space);
  return color_slab(white, alpha, ws);
}

std::vector<double> discrete_target_covariance(const GridSpec& grid, Alpha alpha) {
  const int n = grid.n_space;
  std::vector<double> cov(static_cast<std::size_t>(n) / 2 + 1, 0.0);
  if (alpha.is_white()) {
    // Separate white path: Kronecker delta / dx.
    cov[0] = 1.0 / grid.dx();
    return cov;
  }
  const auto m = coloring_multiplier(grid, alpha);
  std::vector<std::complex<double>> spectrum(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) spectrum[j] = m[j] * m[j];
  fft::RealFft fft(n);
  std::vector<double> full(static_cast<std::size_t>(n));
  // inverse() scales by 1/n, so this evaluates (1/n) sum_j m^2 e^{2pi i j r/n};
  // multiplying by n/(2L) = 1/dx gives the (1/(2L)) sum convention.
  fft.inverse(spectrum, full);
  for (std::size_t r = 0; r < cov.size(); ++r) cov[r] = full[r] / grid.dx();
  return cov;
}

std::vector<LagEstimate> empirical_covariance(std::span<const NoiseSlab> slabs,
                                              std::span<const int> lags) {
  if (slabs.size() < 100) {
    throw std::invalid_argument("empirical_covariance: need at least 100 slabs");
  }
  const GridSpec& grid = slabs.front().grid;
  const Alpha alpha = slabs.front().alpha;
  for (const auto& s : slabs) {
    if (!(s.grid == grid) || s.alpha != alpha) {
      throw std::invalid_argument("empirical_covariance: mixed grid or alpha");
    }
  }
  const int n = grid.n_space;
  stats::BatchPlan plan(static_cast<int>(slabs.size()));
  std::vector<LagEstimate> out;
  out.reserve(lags.size());
  std::vector<double> batch_means(plan.num_batches());
  for (int lag : lags) {
    if (lag < 0 || lag >= n) throw std::invalid_argument("empirical_covariance: bad lag");
    double total = 0.0;
    for (int b = 0; b < plan.num_batches(); ++b) {
      auto [lo, hi] = plan.batch_range(b);
      double batch_sum = 0.0;
      for (int r = lo; r < hi; ++r) {
        const NoiseSlab& slab = slabs[r];
        double acc = 0.0;
        for (int it = 0; it < grid.n_time; ++it) {
          auto row = slab.row(it);
          for (int i = 0; i < n; ++i) {
            acc += row[i] * row[(i + lag) & (n - 1)];
          }
        }
        batch_sum += acc / (static_cast<double>(grid.n_time) * n);
      }
      batch_means[b] = batch_sum / (hi - lo);
      total += batch_sum;
    }
    LagEstimate est;
    est.lag = lag;
    est.estimate = total / static_cast<double>(slabs.size());
    est.std_error = stats::batch_mean_std_error(batch_means);
    out.push_back(est);
  }
  return out;
}

void write_slab(const NoiseSlab& slab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_slab: cannot open " + path.string());
  out.write(kSlabMagic, sizeof(kSlabMagic));
  put<std::uint32_t>(out, 1);  // layout version
  put<double>(out, slab.grid.horizon);
  put<std::int64_t>(out, slab.grid.n_time);
  put<double>(out, slab.grid.half_width);
  put<std::int64_t>(out, slab.grid.n_space);
  put<double>(out, slab.grid.kappa);
  put<double>(out, slab.grid.obs_half_width);
  put<std::uint64_t>(out, slab.seed);
  put<std::int64_t>(out, slab.replica);
  put<double>(out, slab.alpha.value());
  out.write(reinterpret_cast<const char*>(slab.values.data()),
            static_cast<std::streamsize>(slab.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_slab: short write to " + path.string());
}

NoiseSlab read_slab(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_slab: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kSlabMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("read_slab: bad magic in " + path.string());
  }
  if (get<std::uint32_t>(in) != 1) {
    throw std::runtime_error("read_slab: unsupported layout version");
  }
  NoiseSlab slab;
  slab.grid.horizon = get<double>(in);
  slab.grid.n_time = static_cast<int>(get<std::int64_t>(in));
  slab.grid.half_width = get<double>(in);
  slab.grid.n_space = static_cast<int>(get<std::int64_t>(in));
  slab.grid.kappa = get<double>(in);
  slab.grid.obs_half_width = get<double>(in);
  slab.seed = get<std::uint64_t>(in);
  slab.replica = static_cast<int>(get<std::int64_t>(in));
  slab.alpha = Alpha(get<double>(in));
  slab.values.resize(static_cast<std::size_t>(slab.grid.n_time) * slab.grid.n_space);
  in.read(reinterpret_cast<char*>(slab.values.data()),
          static_cast<std::streamsize>(slab.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("read_slab: truncated file " + path.string());
  return slab;
}

}  // namespace rshe::noise
