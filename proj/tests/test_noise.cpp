#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "rshe/kernels.hpp"
#include "rshe/noise.hpp"

using namespace rshe;
namespace nz = rshe::noise;

namespace {

GridSpec small_grid() {
  GridSpec g;
  g.horizon = 0.1;
  g.n_time = 8;
  g.half_width = 16.0;
  g.n_space = 256;
  g.kappa = 1.0;
  g.obs_half_width = 8.0;
  return g;
}

}  // namespace

TEST_CASE("white slab determinism and independence across replicas") {
  const auto g = small_grid();
  const auto a = nz::sample_white_slab(g, 11, 3);
  const auto b = nz::sample_white_slab(g, 11, 3);
  CHECK(a.values == b.values);  // bit-for-bit

  // empirical mean of all cells within 4 standard errors of 0
  double mean = 0.0;
  for (double v : a.values) mean += v;
  mean /= static_cast<double>(a.values.size());
  const double cell_sd = 1.0 / std::sqrt(g.dt() * g.dx());
  CHECK(std::abs(mean) <= 4.0 * cell_sd / std::sqrt(static_cast<double>(a.values.size())));

  const auto c = nz::sample_white_slab(g, 11, 4);
  double dot = 0.0, na = 0.0, nc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * c.values[i];
    na += a.values[i] * a.values[i];
    nc += c.values[i] * c.values[i];
  }
  const double corr = dot / std::sqrt(na * nc);
  CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(a.values.size())));
}

TEST_CASE("white slab cell variance matches 1/(dt dx)") {
  auto g = small_grid();
  g.n_time = 2;
  g.n_space = 64;
  const double target = 1.0 / (g.dt() * g.dx());
  const int m = 10000;
  double s2 = 0.0, mean = 0.0;
  for (int r = 0; r < m; ++r) {
    const auto slab = nz::sample_white_slab(g, 5, r);
    const double v = slab.at(1, 17);
    mean += v;
    s2 += v * v;
  }
  mean /= m;
  s2 /= m;
  CHECK(std::abs(s2 - target) / target < 0.05);
  CHECK(std::abs(mean) < 4.0 * std::sqrt(target / m));
}

TEST_CASE("coloring multiplier squared is the Riesz symbol g_{1-alpha}") {
  const auto g = small_grid();
  const auto xi = g.frequencies();
  for (double a : {0.3, 0.5, 0.9}) {
    const auto m = nz::coloring_multiplier(g, Alpha(a));
    CHECK(m[0] == 0.0);
    for (std::size_t j = 1; j < m.size(); ++j) {
      CHECK(std::abs(m[j] * m[j] - std::pow(xi[j], -(1.0 - a))) <=
            1e-12 * m[j] * m[j]);
    }
  }
  const auto white = nz::coloring_multiplier(g, Alpha(1.0));
  for (double v : white) CHECK(v == 1.0);
}

TEST_CASE("color_slab: alpha=1 identity, DC removal, linearity, continuity") {
  const auto g = small_grid();
  const auto white = nz::sample_white_slab(g, 77, 0);

  const auto same = nz::color_slab(white, Alpha(1.0));
  CHECK(same.values == white.values);

  const auto colored = nz::color_slab(white, Alpha(0.5));
  CHECK(colored.alpha.value() == 0.5);
  // every row has zero spatial mean by construction
  for (int it = 0; it < g.n_time; ++it) {
    double mean = 0.0;
    for (double v : colored.row(it)) mean += v;
    mean /= g.n_space;
    CHECK(std::abs(mean) < 1e-10);
  }

  // linearity: color(aX + bY) = a color(X) + b color(Y)
  const auto other = nz::sample_white_slab(g, 78, 0);
  nz::NoiseSlab mix = white;
  for (std::size_t i = 0; i < mix.values.size(); ++i) {
    mix.values[i] = 2.0 * white.values[i] - 3.0 * other.values[i];
  }
  const auto colored_mix = nz::color_slab(mix, Alpha(0.5));
  const auto colored_other = nz::color_slab(other, Alpha(0.5));
  double scale = 0.0;
  for (double v : colored_mix.values) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < mix.values.size(); ++i) {
    const double expect = 2.0 * colored.values[i] - 3.0 * colored_other.values[i];
    CHECK(std::abs(colored_mix.values[i] - expect) <= 1e-12 * scale);
  }

  // alpha-continuity of the construction
  double prev = 1e300;
  for (double da : {0.1, 0.01, 0.001}) {
    const auto near = nz::color_slab(white, Alpha(0.5 + da));
    double diff = 0.0;
    for (std::size_t i = 0; i < near.values.size(); ++i) {
      diff = std::max(diff, std::abs(near.values[i] - colored.values[i]));
    }
    CHECK(diff < prev);
    prev = diff;
  }
  CHECK(prev < 0.1 * std::sqrt(1.0 / (g.dt() * g.dx())));

  CHECK_THROWS_AS(nz::color_slab(colored, Alpha(0.3)), std::invalid_argument);
}

TEST_CASE("discrete target covariance: symmetry relations and white path") {
  const auto g = small_grid();
  const auto cov = nz::discrete_target_covariance(g, Alpha(0.5));
  // C(0) = (1/(2L)) sum_{j!=0} m^2
  const auto m = nz::coloring_multiplier(g, Alpha(0.5));
  double expect0 = 0.0;
  for (std::size_t j = 1; j < m.size(); ++j) {
    const double w = (j == m.size() - 1) ? 1.0 : 2.0;  // conjugate pairs
    expect0 += w * m[j] * m[j];
  }
  expect0 /= 2.0 * g.half_width;
  CHECK(std::abs(cov[0] - expect0) <= 1e-10 * expect0);

  const auto white = nz::discrete_target_covariance(g, Alpha(1.0));
  CHECK(white[0] == 1.0 / g.dx());
  for (std::size_t r = 1; r < white.size(); ++r) CHECK(white[r] == 0.0);
}

TEST_CASE("discrete covariance diagnostics against f_alpha (pinned run)") {
  GridSpec g;
  g.horizon = 0.1;
  g.n_time = 1;
  g.half_width = 50.0;
  g.n_space = 4096;
  g.obs_half_width = 10.0;
  const auto cov = nz::discrete_target_covariance(g, Alpha(0.5));
  auto at = [&](double r) { return cov[static_cast<int>(std::llround(r / g.dx()))]; };
  auto f = [](double r) { return kernels::riesz_f(0.5, r); };

  // Raw ratio sits well below 1: the zero-mode removal subtracts the infrared
  // mass (about 0.29 here). Values pinned from a reference run.
  CHECK(at(1.0) / f(1.0) == doctest::Approx(0.7077).epsilon(0.01));
  CHECK(at(5.0) / f(5.0) == doctest::Approx(0.3470).epsilon(0.02));

  // Increments cancel the missing constant and recover f_alpha closely.
  for (auto [r1, r2] : std::vector<std::pair<double, double>>{
           {1.0, 2.0}, {2.0, 5.0}, {1.0, 5.0}}) {
    const double got = at(r1) - at(r2);
    const double expect = f(r1) - f(r2);
    CHECK(std::abs(got / expect - 1.0) < 0.02);
  }
}

TEST_CASE("empirical covariance: white slabs at lags 0 and 2") {
  auto g = small_grid();
  g.n_time = 4;
  g.n_space = 64;
  std::vector<nz::NoiseSlab> slabs;
  const int m = 400;
  slabs.reserve(m);
  for (int r = 0; r < m; ++r) slabs.push_back(nz::sample_white_slab(g, 3, r));
  const int lags[] = {0, 2};
  const auto est = nz::empirical_covariance(slabs, lags);
  const double target0 = 1.0 / (g.dt() * g.dx());
  CHECK(std::abs(est[0].estimate - target0) <= 3.0 * est[0].std_error);
  CHECK(std::abs(est[1].estimate) <= 3.0 * est[1].std_error);
}

TEST_CASE("empirical covariance of colored slabs matches the discrete oracle") {
  auto g = small_grid();
  g.n_time = 4;
  g.n_space = 256;
  const Alpha alpha(0.5);
  std::vector<nz::NoiseSlab> slabs;
  const int m = 2000;
  slabs.reserve(m);
  fft::Workspace ws(g.n_space);
  for (int r = 0; r < m; ++r) {
    slabs.push_back(nz::color_slab(nz::sample_white_slab(g, 9, r), alpha, ws));
  }
  const auto cov = nz::discrete_target_covariance(g, alpha);
  const int lags[] = {0, 1, 2, 5, 11};
  const auto est = nz::empirical_covariance(slabs, lags);
  for (const auto& e : est) {
    const double target = cov[e.lag] / g.dt();
    CHECK(std::abs(e.estimate - target) <= 3.0 * e.std_error);
  }

  // mixed alpha rejected
  std::vector<nz::NoiseSlab> mixed = {slabs[0], nz::sample_white_slab(g, 9, 0)};
  mixed.resize(120, slabs[0]);
  const int lag0[] = {0};
  CHECK_THROWS_AS(nz::empirical_covariance(mixed, lag0), std::invalid_argument);
}

TEST_CASE("slab binary dump round-trips") {
  const auto g = small_grid();
  const auto slab = nz::color_slab(nz::sample_white_slab(g, 123, 7), Alpha(0.7));
  const auto path = std::filesystem::temp_directory_path() / "rshe_slab_test.bin";
  nz::write_slab(slab, path);
  const auto back = nz::read_slab(path);
  CHECK(back.values == slab.values);
  CHECK(back.alpha.value() == slab.alpha.value());
  CHECK(back.seed == slab.seed);
  CHECK(back.replica == slab.replica);
  CHECK(back.grid == slab.grid);
  std::filesystem::remove(path);
}
