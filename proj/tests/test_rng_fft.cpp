#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "rshe/fft.hpp"
#include "rshe/rng.hpp"

using namespace rshe;

TEST_CASE("stream derivation separates replicas and purposes") {
  const auto a = rng::derive_stream(7, 0, "white-slab");
  CHECK(a == rng::derive_stream(7, 0, "white-slab"));
  CHECK(a != rng::derive_stream(7, 1, "white-slab"));
  CHECK(a != rng::derive_stream(8, 0, "white-slab"));
  CHECK(a != rng::derive_stream(7, 0, "fdd-bootstrap"));
}

TEST_CASE("gaussian stream is deterministic with sane moments") {
  rng::GaussianStream g1(12345), g2(12345);
  for (int i = 0; i < 1000; ++i) CHECK(g1.next() == g2.next());

  rng::GaussianStream g(999);
  const int n = 200000;
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.next();
    s += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  s /= n;
  s2 /= n;
  s4 /= n;
  CHECK(std::abs(s) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(s2 - 1.0) < 0.02);
  CHECK(std::abs(s4 - 3.0) < 0.1);
}

TEST_CASE("real FFT roundtrip and DC") {
  const int n = 256;
  fft::RealFft fft(n);
  rng::GaussianStream g(42);
  std::vector<double> x(n), back(n);
  for (auto& v : x) v = g.next();
  std::vector<std::complex<double>> spec(fft.spectrum_size());
  fft.forward(x, spec);

  double mean = 0.0;
  for (double v : x) mean += v;
  CHECK(std::abs(spec[0].real() - mean) < 1e-10);
  CHECK(spec[0].imag() == 0.0);

  fft.inverse(spec, back);
  for (int i = 0; i < n; ++i) CHECK(std::abs(back[i] - x[i]) < 1e-12);
}

TEST_CASE("forward transform matches the analytic DFT of a pure tone") {
  const int n = 64;
  fft::RealFft fft(n);
  std::vector<double> x(n);
  const int mode = 5;
  for (int i = 0; i < n; ++i) {
    x[i] = std::cos(2.0 * std::numbers::pi * mode * i / n);
  }
  std::vector<std::complex<double>> spec(fft.spectrum_size());
  fft.forward(x, spec);
  for (int j = 0; j < fft.spectrum_size(); ++j) {
    const double expected = j == mode ? n / 2.0 : 0.0;
    CHECK(std::abs(spec[j].real() - expected) < 1e-10);
    CHECK(std::abs(spec[j].imag()) < 1e-10);
  }
}
