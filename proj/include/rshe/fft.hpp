#pragma once

#include <complex>
#include <span>
#include <vector>

struct fftw_plan_s;

namespace rshe::fft {

// Real 1-D transforms of a fixed power-of-two size, wrapping FFTW with
// FFTW_ESTIMATE plans so results are bit-reproducible across runs and thread
// counts. Each instance owns its aligned buffers and plans; instances are not
// thread-safe, give each worker thread its own. Plan creation serializes on
// the global FFTW planner lock internally.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int spectrum_size() const { return n_ / 2 + 1; }

  // Unnormalized r2c transform; out must have spectrum_size() entries.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // c2r transform scaled by 1/n, so inverse(forward(x)) == x up to round-off.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  int n_;
  double* real_;
  std::complex<double>* cplx_;
  fftw_plan_s* forward_plan_;
  fftw_plan_s* inverse_plan_;
};

// Per-thread scratch for row-wise spectral work.
struct Workspace {
  explicit Workspace(int n)
      : fft(n),
        spec_a(n / 2 + 1),
        spec_b(n / 2 + 1),
        row_a(n),
        row_b(n),
        sigma_scratch(n) {}

  RealFft fft;
  std::vector<std::complex<double>> spec_a, spec_b;
  std::vector<double> row_a, row_b;
  std::vector<double> sigma_scratch;
};

}  // namespace rshe::fft
