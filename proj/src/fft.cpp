#include "rshe/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace rshe::fft {

namespace {

std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("RealFft: size must be a power of two >= 2");
  }
  real_ = fftw_alloc_real(static_cast<std::size_t>(n));
  cplx_ = reinterpret_cast<std::complex<double>*>(
      fftw_alloc_complex(static_cast<std::size_t>(n) / 2 + 1));
  // FFTW_ESTIMATE plans are chosen without runtime measurement, so the same
  // size always executes the same kernels: outputs are bit-reproducible.
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c_1d(
      n, real_, reinterpret_cast<fftw_complex*>(cplx_), FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(
      n, reinterpret_cast<fftw_complex*>(cplx_), real_, FFTW_ESTIMATE);
  if (forward_plan_ == nullptr || inverse_plan_ == nullptr) {
    throw std::runtime_error("RealFft: plan creation failed");
  }
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(forward_plan_);
  fftw_destroy_plan(inverse_plan_);
  fftw_free(real_);
  fftw_free(cplx_);
}

void RealFft::forward(std::span<const double> in,
                      std::span<std::complex<double>> out) {
  if (static_cast<int>(in.size()) != n_ ||
      static_cast<int>(out.size()) != spectrum_size()) {
    throw std::invalid_argument("RealFft::forward: size mismatch");
  }
  std::memcpy(real_, in.data(), sizeof(double) * in.size());
  fftw_execute(forward_plan_);
  std::memcpy(out.data(), cplx_, sizeof(std::complex<double>) * out.size());
}

void RealFft::inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) {
  if (static_cast<int>(in.size()) != spectrum_size() ||
      static_cast<int>(out.size()) != n_) {
    throw std::invalid_argument("RealFft::inverse: size mismatch");
  }
  std::memcpy(cplx_, in.data(), sizeof(std::complex<double>) * in.size());
  fftw_execute(inverse_plan_);
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) out[i] = real_[i] * scale;
}

}  // namespace rshe::fft
