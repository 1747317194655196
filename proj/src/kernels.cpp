#include "rshe/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rshe/quadrature.hpp"

namespace rshe::kernels {

namespace {

constexpr double kPi = std::numbers::pi;

double require_alpha_open(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("alpha must lie in (0,1)");
  }
  return alpha;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw std::domain_error(std::string(what) + " must be > 0");
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

double riesz_constant(double alpha) {
  require_alpha_open(alpha);
  return 2.0 * std::sin(alpha * kPi / 2.0) * std::tgamma(1.0 - alpha) /
         std::pow(2.0 * kPi, 1.0 - alpha);
}

KernelConstants KernelConstants::for_alpha(Alpha alpha) {
  const double a = alpha.value();
  if (a == 1.0) {
    throw std::domain_error("KernelConstants are defined for alpha in (0,1)");
  }
  KernelConstants k{a, riesz_constant(a), riesz_constant(1.0 - a)};
  if (!(std::isfinite(k.c_alpha) && k.c_alpha > 0.0) ||
      !(std::isfinite(k.c_one_minus_alpha) && k.c_one_minus_alpha > 0.0)) {
    throw std::domain_error("KernelConstants: non-finite constant");
  }
  return k;
}

double riesz_f(double alpha, double x) {
  require_alpha_open(alpha);
  if (x == 0.0) {
    throw std::domain_error("riesz_f: singular at x = 0");
  }
  return riesz_constant(1.0 - alpha) * std::pow(std::abs(x), -alpha);
}

double heat_kernel(double kappa, double t, double x) {
  require_positive(kappa, "kappa");
  require_positive(t, "t");
  const double v = kappa * t;
  return std::exp(-x * x / (2.0 * v)) / std::sqrt(2.0 * kPi * v);
}

double heat_kernel_ft(double kappa, double t, double xi) {
  require_positive(kappa, "kappa");
  require_positive(t, "t");
  return std::exp(-2.0 * kPi * kPi * kappa * t * xi * xi);
}

double negative_moment_integral(double gamma, double s) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::domain_error("negative_moment_integral: gamma must lie in [0,1)");
  }
  require_positive(s, "s");
  return std::pow(1.0 / (4.0 * kPi * kPi * s), (1.0 - gamma) / 2.0) *
         std::tgamma((1.0 - gamma) / 2.0);
}

double negative_moment_integral_quadrature(double gamma, double s) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::domain_error("negative_moment_integral: gamma must lie in [0,1)");
  }
  require_positive(s, "s");
  auto f = [gamma, s](double x) {
    return std::pow(x, -gamma) * std::exp(-s * 4.0 * kPi * kPi * x * x);
  };
  // Even integrand; the scale substitution keeps the split point at the
  // Gaussian width so the tail piece converges fast for any s.
  const double scale = 1.0 / (2.0 * kPi * std::sqrt(s));
  auto g = [f, scale](double u) { return f(u * scale) * scale; };
  return 2.0 * quad::half_line_singular_origin(g);
}

double f_conv_heat_zero(double alpha, double s, double kappa) {
  require_alpha_open(alpha);
  require_positive(s, "s");
  require_positive(kappa, "kappa");
  return riesz_constant(1.0 - alpha) * std::tgamma((1.0 - alpha) / 2.0) /
         std::sqrt(kPi) * std::pow(2.0 * kappa * s, -alpha / 2.0);
}

double f_conv_heat_zero_quadrature(double alpha, double s, double kappa) {
  require_alpha_open(alpha);
  require_positive(s, "s");
  require_positive(kappa, "kappa");
  const double c = riesz_constant(1.0 - alpha);
  const double width = std::sqrt(kappa * s);
  auto f = [alpha, s, kappa](double x) {
    return std::pow(x, -alpha) * heat_kernel(kappa, s, x);
  };
  auto g = [f, width](double u) { return f(u * width) * width; };
  return 2.0 * c * quad::half_line_singular_origin(g);
}

double spatial_l1_heat_diff(double t, double x, double kappa) {
  require_positive(t, "t");
  require_positive(kappa, "kappa");
  const double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  // p_t(y - ax) >= p_t(y) exactly for y >= ax/2; integrate the positive part
  // and double it. Segment boundaries follow both density peaks so neither
  // can hide between quadrature nodes when ax >> sd.
  auto diff = [t, ax, kappa](double y) {
    return heat_kernel(kappa, t, y - ax) - heat_kernel(kappa, t, y);
  };
  const double sd = std::sqrt(kappa * t);
  double cuts[] = {ax / 2.0, ax - 8.0 * sd, ax + 8.0 * sd, ax + 14.0 * sd};
  double value = 0.0;
  double lo = cuts[0];
  for (double hi : cuts) {
    if (hi > lo) {
      value += quad::finite(diff, lo, hi, 1e-13);
      lo = hi;
    }
  }
  return 2.0 * value;
}

double spatial_l1_heat_diff_closed(double t, double x, double kappa) {
  require_positive(t, "t");
  require_positive(kappa, "kappa");
  const double z = std::abs(x) / (2.0 * std::sqrt(kappa * t));
  return 2.0 * (2.0 * std_normal_cdf(z) - 1.0);
}

double temporal_l1_heat_diff(double t, double eps, double kappa) {
  require_positive(t, "t");
  require_positive(kappa, "kappa");
  if (eps < 0.0) throw std::domain_error("temporal_l1_heat_diff: eps must be >= 0");
  if (eps == 0.0) return 0.0;
  const double v1 = kappa * t;
  const double v2 = kappa * (t + eps);
  // Densities cross at +-ystar; the integrand has a kink there.
  const double ystar = std::sqrt(std::log(v2 / v1) * v1 * v2 / (v2 - v1));
  auto diff = [t, eps, kappa](double y) {
    return std::abs(heat_kernel(kappa, t + eps, y) - heat_kernel(kappa, t, y));
  };
  const double upper = ystar + 14.0 * std::sqrt(v2);
  return 2.0 * (quad::finite(diff, 0.0, ystar, 1e-13) +
                quad::finite(diff, ystar, upper, 1e-13));
}

double temporal_l1_heat_diff_closed(double t, double eps, double kappa) {
  require_positive(t, "t");
  require_positive(kappa, "kappa");
  if (eps < 0.0) throw std::domain_error("temporal_l1_heat_diff: eps must be >= 0");
  if (eps == 0.0) return 0.0;
  const double v1 = kappa * t;
  const double v2 = kappa * (t + eps);
  const double ystar = std::sqrt(std::log(v2 / v1) * v1 * v2 / (v2 - v1));
  return 4.0 * (std_normal_cdf(ystar / std::sqrt(v1)) -
                std_normal_cdf(ystar / std::sqrt(v2)));
}

TestFunction gaussian_test_function(double width, double amplitude, double shift) {
  if (!(width > 0.0)) throw std::domain_error("gaussian_test_function: width must be > 0");
  TestFunction phi;
  phi.value = [width, amplitude, shift](double x) {
    const double z = (x - shift) / width;
    return amplitude * std::exp(-z * z / 2.0);
  };
  phi.fourier_abs2 = [width, amplitude](double xi) {
    // |F phi|^2 = A^2 * 2 pi w^2 * exp(-4 pi^2 w^2 xi^2); shifts drop out.
    return amplitude * amplitude * 2.0 * kPi * width * width *
           std::exp(-4.0 * kPi * kPi * width * width * xi * xi);
  };
  phi.decay_scale = width;
  return phi;
}

QuadraticFormResult riesz_quadratic_form(const TestFunction& phi, Alpha alpha) {
  if (alpha.is_white()) {
    throw std::domain_error("riesz_quadratic_form: alpha must lie in (0,1)");
  }
  if (!phi.value) throw std::invalid_argument("riesz_quadratic_form: phi.value required");
  const double a = alpha.value();
  const double w = phi.decay_scale > 0.0 ? phi.decay_scale : 1.0;

  // lhs: substitute z = x - y. The correlation A(z) = int phi(y+z) phi(y) dy
  // is even in z for any real phi, so the double integral collapses to a
  // single singular integral against f_alpha.
  auto correlation = [&phi](double z) {
    return quad::real_line([&phi, z](double y) { return phi.value(y + z) * phi.value(y); },
                           1e-11);
  };
  const double c = riesz_constant(1.0 - a);
  auto lhs_integrand = [&correlation, a, w](double u) {
    const double z = u * w;
    return std::pow(z, -a) * correlation(z) * w;
  };
  const double lhs = 2.0 * c * quad::half_line_singular_origin(lhs_integrand, 1e-10);

  // rhs: int |xi|^{-(1-a)} |F phi|^2. Numeric transform when no analytic one
  // was supplied.
  std::function<double(double)> spectrum = phi.fourier_abs2;
  if (!spectrum) {
    spectrum = [&phi](double xi) {
      const double re = quad::real_line(
          [&phi, xi](double x) { return phi.value(x) * std::cos(2.0 * kPi * x * xi); }, 1e-10);
      const double im = quad::real_line(
          [&phi, xi](double x) { return phi.value(x) * std::sin(2.0 * kPi * x * xi); }, 1e-10);
      return re * re + im * im;
    };
  }
  const double xi_scale = 1.0 / (2.0 * kPi * w);
  auto rhs_integrand = [&spectrum, a, xi_scale](double u) {
    const double xi = u * xi_scale;
    return std::pow(xi, -(1.0 - a)) * spectrum(xi) * xi_scale;
  };
  const double rhs = 2.0 * quad::half_line_singular_origin(rhs_integrand, 1e-10);

  if (!std::isfinite(lhs) || !std::isfinite(rhs)) {
    throw PrecisionError("riesz_quadratic_form: quadrature failed; phi may not decay");
  }
  return {lhs, rhs};
}

}  // namespace rshe::kernels
