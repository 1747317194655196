#pragma once

#include <functional>

#include "rshe/alpha.hpp"

namespace rshe::kernels {

// Fourier convention, fixed once for the whole project: the forward transform
// uses the kernel e^{-2*pi*i*x*xi}. Under it the heat kernel p_t has
// transform exp(-2*pi^2*kappa*t*xi^2), so |p^_t|^2 carries the 4*pi^2
// exponent the kernel lemmas are written with, and the Riesz pair
// g_{1-alpha} <-> f_alpha holds with the constant c_{1-alpha} below.

// c_alpha = 2 sin(alpha*pi/2) Gamma(1-alpha) / (2*pi)^{1-alpha}, alpha in (0,1).
double riesz_constant(double alpha);

struct KernelConstants {
  double alpha;
  double c_alpha;
  double c_one_minus_alpha;

  static KernelConstants for_alpha(Alpha alpha);
};

// f_alpha(x) = c_{1-alpha} |x|^{-alpha}; diverges at x = 0.
double riesz_f(double alpha, double x);

double heat_kernel(double kappa, double t, double x);
double heat_kernel_ft(double kappa, double t, double xi);

// int_R |x|^{-gamma} e^{-s*4*pi^2*x^2} dx
//   = (1/(4*pi^2*s))^{(1-gamma)/2} * Gamma((1-gamma)/2),  gamma in [0,1), s > 0.
double negative_moment_integral(double gamma, double s);
double negative_moment_integral_quadrature(double gamma, double s);

// (f_alpha * p_s)(0) = c_{1-alpha} * Gamma((1-alpha)/2) / sqrt(pi)
//                        * (2*kappa*s)^{-alpha/2}.
// The kappa-dependence is (kappa*s)^{-alpha/2}; the source statement takes
// kappa = 1.
double f_conv_heat_zero(double alpha, double s, double kappa);
double f_conv_heat_zero_quadrature(double alpha, double s, double kappa);

// int_R |p_t(y-x) - p_t(y)| dy, computed by quadrature. Closed form for the
// shifted-Gaussian pair kept as an independent oracle.
double spatial_l1_heat_diff(double t, double x, double kappa);
double spatial_l1_heat_diff_closed(double t, double x, double kappa);

// int_R |p_{t+eps}(y) - p_t(y)| dy, computed by quadrature; the closed form
// goes through the density crossing point.
double temporal_l1_heat_diff(double t, double eps, double kappa);
double temporal_l1_heat_diff_closed(double t, double eps, double kappa);

// Rapidly decaying test function for the quadratic-form identity. When the
// analytic |F phi|^2 is not supplied the transform is computed by quadrature
// (much slower). decay_scale bounds the support used for truncation checks.
struct TestFunction {
  std::function<double(double)> value;
  std::function<double(double)> fourier_abs2;  // |F phi(xi)|^2; may be empty
  double decay_scale = 1.0;
};

TestFunction gaussian_test_function(double width, double amplitude = 1.0,
                                    double shift = 0.0);

struct QuadraticFormResult {
  double lhs;  // double integral of phi(x) f_alpha(x-y) phi(y)
  double rhs;  // int |xi|^{-(1-alpha)} |F phi(xi)|^2 d xi
};

QuadraticFormResult riesz_quadratic_form(const TestFunction& phi, Alpha alpha);

}  // namespace rshe::kernels
