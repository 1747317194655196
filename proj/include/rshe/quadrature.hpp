#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>

#include "rshe/errors.hpp"

namespace rshe::quad {

// Adaptive quadrature helpers used by the kernel formulas and their oracles.
// Integrable endpoint singularities (|x|^{-g}, g < 1) go through tanh-sinh,
// which clusters nodes at the endpoints; smooth pieces and infinite tails go
// through adaptive Gauss-Kronrod.

inline constexpr double kDefaultTol = 1e-12;

template <typename F>
double finite(F&& f, double a, double b, double tol = kDefaultTol) {
  try {
    boost::math::quadrature::tanh_sinh<double> integrator;
    double error = 0.0, l1 = 0.0;
    double value = integrator.integrate(f, a, b, tol, &error, &l1);
    if (!std::isfinite(value)) {
      throw PrecisionError("tanh-sinh quadrature returned a non-finite value");
    }
    return value;
  } catch (const PrecisionError&) {
    throw;
  } catch (const std::exception& e) {
    throw PrecisionError(std::string("tanh-sinh quadrature failed: ") + e.what());
  }
}

template <typename F>
double to_infinity(F&& f, double a, double tol = kDefaultTol) {
  try {
    double error = 0.0, l1 = 0.0;
    double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, std::numeric_limits<double>::infinity(), 15, tol, &error, &l1);
    if (!std::isfinite(value) || (l1 > 0.0 && error > 1e-6 * l1 + 1e-14)) {
      throw PrecisionError("quadrature on [a, inf) did not converge");
    }
    return value;
  } catch (const PrecisionError&) {
    throw;
  } catch (const std::exception& e) {
    throw PrecisionError(std::string("quadrature on [a, inf) failed: ") + e.what());
  }
}

template <typename F>
double real_line(F&& f, double tol = kDefaultTol) {
  try {
    double error = 0.0, l1 = 0.0;
    double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, -std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity(), 15, tol, &error, &l1);
    if (!std::isfinite(value) || (l1 > 0.0 && error > 1e-6 * l1 + 1e-14)) {
      throw PrecisionError("quadrature on (-inf, inf) did not converge");
    }
    return value;
  } catch (const PrecisionError&) {
    throw;
  } catch (const std::exception& e) {
    throw PrecisionError(std::string("quadrature on (-inf, inf) failed: ") + e.what());
  }
}

// Integral over (0, inf) of an integrand with an integrable singularity at 0:
// split at 1, singular piece by tanh-sinh, tail by Gauss-Kronrod.
template <typename F>
double half_line_singular_origin(F&& f, double tol = kDefaultTol) {
  return finite(f, 0.0, 1.0, tol) + to_infinity(f, 1.0, tol);
}

}  // namespace rshe::quad
