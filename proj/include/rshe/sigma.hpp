#pragma once

#include <span>
#include <string>

namespace rshe {

// Nonlinearity sigma with its exact Lipschitz constant. The registry is
// deliberately small: one degenerate case, one unbounded-Lipschitz case
// (parabolic Anderson) and one bounded-Lipschitz case.
struct SigmaSpec {
  enum class Kind { kConstant, kLinear, kTanh };

  Kind kind = Kind::kConstant;
  double lambda = 1.0;

  static SigmaSpec constant(double lambda) { return {Kind::kConstant, lambda}; }
  static SigmaSpec linear(double lambda) { return {Kind::kLinear, lambda}; }
  static SigmaSpec tanh(double lambda) { return {Kind::kTanh, lambda}; }

  double operator()(double u) const;
  void apply(std::span<const double> u, std::span<double> out) const;

  double lipschitz() const;
  std::string name() const;

  friend bool operator==(const SigmaSpec&, const SigmaSpec&) = default;
};

}  // namespace rshe
