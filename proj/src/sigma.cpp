#include "rshe/sigma.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace rshe {

double SigmaSpec::operator()(double u) const {
  switch (kind) {
    case Kind::kConstant:
      return lambda;
    case Kind::kLinear:
      return lambda * u;
    case Kind::kTanh:
      return lambda * std::tanh(u);
  }
  std::abort();
}

void SigmaSpec::apply(std::span<const double> u, std::span<double> out) const {
  if (u.size() != out.size()) throw std::invalid_argument("SigmaSpec::apply: size mismatch");
  switch (kind) {
    case Kind::kConstant:
      for (std::size_t i = 0; i < u.size(); ++i) out[i] = lambda;
      return;
    case Kind::kLinear:
      for (std::size_t i = 0; i < u.size(); ++i) out[i] = lambda * u[i];
      return;
    case Kind::kTanh:
      for (std::size_t i = 0; i < u.size(); ++i) out[i] = lambda * std::tanh(u[i]);
      return;
  }
  std::abort();
}

double SigmaSpec::lipschitz() const {
  switch (kind) {
    case Kind::kConstant:
      return 0.0;
    case Kind::kLinear:
    case Kind::kTanh:
      return std::abs(lambda);
  }
  std::abort();
}

std::string SigmaSpec::name() const {
  switch (kind) {
    case Kind::kConstant:
      return "constant";
    case Kind::kLinear:
      return "linear";
    case Kind::kTanh:
      return "tanh";
  }
  std::abort();
}

}  // namespace rshe
