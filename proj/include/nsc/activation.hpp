#pragma once

#include <stdexcept>
#include <string>

#include "nsc/dual.hpp"
#include "nsc/tape.hpp"

namespace nsc {

// zero_like produces an additive-identity value living in the same context
// as its exemplar (same tape for reverse variables).
inline double zero_like(double) { return 0.0; }
template <class T>
Var<T> zero_like(const Var<T>& x) {
  return x.tape->constant(0.0);
}
template <class T>
Dual<T> zero_like(const Dual<T>& x) {
  return {zero_like(x.v), zero_like(x.d)};
}

enum class Activation { Identity, Tanh, SmoothedRelu };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::SmoothedRelu: return "smoothed_relu";
  }
  throw std::logic_error("bad activation");
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "tanh") return Activation::Tanh;
  if (s == "smoothed_relu") return Activation::SmoothedRelu;
  throw std::invalid_argument("unknown activation: " + s);
}

// C^2 convex rectifier with knot d > 0:
//   0                     x <= 0
//   (2dx^3 - x^4)/(2d^3)  0 < x <= d
//   x - d/2               x > d
// Pieces meet with matching value, slope and curvature; slope stays in [0,1].
template <class S>
S smoothed_relu(const S& x, double d) {
  double v = value_of(x);
  if (v <= 0.0) return zero_like(x);
  // x == d takes the linear branch: x - 0.5*d is exact there (same mantissa
  // shifted), so sigma(d) == d/2 bitwise; value, slope and curvature agree
  // on both sides of the knot either way.
  if (v < d) {
    S x2 = x * x;
    S x3 = x2 * x;
    S x4 = x2 * x2;
    return (x3 * (2.0 * d) - x4) * (1.0 / (2.0 * d * d * d));
  }
  return x - 0.5 * d;
}

// softplus(x) = log(1 + e^x), with tail branches for numeric range; used to
// keep ICNN inner weights positive.
template <class S>
S softplus(const S& x) {
  double v = value_of(x);
  if (v > 30.0) return x;  // log1p(e^x) == x to double precision
  if (v < -30.0) return exp(x);
  return log(1.0 + exp(x));
}

template <class S>
S apply_activation(Activation a, double d_knot, const S& x) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Tanh: return tanh(x);
    case Activation::SmoothedRelu: return smoothed_relu(x, d_knot);
  }
  throw std::logic_error("bad activation");
}

// All supported activations are 1-Lipschitz.
inline double activation_lipschitz(Activation) { return 1.0; }

}  // namespace nsc
