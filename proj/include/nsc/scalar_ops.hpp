#pragma once

#include <utility>

#include "nsc/dual.hpp"
#include "nsc/tape.hpp"

// Mixed-scalar kernels.  Network code evaluates with two independent scalar
// types: P for parameters (double when frozen, Var<double> while training)
// and X for inputs (double, reverse variables, or nested duals carrying
// input-direction tangents).  mul_leaf/add_bias combine them into the
// promoted type without materializing zero-tangent parameter lifts, keeping
// tapes minimal.

namespace nsc {

inline double mul_leaf(double w, double x) { return w * x; }
template <class T>
Var<T> mul_leaf(double w, const Var<T>& x) {
  return x * w;
}
template <class T>
Var<T> mul_leaf(const Var<T>& w, double x) {
  return w * x;
}
template <class T>
Var<T> mul_leaf(const Var<T>& w, const Var<T>& x) {
  return w * x;
}
// Parameters carry no input tangent, so they scale each dual component.
template <class P, class U>
auto mul_leaf(const P& w, const Dual<U>& x)
    -> Dual<decltype(mul_leaf(w, x.v))> {
  return {mul_leaf(w, x.v), mul_leaf(w, x.d)};
}

template <class P, class X>
using promote_t = decltype(mul_leaf(std::declval<const P&>(),
                                    std::declval<const X&>()));

// P-typed constants from a prototype (Var constants land on the tape).
inline double lift_like(double, double c) { return c; }
template <class T>
Var<T> lift_like(const Var<T>& proto, double c) {
  return proto.tape->constant(c);
}

inline double add_bias(const double& acc, double b) { return acc + b; }
template <class T>
Var<T> add_bias(const Var<T>& acc, double b) {
  return acc + b;
}
template <class T>
Var<T> add_bias(const Var<T>& acc, const Var<T>& b) {
  return acc + b;
}
// Bias touches only the value component.
template <class U, class P>
Dual<U> add_bias(const Dual<U>& acc, const P& b) {
  return {add_bias(acc.v, b), acc.d};
}

}  // namespace nsc
