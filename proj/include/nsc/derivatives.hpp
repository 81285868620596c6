#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsc/linalg.hpp"
#include "nsc/tape.hpp"

// Exact derivative drivers for scalar fields f: R^d -> R given as callables
// usable with any supported scalar type S (f(std::span<const S>) -> S).
//
// input_gradient: one reverse sweep over a double tape.
// input_hessian:  d reverse sweeps over a Dual<double> tape, each seeded with
//                 one coordinate tangent; the adjoint tangents of the inputs
//                 form a Hessian row (forward over reverse).
// param_gradient: one reverse sweep over the whole loss graph, including any
//                 nested forward-mode passes built inside the loss.

namespace nsc {

template <class F>
Vec input_gradient(F&& f, std::span<const double> x,
                   double* value_out = nullptr) {
  Tape<double> tape;
  std::vector<Var<double>> xs;
  xs.reserve(x.size());
  for (double xi : x) xs.push_back(tape.leaf(xi));
  Var<double> root = f(std::span<const Var<double>>(xs));
  if (value_out) *value_out = value_of(root);
  tape.backward(root);
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = tape.adjoint(xs[i]);
  return g;
}

// Raw row-per-pass Hessian, before symmetrization; exact symmetry up to
// roundoff is a correctness check on the engine.
template <class F>
Mat input_hessian_raw(F&& f, std::span<const double> x) {
  const std::size_t d = x.size();
  Mat h(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    Tape<Dual<double>> tape;
    std::vector<Var<Dual<double>>> xs;
    xs.reserve(d);
    for (std::size_t j = 0; j < d; ++j)
      xs.push_back(tape.leaf(Dual<double>(x[j], i == j ? 1.0 : 0.0)));
    Var<Dual<double>> root = f(std::span<const Var<Dual<double>>>(xs));
    tape.backward(root);
    for (std::size_t j = 0; j < d; ++j) h(i, j) = tape.adjoint(xs[j]).d;
  }
  return h;
}

inline double max_asymmetry(const Mat& h) {
  double m = 0.0;
  for (std::size_t i = 0; i < h.rows; ++i)
    for (std::size_t j = 0; j < h.cols; ++j)
      m = std::max(m, std::abs(h(i, j) - h(j, i)));
  return m;
}

template <class F>
Mat input_hessian(F&& f, std::span<const double> x) {
  Mat h = input_hessian_raw(f, x);
  for (std::size_t i = 0; i < h.rows; ++i)
    for (std::size_t j = i + 1; j < h.cols; ++j) {
      double s = 0.5 * (h(i, j) + h(j, i));
      h(i, j) = s;
      h(j, i) = s;
    }
  return h;
}

// loss is called with parameter variables and must return the scalar root.
// A non-finite loss value is an error; gradients of garbage are garbage.
template <class F>
Vec param_gradient(F&& loss, std::span<const double> params0,
                   double* value_out = nullptr) {
  Tape<double> tape;
  std::vector<Var<double>> ps;
  ps.reserve(params0.size());
  for (double p : params0) ps.push_back(tape.leaf(p));
  Var<double> root = loss(std::span<const Var<double>>(ps));
  if (!std::isfinite(value_of(root)))
    throw std::runtime_error("param_gradient: non-finite loss value");
  if (value_out) *value_out = value_of(root);
  tape.backward(root);
  Vec g(params0.size());
  for (std::size_t i = 0; i < params0.size(); ++i)
    g[i] = tape.adjoint(ps[i]);
  return g;
}

}  // namespace nsc
