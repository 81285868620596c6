#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "nsc/dual.hpp"

// Reverse accumulation on an explicit tape.  The tape's value type T is
// normally double; instantiating it with Dual<double> runs the reverse sweep
// in dual arithmetic, which yields Hessian rows (forward-mode tangents nested
// over reverse accumulation).
//
// Nodes reference parents by index, parents always precede children, and a
// Var is just (tape, index).  Tapes are single-threaded scratch objects:
// callers own one per concurrent evaluation.

namespace nsc {

template <class T>
class Tape;

template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  std::int32_t idx = -1;

  const T& val() const { return tape->value(idx); }
};

template <class T>
double value_of(const Var<T>& x) {
  return value_of(x.val());
}

template <class T>
class Tape {
 public:
  Var<T> leaf(T v) {
    nodes_.push_back(Node{std::move(v), T{}, T{}, -1, -1});
    return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  Var<T> constant(double c) { return leaf(lift_const<T>(c)); }

  Var<T> unary(std::int32_t a, T val, T pa) {
    nodes_.push_back(Node{std::move(val), std::move(pa), T{}, a, -1});
    return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  Var<T> binary(std::int32_t a, std::int32_t b, T val, T pa, T pb) {
    nodes_.push_back(Node{std::move(val), std::move(pa), std::move(pb), a, b});
    return {this, static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  const T& value(std::int32_t i) const { return nodes_[i].val; }

  std::size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  // Seeds root with `seed` (defaults to 1) and sweeps once; adjoints of
  // earlier backward calls are discarded.
  void backward(const Var<T>& root) { backward(root, lift_const<T>(1.0)); }

  void backward(const Var<T>& root, T seed) {
    assert(root.tape == this);
    adj_.assign(nodes_.size(), T{});
    adj_[root.idx] = std::move(seed);
    for (std::int32_t i = root.idx; i >= 0; --i) {
      const Node& n = nodes_[i];
      if (n.a < 0) continue;
      adj_[n.a] += n.pa * adj_[i];
      if (n.b >= 0) adj_[n.b] += n.pb * adj_[i];
    }
  }

  const T& adjoint(const Var<T>& v) const {
    assert(v.tape == this);
    return adj_[v.idx];
  }

 private:
  struct Node {
    T val;
    T pa, pb;           // local partials w.r.t. parents
    std::int32_t a, b;  // parent indices, -1 if absent
  };

  std::vector<Node> nodes_;
  std::vector<T> adj_;
};

template <class T>
Var<T> operator-(const Var<T>& a) {
  return a.tape->unary(a.idx, -a.val(), lift_const<T>(-1.0));
}

template <class T>
Var<T> operator+(const Var<T>& a, const Var<T>& b) {
  assert(a.tape == b.tape);
  return a.tape->binary(a.idx, b.idx, a.val() + b.val(), lift_const<T>(1.0),
                        lift_const<T>(1.0));
}
template <class T>
Var<T> operator-(const Var<T>& a, const Var<T>& b) {
  assert(a.tape == b.tape);
  return a.tape->binary(a.idx, b.idx, a.val() - b.val(), lift_const<T>(1.0),
                        lift_const<T>(-1.0));
}
template <class T>
Var<T> operator*(const Var<T>& a, const Var<T>& b) {
  assert(a.tape == b.tape);
  return a.tape->binary(a.idx, b.idx, a.val() * b.val(), b.val(), a.val());
}
template <class T>
Var<T> operator/(const Var<T>& a, const Var<T>& b) {
  assert(a.tape == b.tape);
  T q = a.val() / b.val();
  return a.tape->binary(a.idx, b.idx, q, lift_const<T>(1.0) / b.val(),
                        -q / b.val());
}

template <class T>
Var<T> operator+(const Var<T>& a, double c) {
  return a.tape->unary(a.idx, a.val() + c, lift_const<T>(1.0));
}
template <class T>
Var<T> operator+(double c, const Var<T>& a) {
  return a + c;
}
template <class T>
Var<T> operator-(const Var<T>& a, double c) {
  return a + (-c);
}
template <class T>
Var<T> operator-(double c, const Var<T>& a) {
  return a.tape->unary(a.idx, c - a.val(), lift_const<T>(-1.0));
}
template <class T>
Var<T> operator*(const Var<T>& a, double c) {
  return a.tape->unary(a.idx, a.val() * c, lift_const<T>(c));
}
template <class T>
Var<T> operator*(double c, const Var<T>& a) {
  return a * c;
}
template <class T>
Var<T> operator/(const Var<T>& a, double c) {
  return a * (1.0 / c);
}
template <class T>
Var<T> operator/(double c, const Var<T>& a) {
  T q = lift_const<T>(c) / a.val();
  return a.tape->unary(a.idx, q, -q / a.val());
}

template <class T>
Var<T>& operator+=(Var<T>& a, const Var<T>& b) {
  a = a + b;
  return a;
}
template <class T>
Var<T>& operator-=(Var<T>& a, const Var<T>& b) {
  a = a - b;
  return a;
}

template <class T>
Var<T> tanh(const Var<T>& a) {
  T t = tanh(a.val());
  return a.tape->unary(a.idx, t, lift_const<T>(1.0) - t * t);
}
template <class T>
Var<T> exp(const Var<T>& a) {
  T e = exp(a.val());
  return a.tape->unary(a.idx, e, e);
}
template <class T>
Var<T> log(const Var<T>& a) {
  return a.tape->unary(a.idx, log(a.val()), lift_const<T>(1.0) / a.val());
}
template <class T>
Var<T> sqrt(const Var<T>& a) {
  T s = sqrt(a.val());
  return a.tape->unary(a.idx, s, lift_const<T>(0.5) / s);
}

}  // namespace nsc
