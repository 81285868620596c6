#pragma once

#include <cmath>

// Forward-mode dual numbers, nestable (Dual<Dual<double>> gives second
// directional derivatives).  The inner type T may itself be a reverse-mode
// variable, which is how parameter gradients flow through input-derivative
// subexpressions: the dual arithmetic decomposes into T operations and the
// tape sees every one of them.

namespace nsc {

inline double value_of(double x) { return x; }

template <class T>
struct Dual {
  T v{};  // value component
  T d{};  // tangent component

  Dual() = default;
  Dual(T value, T tangent) : v(std::move(value)), d(std::move(tangent)) {}
};

template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

// lift_const<T>(c): embed a double as a constant of forward type T.
// Only forward types (double, nested Dual over double) are liftable; reverse
// variables need a tape and use their own constant mechanism.
template <class T>
struct ConstLift {
  static T lift(double c) { return T(c); }
};
template <class U>
struct ConstLift<Dual<U>> {
  static Dual<U> lift(double c) {
    return Dual<U>(ConstLift<U>::lift(c), ConstLift<U>::lift(0.0));
  }
};
template <class T>
T lift_const(double c) {
  return ConstLift<T>::lift(c);
}

template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return {-a.v, -a.d};
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.v + b.v, a.d + b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.v - b.v, a.d - b.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.v * b.d + a.d * b.v};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  auto q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}

template <class T>
Dual<T> operator+(const Dual<T>& a, double c) {
  return {a.v + c, a.d};
}
template <class T>
Dual<T> operator+(double c, const Dual<T>& a) {
  return a + c;
}
template <class T>
Dual<T> operator-(const Dual<T>& a, double c) {
  return {a.v - c, a.d};
}
template <class T>
Dual<T> operator-(double c, const Dual<T>& a) {
  return {c - a.v, -a.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, double c) {
  return {a.v * c, a.d * c};
}
template <class T>
Dual<T> operator*(double c, const Dual<T>& a) {
  return a * c;
}
template <class T>
Dual<T> operator/(const Dual<T>& a, double c) {
  return {a.v / c, a.d / c};
}
template <class T>
Dual<T> operator/(double c, const Dual<T>& a) {
  auto q = c / a.v;
  return {q, -(q / a.v) * a.d};
}

template <class T>
Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) {
  a = a + b;
  return a;
}
template <class T>
Dual<T>& operator-=(Dual<T>& a, const Dual<T>& b) {
  a = a - b;
  return a;
}
template <class T>
Dual<T>& operator*=(Dual<T>& a, const Dual<T>& b) {
  a = a * b;
  return a;
}

using std::exp;
using std::log;
using std::sqrt;
using std::tanh;

template <class T>
Dual<T> tanh(const Dual<T>& a) {
  auto t = tanh(a.v);
  return {t, (1.0 - t * t) * a.d};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  auto e = exp(a.v);
  return {e, e * a.d};
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  return {log(a.v), a.d / a.v};
}
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  auto s = sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}

}  // namespace nsc
