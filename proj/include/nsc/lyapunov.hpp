#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nsc/activation.hpp"
#include "nsc/control.hpp"
#include "nsc/derivatives.hpp"
#include "nsc/linalg.hpp"
#include "nsc/mlp.hpp"
#include "nsc/scalar_ops.hpp"
#include "nsc/sde.hpp"

// Candidate Lyapunov functions.  Both shapes guarantee V(0) = 0 and
// V(x) >= eps ||x||^2 by construction, so positive definiteness never has to
// be learned.

namespace nsc {

enum class InnerMap { Identity, Tanh };

inline std::string to_string(InnerMap m) {
  switch (m) {
    case InnerMap::Identity: return "identity";
    case InnerMap::Tanh: return "tanh";
  }
  throw std::logic_error("bad inner map");
}

inline InnerMap inner_map_from_string(const std::string& s) {
  if (s == "identity") return InnerMap::Identity;
  if (s == "tanh") return InnerMap::Tanh;
  throw std::invalid_argument("unknown inner map: " + s);
}

// Input-convex network core g plus the positive wrapper
//   V(x) = sigma_out(g(F(x)) - g(F(0))) + eps ||x||^2.
// Stage 0 is W0 x + b0; stage i >= 1 is U_i z_i + W_i x + b_i with
// U_i = softplus(raw) > 0.  Every stage output passes through the smoothed
// rectifier, so g is convex and nondecreasing along the z chain.  Parameter
// layout per stage: [U_raw] W b, row-major, which is also the init draw and
// serialization order.
struct IcnnV {
  std::vector<int> arch;  // [d, h1, ..., 1]
  double d_knot = 0.1;
  double epsilon = 1e-3;
  Activation outer_act = Activation::SmoothedRelu;
  InnerMap inner = InnerMap::Identity;
  Vec params;

  static IcnnV make(std::vector<int> arch, double epsilon = 1e-3,
                    double d_knot = 0.1) {
    if (arch.size() < 2 || arch.back() != 1)
      throw std::invalid_argument("IcnnV: arch must end in a scalar output");
    for (int d : arch)
      if (d < 1) throw std::invalid_argument("IcnnV: non-positive layer dim");
    if (epsilon <= 0.0) throw std::invalid_argument("IcnnV: epsilon > 0");
    if (d_knot <= 0.0) throw std::invalid_argument("IcnnV: d_knot > 0");
    IcnnV v;
    v.arch = std::move(arch);
    v.epsilon = epsilon;
    v.d_knot = d_knot;
    v.params.assign(v.param_count(), 0.0);
    return v;
  }

  int input_dim() const { return arch.front(); }
  std::size_t stage_count() const { return arch.size() - 1; }

  std::size_t stage_size(std::size_t i) const {
    const std::size_t out = arch[i + 1];
    const std::size_t skip = static_cast<std::size_t>(arch.front()) * out;
    const std::size_t u = i == 0 ? 0 : static_cast<std::size_t>(arch[i]) * out;
    return u + skip + out;
  }

  std::size_t stage_offset(std::size_t i) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < i; ++l) off += stage_size(l);
    return off;
  }

  std::size_t param_count() const { return stage_offset(stage_count()); }

  // Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] per tensor in storage order;
  // U_raw uses the z fan-in, W and b the input fan-in.
  void init_params(std::uint64_t seed) {
    RngStream rng(seed);
    const double d_bound = 1.0 / std::sqrt(static_cast<double>(arch.front()));
    std::size_t off = 0;
    for (std::size_t i = 0; i < stage_count(); ++i) {
      const std::size_t out = arch[i + 1];
      if (i > 0) {
        double ub = 1.0 / std::sqrt(static_cast<double>(arch[i]));
        for (std::size_t k = 0; k < static_cast<std::size_t>(arch[i]) * out; ++k)
          params[off++] = rng.next_uniform(-ub, ub);
      }
      for (std::size_t k = 0;
           k < static_cast<std::size_t>(arch.front()) * out + out; ++k)
        params[off++] = rng.next_uniform(-d_bound, d_bound);
    }
  }

  // Convex core g(F(x)) with generic scalars.
  template <class X, class P>
  promote_t<P, X> core_value(std::span<const X> x, std::span<const P> p) const {
    using S = promote_t<P, X>;
    if (x.size() != static_cast<std::size_t>(arch.front()))
      throw std::invalid_argument("IcnnV: input size mismatch");
    if (p.size() != param_count())
      throw std::invalid_argument("IcnnV: parameter size mismatch");

    std::vector<X> fx(x.begin(), x.end());
    if (inner == InnerMap::Tanh)
      for (auto& v : fx) v = tanh(v);

    const int d = arch.front();
    std::vector<S> z, next;
    std::size_t off = 0;
    for (std::size_t i = 0; i < stage_count(); ++i) {
      const int out = arch[i + 1];
      next.clear();
      next.reserve(out);
      const std::size_t u_off = off;
      const std::size_t w_off =
          off + (i == 0 ? 0 : static_cast<std::size_t>(arch[i]) * out);
      const std::size_t b_off = w_off + static_cast<std::size_t>(d) * out;
      for (int c = 0; c < out; ++c) {
        S acc = mul_leaf(p[w_off + static_cast<std::size_t>(c) * d], fx[0]);
        for (int j = 1; j < d; ++j)
          acc += mul_leaf(p[w_off + static_cast<std::size_t>(c) * d + j], fx[j]);
        if (i > 0) {
          const std::size_t row = u_off + static_cast<std::size_t>(c) * arch[i];
          for (int m = 0; m < arch[i]; ++m)
            acc += mul_leaf(softplus(p[row + m]), z[m]);
        }
        acc = add_bias(acc, p[b_off + c]);
        next.push_back(smoothed_relu(acc, d_knot));
      }
      z.swap(next);
      off += stage_size(i);
    }
    return z[0];
  }

  template <class X, class P>
  promote_t<P, X> value_generic(std::span<const X> x,
                                std::span<const P> p) const {
    using S = promote_t<P, X>;
    S gx = core_value<X, P>(x, p);
    Vec zero(x.size(), 0.0);
    auto g0 = core_value<double, P>(std::span<const double>(zero), p);
    S shifted = add_bias(gx, -g0);
    S out = apply_activation(outer_act, d_knot, shifted);
    const auto one = lift_like(p[0], 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      S xi = mul_leaf(one, x[i]);
      out += mul_leaf(epsilon, xi * xi);
    }
    return out;
  }
};

// V(x) = x^T [eps I + A(x)^T A(x)] x with A(x) the m x d reshape of a Tanh
// net's output; equals eps||x||^2 + ||A(x) x||^2.
struct QuadraticV {
  MlpNet net;  // d inputs, m*d outputs
  int m = 1;
  double epsilon = 1e-3;

  static QuadraticV make(int d, std::vector<int> hidden, int m = 0,
                         double epsilon = 1e-3) {
    if (d < 1) throw std::invalid_argument("QuadraticV: d >= 1");
    if (m == 0) m = d;
    if (m < 1) throw std::invalid_argument("QuadraticV: m >= 1");
    if (epsilon <= 0.0) throw std::invalid_argument("QuadraticV: epsilon > 0");
    std::vector<int> arch;
    arch.push_back(d);
    for (int h : hidden) arch.push_back(h);
    arch.push_back(m * d);
    QuadraticV v;
    v.net = MlpNet::make(std::move(arch), Activation::Tanh);
    v.m = m;
    v.epsilon = epsilon;
    return v;
  }

  int input_dim() const { return net.input_dim(); }

  template <class X, class P>
  promote_t<P, X> value_generic(std::span<const X> x,
                                std::span<const P> p) const {
    using S = promote_t<P, X>;
    const int d = net.input_dim();
    if (x.size() != static_cast<std::size_t>(d))
      throw std::invalid_argument("QuadraticV: input size mismatch");
    auto a = net.forward_generic<X, P>(x, p);  // m*d entries, row-major

    const auto one = lift_like(p[0], 1.0);
    std::vector<S> xs;
    xs.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      xs.push_back(mul_leaf(one, x[i]));

    S out = mul_leaf(epsilon, xs[0] * xs[0]);
    for (int i = 1; i < d; ++i) out += mul_leaf(epsilon, xs[i] * xs[i]);
    for (int row = 0; row < m; ++row) {
      S acc = a[static_cast<std::size_t>(row) * d] * xs[0];
      for (int j = 1; j < d; ++j)
        acc += a[static_cast<std::size_t>(row) * d + j] * xs[j];
      out += acc * acc;
    }
    return out;
  }
};

using LyapunovNet = std::variant<IcnnV, QuadraticV>;

inline std::string lyapunov_kind(const LyapunovNet& v) {
  return std::holds_alternative<IcnnV>(v) ? "icnn" : "quadratic";
}

inline int lyap_dim(const LyapunovNet& v) {
  return std::visit([](const auto& l) { return l.input_dim(); }, v);
}

inline double lyap_epsilon(const LyapunovNet& v) {
  return std::visit([](const auto& l) { return l.epsilon; }, v);
}

inline Vec& lyap_params(LyapunovNet& v) {
  if (auto* i = std::get_if<IcnnV>(&v)) return i->params;
  return std::get<QuadraticV>(v).net.params;
}

inline const Vec& lyap_params(const LyapunovNet& v) {
  if (auto* i = std::get_if<IcnnV>(&v)) return i->params;
  return std::get<QuadraticV>(v).net.params;
}

template <class X, class P>
promote_t<P, X> lyap_value_generic(const LyapunovNet& v, std::span<const X> x,
                                   std::span<const P> p) {
  return std::visit(
      [&](const auto& l) { return l.template value_generic<X, P>(x, p); }, v);
}

inline double lyap_value(const LyapunovNet& v, std::span<const double> x) {
  return lyap_value_generic<double, double>(
      v, x, std::span<const double>(lyap_params(v)));
}

inline Vec lyap_grad(const LyapunovNet& v, std::span<const double> x,
                     double* value_out = nullptr) {
  const Vec& p = lyap_params(v);
  auto field = [&](const auto& xs) {
    using XT = std::decay_t<decltype(xs[0])>;
    return lyap_value_generic<XT, double>(v, std::span<const XT>(xs),
                                          std::span<const double>(p));
  };
  Vec xv(x.begin(), x.end());
  return input_gradient(field, xv, value_out);
}

inline Mat lyap_hess_raw(const LyapunovNet& v, std::span<const double> x) {
  const Vec& p = lyap_params(v);
  auto field = [&](const auto& xs) {
    using XT = std::decay_t<decltype(xs[0])>;
    return lyap_value_generic<XT, double>(v, std::span<const XT>(xs),
                                          std::span<const double>(p));
  };
  Vec xv(x.begin(), x.end());
  return input_hessian_raw(field, xv);
}

inline std::pair<Vec, Mat> lyap_grad_hess(const LyapunovNet& v,
                                          std::span<const double> x) {
  const Vec& p = lyap_params(v);
  auto field = [&](const auto& xs) {
    using XT = std::decay_t<decltype(xs[0])>;
    return lyap_value_generic<XT, double>(v, std::span<const XT>(xs),
                                          std::span<const double>(p));
  };
  Vec xv(x.begin(), x.end());
  return {input_gradient(field, xv), input_hessian(field, xv)};
}

// L V = grad . f + 1/2 tr(g_u g_u^T H) with the trace expanded over columns:
// sum_k g_u(:,k)^T H g_u(:,k).
inline double generator_from_parts(const Vec& grad, const Mat& hess,
                                   const Vec& fx, const Mat& gu) {
  double acc = dot(grad, fx);
  for (std::size_t k = 0; k < gu.cols; ++k) {
    for (std::size_t i = 0; i < gu.rows; ++i) {
      double hrow = 0.0;
      for (std::size_t j = 0; j < gu.rows; ++j)
        hrow += hess(i, j) * gu(j, k);
      acc += 0.5 * gu(i, k) * hrow;
    }
  }
  return acc;
}

inline double generator_LV(const LyapunovNet& v, const SdeSystem& sys,
                           const Controller* u, std::span<const double> x) {
  auto [grad, hess] = lyap_grad_hess(v, x);
  Vec xv(x.begin(), x.end());
  Vec fx = sys.f(xv);
  Mat gu = sys.g(xv);
  if (u) {
    Mat ux = control_eval(*u, x);
    if (ux.rows != gu.rows || ux.cols != gu.cols)
      throw std::invalid_argument("generator_LV: controller shape mismatch");
    for (std::size_t k = 0; k < gu.a.size(); ++k) gu.a[k] += ux.a[k];
  }
  return generator_from_parts(grad, hess, fx, gu);
}

}  // namespace nsc
