#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsc/activation.hpp"
#include "nsc/linalg.hpp"
#include "nsc/rng.hpp"
#include "nsc/scalar_ops.hpp"

namespace nsc {

// Dense feedforward net.  Hidden layers share one activation; the output
// layer is affine.  Parameters live in one flat vector, per layer W (row
// major) followed by b, which is also the serialization and the seeded
// initialization draw order.
struct MlpNet {
  std::vector<int> arch;  // [in, hidden..., out]
  Activation act = Activation::Tanh;
  double d_knot = 0.1;
  Vec params;

  static MlpNet make(std::vector<int> arch, Activation act,
                     double d_knot = 0.1) {
    if (arch.size() < 2) throw std::invalid_argument("MlpNet: arch needs >= 2 dims");
    for (int d : arch)
      if (d < 1) throw std::invalid_argument("MlpNet: non-positive layer dim");
    if (act == Activation::SmoothedRelu && d_knot <= 0.0)
      throw std::invalid_argument("MlpNet: smoothed relu needs d_knot > 0");
    MlpNet n;
    n.arch = std::move(arch);
    n.act = act;
    n.d_knot = d_knot;
    n.params.assign(n.param_count(), 0.0);
    return n;
  }

  int input_dim() const { return arch.front(); }
  int output_dim() const { return arch.back(); }
  std::size_t layer_count() const { return arch.size() - 1; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < arch.size(); ++l)
      n += static_cast<std::size_t>(arch[l] + 1) * arch[l + 1];
    return n;
  }

  // Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] in storage order.
  void init_params(std::uint64_t seed) {
    RngStream rng(seed);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
      double bound = 1.0 / std::sqrt(static_cast<double>(arch[l]));
      std::size_t n = static_cast<std::size_t>(arch[l] + 1) * arch[l + 1];
      for (std::size_t k = 0; k < n; ++k)
        params[off + k] = rng.next_uniform(-bound, bound);
      off += n;
    }
  }

  std::size_t weight_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
      off += static_cast<std::size_t>(arch[l] + 1) * arch[l + 1];
    return off;
  }
  std::size_t bias_offset(std::size_t layer) const {
    return weight_offset(layer) +
           static_cast<std::size_t>(arch[layer]) * arch[layer + 1];
  }

  Mat weight_matrix(std::size_t layer) const {
    Mat w(arch[layer + 1], arch[layer]);
    std::size_t off = weight_offset(layer);
    for (std::size_t k = 0; k < w.a.size(); ++k) w.a[k] = params[off + k];
    return w;
  }

  // Forward pass with independent parameter scalar P and input scalar X.
  template <class X, class P>
  std::vector<promote_t<P, X>> forward_generic(std::span<const X> x,
                                               std::span<const P> p) const {
    using S = promote_t<P, X>;
    if (x.size() != static_cast<std::size_t>(arch.front()))
      throw std::invalid_argument("MlpNet: input size mismatch");
    if (p.size() != param_count())
      throw std::invalid_argument("MlpNet: parameter size mismatch");

    std::vector<S> cur, next;
    std::size_t off = 0;
    const std::size_t layers = layer_count();
    affine_layer<P, X>(p, off, arch[0], arch[1], x, cur);
    if (layers > 1) activate(cur);
    for (std::size_t l = 1; l < layers; ++l) {
      affine_layer<P, S>(p, off, arch[l], arch[l + 1],
                         std::span<const S>(cur), next);
      cur.swap(next);
      if (l + 1 < layers) activate(cur);
    }
    return cur;
  }

  Vec forward(std::span<const double> x) const {
    return forward_generic<double, double>(x, std::span<const double>(params));
  }

 private:
  template <class P, class XS, class S>
  void affine_layer(std::span<const P> p, std::size_t& off, int in_dim,
                    int out_dim, std::span<const XS> in,
                    std::vector<S>& out) const {
    out.clear();
    out.reserve(out_dim);
    for (int i = 0; i < out_dim; ++i) {
      const std::size_t row = off + static_cast<std::size_t>(i) * in_dim;
      S acc = mul_leaf(p[row], in[0]);
      for (int j = 1; j < in_dim; ++j) acc += mul_leaf(p[row + j], in[j]);
      out.push_back(add_bias(acc, p[off + static_cast<std::size_t>(in_dim) * out_dim + i]));
    }
    off += static_cast<std::size_t>(in_dim + 1) * out_dim;
  }

  template <class S>
  void activate(std::vector<S>& v) const {
    for (auto& s : v) s = apply_activation(act, d_knot, s);
  }
};

// Global Lipschitz upper bound: product of layer spectral norms times the
// (unit) activation constants.  Conservative for the true constant.
inline double lipschitz_upper_bound(const MlpNet& net, double tol = 1e-8,
                                    int max_iter = 10000) {
  double bound = 1.0;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    bound *= spectral_norm(net.weight_matrix(l), tol, max_iter);
    if (l + 1 < net.layer_count()) bound *= activation_lipschitz(net.act);
  }
  return bound;
}

}  // namespace nsc
