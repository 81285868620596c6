#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "nsc/linalg.hpp"
#include "nsc/mlp.hpp"
#include "nsc/scalar_ops.hpp"

// Diffusion controllers u: R^d -> R^{d x r} with u(0) = 0 by construction.
// Four shapes: a shifted network NN(x) - NN(0), a diagonal form
// diag(x) NN(x) with r = d, a block form where channel j owns the d/r
// consecutive state rows j*(d/r).. of the shifted network output, and the
// linear baseline k x (one column).  Optional fixed linear wrappers: in_map
// premultiplies the state before the core map, out_rowmap recombines core
// rows; both fix 0, so u(0) = 0 is preserved.  A pin mask zeroes selected
// output rows.

namespace nsc {

enum class ControllerKind { NeuralShift, NeuralDiag, NeuralBlock, Linear };

inline std::string to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::NeuralShift: return "neural_shift";
    case ControllerKind::NeuralDiag: return "neural_diag";
    case ControllerKind::NeuralBlock: return "neural_block";
    case ControllerKind::Linear: return "linear";
  }
  throw std::logic_error("bad controller kind");
}

inline ControllerKind controller_kind_from_string(const std::string& s) {
  if (s == "neural_shift") return ControllerKind::NeuralShift;
  if (s == "neural_diag") return ControllerKind::NeuralDiag;
  if (s == "neural_block") return ControllerKind::NeuralBlock;
  if (s == "linear") return ControllerKind::Linear;
  throw std::invalid_argument("unknown controller kind: " + s);
}

struct Controller {
  ControllerKind kind = ControllerKind::Linear;
  int d = 1;  // state dimension = output rows
  int r = 1;  // diffusion channels = output columns
  MlpNet net;             // neural kinds only
  Vec lin_k{0.0};         // Linear: {k} scalar or d*d row-major matrix
  bool lin_scalar = true;
  std::vector<std::uint8_t> pin_mask;  // size d; empty = all rows active
  Mat in_map;      // optional (net_in x d) premap; empty = identity
  Mat out_rowmap;  // optional (d x core_rows) row recombiner; empty = identity

  static Controller linear(double k, int d_) {
    Controller c;
    c.kind = ControllerKind::Linear;
    c.d = d_;
    c.r = 1;
    c.lin_k = {k};
    c.lin_scalar = true;
    return c;
  }

  static Controller linear_matrix(const Mat& k_mat) {
    if (k_mat.rows != k_mat.cols || k_mat.rows == 0)
      throw std::invalid_argument("linear_matrix: square matrix required");
    Controller c;
    c.kind = ControllerKind::Linear;
    c.d = static_cast<int>(k_mat.rows);
    c.r = 1;
    c.lin_k = k_mat.a;
    c.lin_scalar = false;
    return c;
  }

  static Controller neural_shift(MlpNet n, int d_, int r_) {
    if (r_ < 1 || n.output_dim() % r_ != 0)
      throw std::invalid_argument("neural_shift: output dim not divisible by r");
    Controller c;
    c.kind = ControllerKind::NeuralShift;
    c.d = d_;
    c.r = r_;
    c.net = std::move(n);
    if (c.net.input_dim() != d_ || c.net.output_dim() / r_ != d_)
      throw std::invalid_argument(
          "neural_shift: net shape mismatch (set in_map/out_rowmap for "
          "non-identity wrappers before use)");
    return c;
  }

  // Wrapped variant: net consumes in_map*x and its rows are recombined by
  // out_rowmap.  Shape checks happen at evaluation.
  static Controller neural_shift_wrapped(MlpNet n, int d_, int r_, Mat in,
                                         Mat out) {
    if (r_ < 1 || n.output_dim() % r_ != 0)
      throw std::invalid_argument("neural_shift: output dim not divisible by r");
    Controller c;
    c.kind = ControllerKind::NeuralShift;
    c.d = d_;
    c.r = r_;
    c.net = std::move(n);
    c.in_map = std::move(in);
    c.out_rowmap = std::move(out);
    return c;
  }

  static Controller neural_diag(MlpNet n, int d_) {
    if (n.input_dim() != d_ || n.output_dim() != d_)
      throw std::invalid_argument("neural_diag: net must map R^d -> R^d");
    Controller c;
    c.kind = ControllerKind::NeuralDiag;
    c.d = d_;
    c.r = d_;
    c.net = std::move(n);
    return c;
  }

  // Channel j drives the block of d/r consecutive state rows starting at
  // j*(d/r); the off-block entries of u are zero.
  static Controller neural_block(MlpNet n, int d_, int r_, Mat in = {}) {
    if (r_ < 1 || d_ % r_ != 0)
      throw std::invalid_argument("neural_block: r must divide d");
    if (n.output_dim() != d_)
      throw std::invalid_argument("neural_block: net output dim must be d");
    if (in.rows == 0 && n.input_dim() != d_)
      throw std::invalid_argument("neural_block: net input dim must be d");
    Controller c;
    c.kind = ControllerKind::NeuralBlock;
    c.d = d_;
    c.r = r_;
    c.net = std::move(n);
    c.in_map = std::move(in);
    return c;
  }

  bool trainable() const { return kind != ControllerKind::Linear; }
  Vec& params() { return net.params; }
  const Vec& params() const { return net.params; }

  int core_rows() const {
    switch (kind) {
      case ControllerKind::Linear: return d;
      case ControllerKind::NeuralDiag: return net.output_dim();
      case ControllerKind::NeuralShift: return net.output_dim() / r;
      case ControllerKind::NeuralBlock: return d;
    }
    throw std::logic_error("bad controller kind");
  }
};

// Entries of u(x) as a flat row-major (d x r) array in the promoted scalar.
// P = double for frozen evaluation, Var<double> during training (neural
// kinds only; the linear baseline has no trainable parameters).
template <class P>
std::vector<promote_t<P, double>> control_entries(const Controller& u,
                                                  std::span<const double> x,
                                                  std::span<const P> params) {
  using S = promote_t<P, double>;
  if (x.size() != static_cast<std::size_t>(u.d))
    throw std::invalid_argument("control_entries: state size mismatch");

  Vec w;
  if (u.in_map.rows > 0) {
    if (u.in_map.cols != static_cast<std::size_t>(u.d))
      throw std::invalid_argument("control_entries: in_map shape");
    w = matvec(u.in_map, x);
  } else {
    w.assign(x.begin(), x.end());
  }

  std::vector<S> core;
  int crows = 0;
  switch (u.kind) {
    case ControllerKind::Linear: {
      if constexpr (!std::is_same_v<P, double>) {
        throw std::logic_error("control_entries: linear kind is not trainable");
      } else {
        crows = static_cast<int>(w.size());
        core.resize(w.size());
        if (u.lin_scalar) {
          for (std::size_t i = 0; i < w.size(); ++i) core[i] = u.lin_k[0] * w[i];
        } else {
          if (u.lin_k.size() != w.size() * w.size())
            throw std::invalid_argument("control_entries: k matrix shape");
          for (std::size_t i = 0; i < w.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j)
              acc += u.lin_k[i * w.size() + j] * w[j];
            core[i] = acc;
          }
        }
      }
      break;
    }
    case ControllerKind::NeuralShift: {
      auto out = u.net.forward_generic<double, P>(w, params);
      Vec zero(w.size(), 0.0);
      auto out0 = u.net.forward_generic<double, P>(
          std::span<const double>(zero), params);
      crows = u.net.output_dim() / u.r;
      core.reserve(out.size());
      for (std::size_t i = 0; i < out.size(); ++i)
        core.push_back(out[i] - out0[i]);
      break;
    }
    case ControllerKind::NeuralDiag: {
      auto out = u.net.forward_generic<double, P>(w, params);
      const int m = static_cast<int>(out.size());
      if (m != u.r)
        throw std::invalid_argument("control_entries: diag needs r = d");
      crows = m;
      core.assign(static_cast<std::size_t>(m) * m, zero_like(out[0]));
      for (int i = 0; i < m; ++i)
        core[static_cast<std::size_t>(i) * m + i] = mul_leaf(w[i], out[i]);
      break;
    }
    case ControllerKind::NeuralBlock: {
      auto out = u.net.forward_generic<double, P>(w, params);
      if (static_cast<int>(out.size()) != u.d || u.d % u.r != 0)
        throw std::invalid_argument("control_entries: block shape mismatch");
      Vec zero(w.size(), 0.0);
      auto out0 = u.net.forward_generic<double, P>(
          std::span<const double>(zero), params);
      const int blk = u.d / u.r;
      crows = u.d;
      core.assign(static_cast<std::size_t>(u.d) * u.r, zero_like(out[0]));
      for (int j = 0; j < u.r; ++j)
        for (int t = 0; t < blk; ++t) {
          const int row = j * blk + t;
          core[static_cast<std::size_t>(row) * u.r + j] = out[row] - out0[row];
        }
      break;
    }
  }

  std::vector<S> rows;
  if (u.out_rowmap.rows > 0) {
    if (u.out_rowmap.rows != static_cast<std::size_t>(u.d) ||
        u.out_rowmap.cols != static_cast<std::size_t>(crows))
      throw std::invalid_argument("control_entries: out_rowmap shape");
    rows.reserve(static_cast<std::size_t>(u.d) * u.r);
    for (int i = 0; i < u.d; ++i)
      for (int j = 0; j < u.r; ++j) {
        S acc = zero_like(core[0]);
        for (int c = 0; c < crows; ++c)
          acc += mul_leaf(u.out_rowmap(i, c),
                          core[static_cast<std::size_t>(c) * u.r + j]);
        rows.push_back(acc);
      }
  } else {
    if (crows != u.d)
      throw std::invalid_argument("control_entries: core rows != d");
    rows = std::move(core);
  }

  if (!u.pin_mask.empty()) {
    if (u.pin_mask.size() != static_cast<std::size_t>(u.d))
      throw std::invalid_argument("control_entries: pin mask size");
    for (int i = 0; i < u.d; ++i)
      if (!u.pin_mask[i])
        for (int j = 0; j < u.r; ++j)
          rows[static_cast<std::size_t>(i) * u.r + j] = zero_like(rows[0]);
  }
  return rows;
}

inline Mat control_eval(const Controller& u, std::span<const double> x) {
  auto e = control_entries<double>(u, x, std::span<const double>(u.params()));
  Mat m(u.d, u.r);
  m.a = std::move(e);
  return m;
}

// Squared Frobenius norm of u(x); integrand of the energy cost.
inline double control_energy_density(const Controller& u,
                                     std::span<const double> x) {
  auto e = control_entries<double>(u, x, std::span<const double>(u.params()));
  double s = 0.0;
  for (double v : e) s += v * v;
  return s;
}

// Conservative Lipschitz upper bound for u as a map R^d -> R^{d x r}.
// NeuralDiag depends on the state twice, so its bound needs the domain
// radius: |diag(w)NN(w)|' <= |NN| + |w|*L_NN <= (|NN(0)| + 2 R L_NN).
inline double controller_lipschitz_upper(const Controller& u,
                                         double box_radius = 0.0) {
  double pre = u.in_map.rows > 0 ? spectral_norm(u.in_map) : 1.0;
  double post = u.out_rowmap.rows > 0 ? spectral_norm(u.out_rowmap) : 1.0;
  switch (u.kind) {
    case ControllerKind::Linear: {
      if (u.lin_scalar) return std::abs(u.lin_k[0]) * pre * post;
      Mat k_mat(static_cast<std::size_t>(u.d), static_cast<std::size_t>(u.d));
      k_mat.a = u.lin_k;
      return spectral_norm(k_mat) * pre * post;
    }
    case ControllerKind::NeuralShift:
    case ControllerKind::NeuralBlock:
      // entries are shifted net outputs (rearranged for the block kind, which
      // leaves the Frobenius norm of differences unchanged)
      return lipschitz_upper_bound(u.net) * pre * post;
    case ControllerKind::NeuralDiag: {
      if (box_radius <= 0.0)
        throw std::invalid_argument(
            "controller_lipschitz_upper: diag kind needs box_radius");
      double l_nn = lipschitz_upper_bound(u.net);
      Vec zero(static_cast<std::size_t>(u.net.input_dim()), 0.0);
      double nn0 = norm2(u.net.forward(zero));
      double rw = box_radius * pre;
      return (nn0 + 2.0 * rw * l_nn) * post;
    }
  }
  throw std::logic_error("bad controller kind");
}

}  // namespace nsc
