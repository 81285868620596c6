#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsc/control.hpp"
#include "nsc/lyapunov.hpp"
#include "nsc/optimizer.hpp"
#include "nsc/rng.hpp"
#include "nsc/sde.hpp"

// Empirical stabilization losses and the descent loop.
//
// ES hinge per sample:  max(0, b LV(x)/V(x) - ||grad V^T g_u||^2 / V(x)^2)
// AS hinge per sample:  max(0, (a-2)||x^T g_u||^2 + ||x||^2 (c <x,f> + ||g_u||_F^2))
//
// Terms are built once with generic scalars: frozen (double) evaluation for
// reporting and hinge activity, reverse variables for parameter gradients.
// LV never materializes a Hessian during training; the trace is assembled
// from one second-order directional pass per diffusion column plus one
// first-order pass along the drift, all differentiable through both the
// Lyapunov parameters and the controller parameters inside the directions.

namespace nsc {

enum class LossKind { ES, AS };
enum class DriftFactor { Two, One };

inline std::string to_string(LossKind k) {
  return k == LossKind::ES ? "es" : "as";
}
inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "es") return LossKind::ES;
  if (s == "as") return LossKind::AS;
  throw std::invalid_argument("unknown loss kind: " + s);
}
inline std::string to_string(DriftFactor f) {
  return f == DriftFactor::Two ? "two" : "one";
}
inline DriftFactor drift_factor_from_string(const std::string& s) {
  if (s == "two") return DriftFactor::Two;
  if (s == "one") return DriftFactor::One;
  throw std::invalid_argument("unknown drift factor: " + s);
}

struct TrainConfig {
  LossKind loss = LossKind::ES;
  double b = 2.5;        // ES hinge factor, must stay > 2
  double alpha = 0.5;    // AS exponent, in (0,1)
  DriftFactor drift_factor = DriftFactor::Two;
  Vec box_lo, box_hi;    // sampling box
  int n_samples = 500;
  bool resample = true;
  int max_iters = 500;
  int zero_streak = 10;  // consecutive exact-zero batches to declare done
  std::uint64_t seed = 0;
  AdamConfig adam;
  double exclusion = -1.0;  // < 0: 1e-3 * min half-width
  int checkpoint_every = 0;

  double resolved_exclusion() const {
    if (exclusion >= 0.0) return exclusion;
    double hw = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < box_lo.size(); ++i)
      hw = std::min(hw, 0.5 * (box_hi[i] - box_lo[i]));
    return 1e-3 * hw;
  }

  void validate(int d) const {
    if (loss == LossKind::ES && b <= 2.0)
      throw std::invalid_argument("TrainConfig: b must be > 2");
    if (loss == LossKind::AS && (alpha <= 0.0 || alpha >= 1.0))
      throw std::invalid_argument("TrainConfig: alpha must be in (0,1)");
    if (box_lo.size() != static_cast<std::size_t>(d) ||
        box_hi.size() != static_cast<std::size_t>(d))
      throw std::invalid_argument("TrainConfig: box dimension mismatch");
    for (std::size_t i = 0; i < box_lo.size(); ++i)
      if (!(box_lo[i] < box_hi[i]))
        throw std::invalid_argument("TrainConfig: empty box");
    if (n_samples < 1 || max_iters < 1 || zero_streak < 1)
      throw std::invalid_argument("TrainConfig: counts must be positive");
  }
};

struct LossReport {
  int iteration = 0;
  double loss = 0.0;
  int active = 0;     // samples with a positive hinge
  double wall_ms = 0.0;
};

// N uniform draws from the box with ||x|| >= exclusion, coordinates in
// dimension order.  A rejection rate above 0.99 means the box is almost
// entirely inside the excluded ball: a configuration error.
inline std::vector<Vec> sample_domain(const Vec& lo, const Vec& hi, int n,
                                      std::uint64_t seed, double exclusion) {
  if (lo.size() != hi.size() || lo.empty())
    throw std::invalid_argument("sample_domain: box shape");
  double min_hw = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) throw std::invalid_argument("sample_domain: empty box");
    min_hw = std::min(min_hw, 0.5 * (hi[i] - lo[i]));
  }
  if (exclusion < 0.0 || exclusion >= min_hw)
    throw std::invalid_argument(
        "sample_domain: exclusion must sit inside the smallest half-width");

  RngStream rng(seed);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n));
  long long attempts = 0, accepted = 0;
  Vec x(lo.size());
  while (accepted < n) {
    ++attempts;
    for (std::size_t i = 0; i < lo.size(); ++i)
      x[i] = rng.next_uniform(lo[i], hi[i]);
    if (norm2(x) >= exclusion) {
      out.push_back(x);
      ++accepted;
    }
    if (attempts >= 1000 && accepted * 100 < attempts)
      throw std::invalid_argument("sample_domain: rejection rate above 0.99");
  }
  return out;
}

// Pre-hinge ES term at one sample.  P = double reports, P = Var<double>
// builds the gradient graph; V and u parameters may live on the same tape.
template <class P>
promote_t<P, double> es_sample_term(const LyapunovNet& v,
                                    std::span<const P> vp, const Controller& u,
                                    std::span<const P> up,
                                    const SdeSystem& sys,
                                    std::span<const double> x, double b) {
  using S = promote_t<P, double>;
  const int d = sys.d, r = sys.r;
  Vec xv(x.begin(), x.end());
  Vec fx = sys.f(xv);
  Mat gx = sys.g(xv);
  auto ue = control_entries<P>(u, x, up);

  std::vector<S> gu;
  gu.reserve(static_cast<std::size_t>(d) * r);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < r; ++j)
      gu.push_back(ue[static_cast<std::size_t>(i) * r + j] + gx(i, j));

  // V(x) and grad V . f in one forward-over-parameters pass
  std::vector<Dual<double>> xf;
  xf.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) xf.emplace_back(x[i], fx[i]);
  auto yf = lyap_value_generic<Dual<double>, P>(
      v, std::span<const Dual<double>>(xf), vp);
  S vx = yf.v;
  if (value_of(vx) <= 0.0)
    throw std::logic_error("es_sample_term: V(x) <= 0 off the origin");
  S lv = yf.d;

  // one second-order directional pass per diffusion column
  S num = zero_like(vx);
  using X2 = Dual<Dual<S>>;
  std::vector<X2> xs2;
  for (int k = 0; k < r; ++k) {
    xs2.clear();
    xs2.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      S vi = gu[static_cast<std::size_t>(i) * r + k];
      S xi = lift_like(vp[0], x[i]);
      S zi = lift_like(vp[0], 0.0);
      xs2.push_back(X2{Dual<S>{xi, vi}, Dual<S>{vi, zi}});
    }
    auto y2 = lyap_value_generic<X2, P>(v, std::span<const X2>(xs2), vp);
    lv += mul_leaf(0.5, y2.d.d);   // v^T H v contribution to the trace
    S gdotv = y2.v.d;              // grad V . v
    num += gdotv * gdotv;
  }

  return mul_leaf(b, lv) / vx - num / (vx * vx);
}

// Pre-hinge AS term at one sample; c = 2 under DriftFactor::Two (the
// certificate-bearing form), 1 under DriftFactor::One.
template <class P>
promote_t<P, double> as_sample_term(const Controller& u, std::span<const P> up,
                                    const SdeSystem& sys,
                                    std::span<const double> x, double alpha,
                                    DriftFactor factor) {
  using S = promote_t<P, double>;
  const int d = sys.d, r = sys.r;
  Vec xv(x.begin(), x.end());
  Vec fx = sys.f(xv);
  Mat gx = sys.g(xv);
  auto ue = control_entries<P>(u, x, up);

  std::vector<S> gu;
  gu.reserve(static_cast<std::size_t>(d) * r);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < r; ++j)
      gu.push_back(ue[static_cast<std::size_t>(i) * r + j] + gx(i, j));

  S fro = gu[0] * gu[0];
  for (std::size_t k = 1; k < gu.size(); ++k) fro += gu[k] * gu[k];

  S sum_xg = [&] {
    S first = mul_leaf(x[0], gu[0]);
    for (int i = 1; i < d; ++i)
      first += mul_leaf(x[i], gu[static_cast<std::size_t>(i) * r]);
    S acc = first * first;
    for (int j = 1; j < r; ++j) {
      S col = mul_leaf(x[0], gu[static_cast<std::size_t>(0) * r + j]);
      for (int i = 1; i < d; ++i)
        col += mul_leaf(x[i], gu[static_cast<std::size_t>(i) * r + j]);
      acc += col * col;
    }
    return acc;
  }();

  const double c = factor == DriftFactor::Two ? 2.0 : 1.0;
  const double xn2 = dot(x, x);
  const double xf = dot(x, std::span<const double>(fx));
  return mul_leaf(alpha - 2.0, sum_xg) +
         mul_leaf(xn2, add_bias(fro, c * xf));
}

inline double es_loss(const LyapunovNet& v, const Controller& u,
                      const SdeSystem& sys, const std::vector<Vec>& samples,
                      double b, int* active = nullptr) {
  if (b <= 2.0) throw std::invalid_argument("es_loss: b must be > 2");
  const Vec& vp = lyap_params(v);
  const Vec& up = u.params();
  double acc = 0.0;
  int n_active = 0;
  for (const auto& x : samples) {
    double t = es_sample_term<double>(v, vp, u, up, sys, x, b);
    if (t > 0.0) {
      acc += t;
      ++n_active;
    }
  }
  if (active) *active = n_active;
  return samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
}

inline double as_loss(const Controller& u, const SdeSystem& sys,
                      const std::vector<Vec>& samples, double alpha,
                      DriftFactor factor, int* active = nullptr) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("as_loss: alpha must be in (0,1)");
  const Vec& up = u.params();
  double acc = 0.0;
  int n_active = 0;
  for (const auto& x : samples) {
    double t = as_sample_term<double>(u, up, sys, x, alpha, factor);
    if (t > 0.0) {
      acc += t;
      ++n_active;
    }
  }
  if (active) *active = n_active;
  return samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
}

struct TrainResult {
  bool has_V = false;
  LyapunovNet V = QuadraticV{};
  Controller u;
  std::vector<LossReport> reports;
  bool converged = false;
  double best_loss = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

// Joint descent on all trainable parameters.  Per-sample tapes keep memory
// flat; inactive hinges skip the reverse sweep entirely.  Gradients are
// accumulated in sample order, so fixed seeds reproduce LossReport sequences
// exactly (wall_ms aside).
inline TrainResult train(
    const TrainConfig& cfg, const SdeSystem& sys, const LyapunovNet* v0,
    const Controller& u0,
    const std::function<void(int, const LyapunovNet*, const Controller&)>&
        checkpoint = {}) {
  cfg.validate(sys.d);
  if (cfg.loss == LossKind::ES && !v0)
    throw std::invalid_argument("train: ES needs a Lyapunov candidate");
  if (!u0.trainable())
    throw std::invalid_argument("train: controller has no trainable parameters");

  TrainResult res;
  res.has_V = cfg.loss == LossKind::ES;
  if (res.has_V) res.V = *v0;
  res.u = u0;

  Vec* vp = res.has_V ? &lyap_params(res.V) : nullptr;
  Vec& up = res.u.net.params;
  AdamState adam_v(vp ? vp->size() : 0);
  AdamState adam_u(up.size());

  const double excl = cfg.resolved_exclusion();
  std::vector<Vec> fixed;
  if (!cfg.resample)
    fixed = sample_domain(cfg.box_lo, cfg.box_hi, cfg.n_samples, cfg.seed, excl);

  Vec best_v = vp ? *vp : Vec{};
  Vec best_u = up;
  int streak = 0;
  const double inv_n = 1.0 / static_cast<double>(cfg.n_samples);

  for (int it = 0; it < cfg.max_iters; ++it) {
    auto t0 = std::chrono::steady_clock::now();
    const auto& samples =
        cfg.resample ? sample_domain(cfg.box_lo, cfg.box_hi, cfg.n_samples,
                                     derive_seed(cfg.seed, it), excl)
                     : fixed;

    double loss = 0.0;
    int active = 0;
    Vec gv(vp ? vp->size() : 0, 0.0);
    Vec gu(up.size(), 0.0);

    for (const auto& x : samples) {
      double t = cfg.loss == LossKind::ES
                     ? es_sample_term<double>(res.V, *vp, res.u, up, sys, x,
                                              cfg.b)
                     : as_sample_term<double>(res.u, up, sys, x, cfg.alpha,
                                              cfg.drift_factor);
      if (!(t > 0.0)) {
        if (!std::isfinite(t))
          throw std::runtime_error("train: non-finite loss term at iteration " +
                                   std::to_string(it));
        continue;
      }
      loss += t;
      ++active;

      Tape<double> tape;
      std::vector<Var<double>> vvars, uvars;
      if (vp) {
        vvars.reserve(vp->size());
        for (double p : *vp) vvars.push_back(tape.leaf(p));
      }
      uvars.reserve(up.size());
      for (double p : up) uvars.push_back(tape.leaf(p));

      Var<double> term =
          cfg.loss == LossKind::ES
              ? es_sample_term<Var<double>>(
                    res.V, std::span<const Var<double>>(vvars), res.u,
                    std::span<const Var<double>>(uvars), sys, x, cfg.b)
              : as_sample_term<Var<double>>(
                    res.u, std::span<const Var<double>>(uvars), sys, x,
                    cfg.alpha, cfg.drift_factor);
      tape.backward(term);
      for (std::size_t i = 0; i < gv.size(); ++i)
        gv[i] += tape.adjoint(vvars[i]);
      for (std::size_t i = 0; i < gu.size(); ++i)
        gu[i] += tape.adjoint(uvars[i]);
    }

    loss *= inv_n;
    for (auto& g : gv) g *= inv_n;
    for (auto& g : gu) g *= inv_n;
    if (!std::isfinite(loss))
      throw std::runtime_error("train: non-finite loss at iteration " +
                               std::to_string(it));

    if (loss < res.best_loss) {
      res.best_loss = loss;
      if (vp) best_v = *vp;
      best_u = up;
    }

    if (vp) adam_v.step(*vp, gv, cfg.adam);
    adam_u.step(up, gu, cfg.adam);

    auto t1 = std::chrono::steady_clock::now();
    res.reports.push_back(
        {it, loss,
         active,
         std::chrono::duration<double, std::milli>(t1 - t0).count()});
    res.iterations = it + 1;

    if (cfg.checkpoint_every > 0 && checkpoint &&
        (it + 1) % cfg.checkpoint_every == 0)
      checkpoint(it, vp ? &res.V : nullptr, res.u);

    streak = loss == 0.0 ? streak + 1 : 0;
    if (streak >= cfg.zero_streak) {
      res.converged = true;
      break;
    }
  }

  if (!res.converged) {
    if (vp) *vp = best_v;
    up = best_u;
  }
  return res;
}

}  // namespace nsc
