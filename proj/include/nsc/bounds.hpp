#pragma once
// Closed-form convergence-time and control-energy bounds for stabilized SDEs,
// plus sample-based estimators for the constants those formulas consume.
// Estimated constants are sample extrema (reported with their witness point),
// so downstream bounds are empirical estimates, not certificates.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <nsc/control.hpp>
#include <nsc/linalg.hpp>
#include <nsc/lyapunov.hpp>
#include <nsc/sde.hpp>
#include <nsc/train.hpp>

namespace nsc {

struct BoundResult {
  double t_eps = 0.0;
  double energy_bound = 0.0;
};

// k^2 x0^2 / a * (exp(a*T) - 1) with a = k^2 + 2L, continuous through a = 0.
// Nonnegative for every sign of a; exactly 0 iff k = 0 or T = 0.
inline double energy_envelope(double k, double L, double x0_norm,
                              double t_eps) {
  const double scale = k * k * x0_norm * x0_norm;
  if (scale == 0.0 || t_eps == 0.0) return 0.0;
  const double a = k * k + 2.0 * L;
  if (a == 0.0) return scale * t_eps;
  return scale * std::expm1(a * t_eps) / a;
}

namespace detail {
inline void check_eps_window(double eps, double x0_norm, const char* who) {
  if (!(eps > 0.0) || !(eps <= x0_norm))
    throw std::domain_error(std::string(who) + ": need 0 < eps <= |x0|");
}
}  // namespace detail

// Linear gain u = kx against a drift with one-sided bound <x,f(x)> <= L|x|^2.
inline BoundResult thm3_bounds(double L, double k, double x0_norm,
                               double eps) {
  detail::check_eps_window(eps, x0_norm, "thm3_bounds");
  if (!(k * k > 2.0 * L))
    throw std::domain_error("thm3_bounds: need k^2 > 2L");
  const double t = 2.0 * std::log(x0_norm / eps) / (k * k - 2.0 * L);
  return {t, energy_envelope(k, L, x0_norm, t)};
}

// Exponential-rate certificate constants: c1|x|^p <= V, LV <= c2 V,
// |grad(V)^T g_u|^2 >= c3 V^2 with c3 > 2 c2.
inline BoundResult thm4_bounds(double c1, double c2, double c3, double p,
                               double v_x0, double L, double k_u,
                               double x0_norm, double eps) {
  detail::check_eps_window(eps, x0_norm, "thm4_bounds");
  if (!(c1 > 0.0) || !(p > 0.0))
    throw std::domain_error("thm4_bounds: need c1 > 0 and p > 0");
  if (!(c3 - 2.0 * c2 > 0.0))
    throw std::domain_error("thm4_bounds: need c3 - 2*c2 > 0");
  if (!(v_x0 > 0.0)) throw std::domain_error("thm4_bounds: need V(x0) > 0");
  const double lg = std::log(v_x0 / (c1 * std::pow(eps, p)));
  // V(x0) already below the c1*eps^p level set: nothing left to wait for.
  const double t = std::max(0.0, 2.0 * lg / (c3 - 2.0 * c2));
  return {t, energy_envelope(k_u, L, x0_norm, t)};
}

// Asymptotic-rate certificate: the alpha-homogeneous drift margin delta_eps.
inline BoundResult thm5_bounds(double alpha, double delta_eps, double L,
                               double k_u, double x0_norm, double eps) {
  detail::check_eps_window(eps, x0_norm, "thm5_bounds");
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::domain_error("thm5_bounds: need alpha in (0,1)");
  if (!(delta_eps > 0.0))
    throw std::domain_error("thm5_bounds: need delta_eps > 0");
  const double t = 2.0 *
                   (std::pow(x0_norm, alpha) - std::pow(eps, alpha)) /
                   (delta_eps * alpha);
  return {t, energy_envelope(k_u, L, x0_norm, t)};
}

namespace detail {
inline double default_exclusion(const Vec& lo, const Vec& hi) {
  double hw = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lo.size(); ++i)
    hw = std::min(hw, 0.5 * (hi[i] - lo[i]));
  return 1e-3 * hw;
}
}  // namespace detail

struct DriftBoundEstimate {
  double L = 0.0;
  Vec argmax;  // sample attaining the max, kept for audit
};

// Empirical max of <x,f(x)>/|x|^2 (a lower bound of the true sup).
inline DriftBoundEstimate estimate_L(const SdeSystem& sys, const Vec& lo,
                                     const Vec& hi, int n_samples,
                                     std::uint64_t seed,
                                     double exclusion = -1.0) {
  if (exclusion < 0.0) exclusion = detail::default_exclusion(lo, hi);
  auto xs = sample_domain(lo, hi, n_samples, seed, exclusion);
  double best = -std::numeric_limits<double>::infinity();
  Vec arg;
  for (const auto& x : xs) {
    const double val = dot(x, sys.f(x)) / dot(x, x);
    if (val > best) {
      best = val;
      arg = x;
    }
  }
  return {best, arg};
}

struct EsConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double p = 2.0;
  bool valid = false;  // c3 - 2*c2 > 0
  Vec argmax_c2, argmin_c3;
};

// c1, p come from the V construction (eps |x|^2 floor); c2, c3 are sample
// extrema of the generator and diffusion-sensitivity ratios.
inline EsConstants estimate_es_constants(const LyapunovNet& V,
                                         const SdeSystem& sys,
                                         const Controller* u, const Vec& lo,
                                         const Vec& hi, int n_samples,
                                         std::uint64_t seed,
                                         double exclusion = -1.0) {
  if (exclusion < 0.0) exclusion = detail::default_exclusion(lo, hi);
  auto xs = sample_domain(lo, hi, n_samples, seed, exclusion);
  EsConstants out;
  out.c1 = lyap_epsilon(V);
  out.p = 2.0;
  out.c2 = -std::numeric_limits<double>::infinity();
  out.c3 = std::numeric_limits<double>::infinity();
  for (const auto& x : xs) {
    const double vx = lyap_value(V, x);
    auto [grad, hess] = lyap_grad_hess(V, x);
    const Vec fx = sys.f(x);
    const Mat gu = controlled_diffusion(sys, u, x);
    const double r2 = generator_from_parts(grad, hess, fx, gu) / vx;
    double num = 0.0;
    for (std::size_t k = 0; k < gu.cols; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < gu.rows; ++i) s += grad[i] * gu(i, k);
      num += s * s;
    }
    const double r3 = num / (vx * vx);
    if (r2 > out.c2) {
      out.c2 = r2;
      out.argmax_c2 = x;
    }
    if (r3 < out.c3) {
      out.c3 = r3;
      out.argmin_c3 = x;
    }
  }
  // c3 = 0 means no diffusion sensitivity anywhere: the exponential-rate
  // certificate is vacuous even if 2*c2 happens to be negative.
  out.valid = out.c3 > 0.0 && out.c3 - 2.0 * out.c2 > 0.0;
  return out;
}

struct DeltaEpsEstimate {
  double delta = 0.0;
  bool valid = false;  // delta > 0
  Vec argmax;
};

// delta_eps = -max over Omega intersected with {|x| >= eps} of
//   |x|^(alpha-4) * (|x|^2 (2<x,f> + |g_u|_F^2) - (2-alpha)|x^T g_u|^2),
// the same integrand the asymptotic hinge controls (drift factor 2).
inline DeltaEpsEstimate estimate_delta_eps(const SdeSystem& sys,
                                           const Controller* u, double alpha,
                                           double eps, const Vec& lo,
                                           const Vec& hi, int n_samples,
                                           std::uint64_t seed) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("estimate_delta_eps: alpha in (0,1)");
  if (!(eps > 0.0)) throw std::invalid_argument("estimate_delta_eps: eps");
  auto xs = sample_domain(lo, hi, n_samples, seed, eps);
  double worst = -std::numeric_limits<double>::infinity();
  Vec arg;
  for (const auto& x : xs) {
    const double n2 = dot(x, x);
    const Vec fx = sys.f(x);
    const Mat gu = controlled_diffusion(sys, u, x);
    double fro = 0.0;
    for (double v : gu.a) fro += v * v;
    double xg2 = 0.0;
    for (std::size_t j = 0; j < gu.cols; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < gu.rows; ++i) s += x[i] * gu(i, j);
      xg2 += s * s;
    }
    const double expr = std::pow(n2, 0.5 * (alpha - 4.0)) *
                        (n2 * (2.0 * dot(x, fx) + fro) - (2.0 - alpha) * xg2);
    if (expr > worst) {
      worst = expr;
      arg = x;
    }
  }
  DeltaEpsEstimate out;
  out.delta = -worst;
  out.valid = out.delta > 0.0;
  out.argmax = arg;
  return out;
}

struct BoundValidation {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
  int n_censored = 0;  // paths that never hit eps within the horizon
  double horizon = 0.0;
  bool pass = false;
  bool trivial = false;  // |x0| <= eps, nothing to measure
};

// Monte Carlo check of E[tau_eps] <= bound: censored paths contribute the
// horizon (10x the bound), which only pushes the mean up, i.e. against PASS.
inline BoundValidation validate_bound(const SdeSystem& sys,
                                      const Controller* u, double bound_t_eps,
                                      const Vec& x0, double eps, int n,
                                      double dt, std::uint64_t base_seed) {
  if (!(bound_t_eps >= 0.0) || !(eps > 0.0) || n < 1 || dt <= 0.0)
    throw std::invalid_argument("validate_bound: bad inputs");
  BoundValidation r;
  r.n = n;
  if (norm2(x0) <= eps) {
    r.trivial = true;
    r.pass = true;
    return r;
  }
  const auto steps =
      static_cast<long long>(std::ceil(std::max(10.0 * bound_t_eps, dt) / dt));
  const double T = static_cast<double>(steps) * dt;
  r.horizon = T;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    auto tr = simulate(sys, u, x0, dt, T, eps, base_seed + i,
                       std::numeric_limits<int>::max(), /*stop_at_eps=*/true);
    double tau = T;
    if (tr.tau_eps)
      tau = *tr.tau_eps;
    else
      ++r.n_censored;
    sum += tau;
    sumsq += tau * tau;
  }
  r.mean = sum / n;
  const double var = std::max(0.0, (sumsq - n * r.mean * r.mean) / (n - 1));
  r.std_error = std::sqrt(var / n);
  r.pass = r.mean <= bound_t_eps + 2.0 * r.std_error;
  return r;
}

// Empirical pairwise slope max |u(x)-u(y)|_F / |x-y|; a lower bound of the
// true Lipschitz constant, which in turn is below the analytic upper bound.
inline double estimate_lipschitz(const Controller& u, const Vec& lo,
                                 const Vec& hi, int n_samples,
                                 std::uint64_t seed) {
  auto xs = sample_domain(lo, hi, n_samples, seed, 0.0);
  std::vector<Mat> us;
  us.reserve(xs.size());
  for (const auto& x : xs) us.push_back(control_eval(u, x));
  double best = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      double dx2 = 0.0;
      for (std::size_t t = 0; t < xs[i].size(); ++t) {
        const double d = xs[i][t] - xs[j][t];
        dx2 += d * d;
      }
      if (dx2 < 1e-24) continue;
      double du2 = 0.0;
      for (std::size_t t = 0; t < us[i].a.size(); ++t) {
        const double d = us[i].a[t] - us[j].a[t];
        du2 += d * d;
      }
      best = std::max(best, std::sqrt(du2 / dx2));
    }
  return best;
}

}  // namespace nsc
