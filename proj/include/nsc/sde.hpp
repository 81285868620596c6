#pragma once

#include <algorithm>
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
#include "nsc/linalg.hpp"
#include "nsc/rng.hpp"

// Ito SDE dx = f(x)dt + [g(x)+u(x)]dB with f(0)=0, g(0)=0, integrated by
// Euler-Maruyama on a fixed grid.  Seeds fully determine paths: one counter
// stream per trajectory, Gaussian increments drawn channel-by-channel in
// step order via Box-Muller.

namespace nsc {

struct SdeSystem {
  int d = 1, r = 1;
  std::string label;
  std::function<Vec(const Vec&)> f;  // drift, R^d -> R^d
  std::function<Mat(const Vec&)> g;  // diffusion, R^d -> R^{d x r}
};

inline SdeSystem make_drift_only(int d, std::string label,
                                 std::function<Vec(const Vec&)> f) {
  SdeSystem s;
  s.d = d;
  s.r = 1;
  s.label = std::move(label);
  s.f = std::move(f);
  s.g = [d](const Vec&) { return Mat(static_cast<std::size_t>(d), 1); };
  return s;
}

constexpr double kDivergenceNorm = 1e8;

struct Trajectory {
  double dt = 0.0;
  int store_every = 1;            // stored grid spacing in steps
  Vec times;                      // stored grid, times[0] = 0
  std::vector<Vec> states;        // states[k] at times[k]
  Vec energy_acc;                 // cumulative control energy at times[k]
  std::optional<double> tau_eps;  // first grid crossing of ||x|| = eps,
                                  // linearly interpolated inside the step
  double energy = 0.0;            // integral of ||u||_F^2 up to tau_eps ^ T
  std::uint64_t seed = 0;
  bool diverged = false;
  int diverged_step = -1;  // full-resolution step index of the blow-up
};

inline Vec em_step(const SdeSystem& sys, const Controller* u, const Vec& x,
                   double dt, const Vec& dw) {
  if (dt <= 0.0) throw std::invalid_argument("em_step: dt must be positive");
  if (static_cast<int>(x.size()) != sys.d ||
      static_cast<int>(dw.size()) != sys.r)
    throw std::invalid_argument("em_step: shape mismatch");
  for (double xi : x)
    if (!std::isfinite(xi))
      throw std::runtime_error("em_step: non-finite state");

  Vec fx = sys.f(x);
  Mat gx = sys.g(x);
  Mat ux;
  if (u) ux = control_eval(*u, x);
  Vec next(x.size());
  for (int i = 0; i < sys.d; ++i) {
    double acc = x[i] + fx[i] * dt;
    for (int j = 0; j < sys.r; ++j) {
      double gij = gx(i, j) + (u ? ux(i, j) : 0.0);
      acc += gij * dw[j];
    }
    next[i] = acc;
  }
  return next;
}

// Diffusion actually driving the process: g(x) plus the controller term.
inline Mat controlled_diffusion(const SdeSystem& sys, const Controller* u,
                                const Vec& x) {
  Mat g = sys.g(x);
  if (u) {
    Mat ux = control_eval(*u, x);
    for (std::size_t i = 0; i < g.a.size(); ++i) g.a[i] += ux.a[i];
  }
  return g;
}

inline Trajectory simulate(const SdeSystem& sys, const Controller* u,
                           const Vec& x0, double dt, double T,
                           std::optional<double> eps, std::uint64_t seed,
                           int store_every = 1, bool stop_at_eps = false) {
  if (dt <= 0.0 || T <= 0.0)
    throw std::invalid_argument("simulate: dt and T must be positive");
  if (store_every < 1) throw std::invalid_argument("simulate: store_every");
  const auto steps = static_cast<long long>(std::llround(T / dt));
  if (steps < 1 || std::abs(static_cast<double>(steps) * dt - T) >
                       1e-9 * std::max(1.0, std::abs(T)))
    throw std::invalid_argument("simulate: dt must divide T");
  if (static_cast<int>(x0.size()) != sys.d)
    throw std::invalid_argument("simulate: x0 size mismatch");

  Trajectory tr;
  tr.dt = dt;
  tr.store_every = store_every;
  tr.seed = seed;
  tr.times.push_back(0.0);
  tr.states.push_back(x0);
  tr.energy_acc.push_back(0.0);

  RngStream rng(seed);
  Vec x = x0;
  double energy = 0.0;
  bool hit = false;
  if (eps && norm2(x0) <= *eps) {
    hit = true;
    tr.tau_eps = 0.0;
  }

  Vec dw(static_cast<std::size_t>(sys.r));
  const double sqdt = std::sqrt(dt);
  for (long long s = 0; s < steps && !(hit && stop_at_eps); ++s) {
    const double t = static_cast<double>(s) * dt;
    for (int j = 0; j < sys.r; ++j) dw[j] = rng.next_gaussian() * sqdt;

    Vec fx = sys.f(x);
    Mat gx = sys.g(x);
    Mat ux;
    double udens = 0.0;
    if (u) {
      ux = control_eval(*u, x);
      for (double v : ux.a) udens += v * v;
    }

    Vec xn(x.size());
    bool finite = true;
    for (int i = 0; i < sys.d; ++i) {
      double acc = x[i] + fx[i] * dt;
      for (int j = 0; j < sys.r; ++j)
        acc += (gx(i, j) + (u ? ux(i, j) : 0.0)) * dw[j];
      xn[i] = acc;
      if (!std::isfinite(acc)) finite = false;
    }

    // Left-endpoint energy; partial rectangle when the hit lands mid-step.
    if (!hit) {
      double de = udens * dt;
      if (eps && finite) {
        double n0 = norm2(x), n1 = norm2(xn);
        if (n1 <= *eps) {
          double denom = n0 - n1;
          double frac = denom > 0.0 ? (n0 - *eps) / denom : 1.0;
          frac = std::clamp(frac, 0.0, 1.0);
          tr.tau_eps = t + frac * dt;
          hit = true;
          de = udens * frac * dt;
        }
      }
      energy += de;
    }

    if (!finite || norm2(xn) > kDivergenceNorm) {
      tr.diverged = true;
      tr.diverged_step = static_cast<int>(s + 1);
      if (finite && ((s + 1) % store_every == 0 || s + 1 == steps)) {
        tr.times.push_back(t + dt);
        tr.states.push_back(xn);
        tr.energy_acc.push_back(energy);
      }
      break;
    }

    x = xn;
    const bool done_early = hit && stop_at_eps;
    if ((s + 1) % store_every == 0 || s + 1 == steps || done_early) {
      tr.times.push_back(t + dt);
      tr.states.push_back(x);
      tr.energy_acc.push_back(energy);
    }
    if (done_early) break;
  }
  tr.energy = energy;
  return tr;
}

// First time the stored path enters the closed eps-ball, interpolated within
// the crossing interval.  Grid-resolution version of Trajectory::tau_eps for
// after-the-fact thresholds.
inline std::optional<double> hitting_time(const Trajectory& tr, double eps) {
  if (tr.states.empty()) return std::nullopt;
  double prev = norm2(tr.states[0]);
  if (prev <= eps) return 0.0;
  for (std::size_t k = 1; k < tr.states.size(); ++k) {
    double cur = norm2(tr.states[k]);
    if (cur <= eps) {
      double denom = prev - cur;
      double frac = denom > 0.0 ? (prev - eps) / denom : 1.0;
      return tr.times[k - 1] + frac * (tr.times[k] - tr.times[k - 1]);
    }
    prev = cur;
  }
  return std::nullopt;
}

struct EnsembleResult {
  std::vector<Trajectory> trajectories;
  Vec times;      // longest stored grid among members
  Vec mean_norm;  // per stored index, over members with data there
  Vec sd_norm;
  int n_diverged = 0;

  double fraction_converged(double eps, double t_by) const {
    if (trajectories.empty()) return 0.0;
    int n = 0;
    for (const auto& tr : trajectories) {
      auto tau = hitting_time(tr, eps);
      if (tau && *tau <= t_by) ++n;
    }
    return static_cast<double>(n) / static_cast<double>(trajectories.size());
  }

  // Mean of the in-run tau_eps over trajectories that hit; n_hit reports how
  // many did.
  double mean_hitting_time(int* n_hit = nullptr) const {
    double s = 0.0;
    int n = 0;
    for (const auto& tr : trajectories)
      if (tr.tau_eps) {
        s += *tr.tau_eps;
        ++n;
      }
    if (n_hit) *n_hit = n;
    return n > 0 ? s / n : std::numeric_limits<double>::quiet_NaN();
  }

  double mean_energy() const {
    double s = 0.0;
    for (const auto& tr : trajectories) s += tr.energy;
    return trajectories.empty() ? 0.0 : s / trajectories.size();
  }

  // Mean distance from the origin at the end of the run (diverged members
  // count at the guard norm, which dominates any average).
  double mean_final_norm() const {
    double s = 0.0;
    for (const auto& tr : trajectories)
      s += tr.diverged ? kDivergenceNorm : norm2(tr.states.back());
    return trajectories.empty() ? 0.0 : s / trajectories.size();
  }

  // Mean first time the path gets within thresh of 0; members that never do
  // are excluded and counted out through n_reached.
  double mean_time_below(double thresh, int* n_reached = nullptr) const {
    double s = 0.0;
    int n = 0;
    for (const auto& tr : trajectories) {
      auto tau = hitting_time(tr, thresh);
      if (tau) {
        s += *tau;
        ++n;
      }
    }
    if (n_reached) *n_reached = n;
    return n > 0 ? s / n : std::numeric_limits<double>::quiet_NaN();
  }
};

inline EnsembleResult ensemble(
    const SdeSystem& sys, const Controller* u,
    const std::function<Vec(RngStream&)>& x0_sampler, int n, double dt,
    double T, std::optional<double> eps, std::uint64_t base_seed,
    int store_every = 1) {
  if (n < 1) throw std::invalid_argument("ensemble: n >= 1 required");
  EnsembleResult res;
  res.trajectories.reserve(static_cast<std::size_t>(n));

  RngStream x0_rng(derive_seed(base_seed, 0xA5F0));
  std::vector<Vec> starts;
  starts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) starts.push_back(x0_sampler(x0_rng));

  for (int i = 0; i < n; ++i) {
    res.trajectories.push_back(simulate(sys, u, starts[i], dt, T, eps,
                                        base_seed + static_cast<std::uint64_t>(i),
                                        store_every));
    if (res.trajectories.back().diverged) ++res.n_diverged;
  }

  std::size_t longest = 0;
  for (const auto& tr : res.trajectories)
    if (tr.times.size() > longest) {
      longest = tr.times.size();
      res.times = tr.times;
    }
  res.mean_norm.assign(longest, 0.0);
  res.sd_norm.assign(longest, 0.0);
  for (std::size_t k = 0; k < longest; ++k) {
    double s = 0.0, s2 = 0.0;
    int m = 0;
    for (const auto& tr : res.trajectories)
      if (k < tr.states.size()) {
        double v = norm2(tr.states[k]);
        s += v;
        s2 += v * v;
        ++m;
      }
    if (m > 0) {
      double mean = s / m;
      res.mean_norm[k] = mean;
      res.sd_norm[k] = std::sqrt(std::max(0.0, s2 / m - mean * mean));
    }
  }
  return res;
}

// Empirical strong order of the integrator on geometric Brownian motion
// dx = a x dt + b x dB, whose exact solution under the same increments is
// x0 exp((a - b^2/2) t + b B_t).  Returns the least-squares slope of
// log(mean |x_T - exact|) against log(dt).
inline double strong_order_probe(double a, double b, double x0, double T,
                                 std::span<const double> dt_list, int n_paths,
                                 std::uint64_t seed) {
  if (dt_list.size() < 2)
    throw std::invalid_argument("strong_order_probe: need at least two dt");
  if (n_paths < 1) throw std::invalid_argument("strong_order_probe: n_paths");

  std::vector<double> lx, ly;
  for (std::size_t lvl = 0; lvl < dt_list.size(); ++lvl) {
    const double dt = dt_list[lvl];
    const auto steps = static_cast<long long>(std::llround(T / dt));
    const double sqdt = std::sqrt(dt);
    double err_sum = 0.0;
    for (int p = 0; p < n_paths; ++p) {
      RngStream rng(derive_seed(seed, (static_cast<std::uint64_t>(lvl) << 32) ^
                                          static_cast<std::uint64_t>(p)));
      double x = x0, bt = 0.0;
      for (long long s = 0; s < steps; ++s) {
        double dw = rng.next_gaussian() * sqdt;
        x += a * x * dt + b * x * dw;
        bt += dw;
      }
      double exact =
          x0 * std::exp((a - 0.5 * b * b) * (static_cast<double>(steps) * dt) +
                        b * bt);
      err_sum += std::abs(x - exact);
    }
    lx.push_back(std::log(dt));
    ly.push_back(std::log(err_sum / n_paths));
  }

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= lx.size();
  my /= ly.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  return num / den;
}

}  // namespace nsc
