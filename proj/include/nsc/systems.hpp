#pragma once
// Benchmark system catalogue.  Every system is exported in coordinates where
// the stabilization target is the zero solution: f(0) = 0 and g(0) = 0 hold
// exactly in floating point, not just in the limit.

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nsc/linalg.hpp>
#include <nsc/sde.hpp>

namespace nsc {

// dx = x log|x| dt: the zero solution is attracting from |x| < 1 yet neither
// exponentially nor globally asymptotically stable without control.  f(0) is
// the continuous extension 0; elsewhere the product is evaluated directly.
inline SdeSystem make_prop1() {
  return make_drift_only(1, "prop1", [](const Vec& x) {
    const double v = x[0];
    return Vec{v == 0.0 ? 0.0 : v * std::log(std::abs(v))};
  });
}

// Planar system with one multiplicative channel on the second coordinate.
inline SdeSystem make_example1() {
  SdeSystem s;
  s.d = 2;
  s.r = 1;
  s.label = "example1";
  s.f = [](const Vec& x) { return Vec{x[1], -2.0 * x[0] - x[1]}; };
  s.g = [](const Vec& x) {
    Mat g(2, 1);
    g(1, 0) = x[0];
    return g;
  };
  return s;
}

// Damped oscillator state (y, y') whose stiffness and damping carry
// multiplicative noise.  Default realization folds both perturbations into a
// single Brownian channel, g = (0, -(zeta1 x1 + zeta2 x2))^T; the two-channel
// variant keeps them independent.
inline SdeSystem make_harmonic(double w2 = 1.0, double beta = 0.5,
                               double zeta1 = -3.0, double zeta2 = 2.15,
                               bool two_channel = false) {
  if (!(beta > 0.0))
    throw std::invalid_argument("make_harmonic: need beta > 0");
  SdeSystem s;
  s.d = 2;
  s.r = two_channel ? 2 : 1;
  s.label = "harmonic";
  s.f = [w2, beta](const Vec& x) {
    return Vec{x[1], -w2 * x[0] - 2.0 * beta * x[1]};
  };
  if (two_channel) {
    s.g = [zeta1, zeta2](const Vec& x) {
      Mat g(2, 2);
      g(1, 0) = -zeta1 * x[0];
      g(1, 1) = -zeta2 * x[1];
      return g;
    };
  } else {
    s.g = [zeta1, zeta2](const Vec& x) {
      Mat g(2, 1);
      g(1, 0) = -(zeta1 * x[0] + zeta2 * x[1]);
      return g;
    };
  }
  return s;
}

// dx = x log(1+x) dt on the domain x > -1.
inline SdeSystem make_log1p() {
  return make_drift_only(1, "log1p", [](const Vec& x) {
    if (x[0] <= -1.0)
      throw std::domain_error("log1p system: state left the domain x > -1");
    return Vec{x[0] * std::log1p(x[0])};
  });
}

// Stuart-Landau oscillator in polar form: rho' = (beta + mu rho^2) rho,
// theta' = gamma.  With beta < 0 < mu the circle rho* = sqrt(-beta/mu) is an
// unstable limit cycle; the exported system is the 1-D radial deviation
// e = rho - rho*, written in the factored form mu rho e (rho + rho*) so that
// e = 0 is an equilibrium exactly.
struct StuartSingle {
  SdeSystem sys;  // d = r = 1, state e
  double beta = -25.0, gamma = 1.0, mu = 1.0;
  double rho_star = 5.0;

  Vec to_plane(double e, double theta) const {
    const double rho = e + rho_star;
    return {rho * std::cos(theta), rho * std::sin(theta)};
  }
  std::pair<double, double> from_plane(double x, double y) const {
    return {std::hypot(x, y) - rho_star, std::atan2(y, x)};
  }
};

inline StuartSingle make_stuart_single(double beta = -25.0,
                                       double gamma = 1.0, double mu = 1.0) {
  if (!(beta < 0.0) || !(mu > 0.0))
    throw std::invalid_argument("make_stuart_single: need beta < 0 < mu");
  StuartSingle s;
  s.beta = beta;
  s.gamma = gamma;
  s.mu = mu;
  s.rho_star = std::sqrt(-beta / mu);
  const double rs = s.rho_star;
  s.sys = make_drift_only(1, "stuart-single", [mu, rs](const Vec& x) {
    const double rho = x[0] + rs;
    return Vec{mu * rho * x[0] * (rho + rs)};
  });
  return s;
}

// Laplacian-coupled oscillators
//   Z_j' = Z_j - (1 + i c2)|Z_j|^2 Z_j - sigma (1 + i c1) sum_k L_jk Z_k
// with L = I - (1/n) 11^T, in interleaved real coordinates
// (Re Z_1, Im Z_1, ..., Re Z_n, Im Z_n); one Brownian channel per node.
// (L Z)_j is evaluated as the mean of pairwise differences so that equal
// nodes give exactly zero coupling: the synchronization manifold is invariant
// to the last bit, not merely up to rounding of a subtracted mean.
inline SdeSystem make_stuart_coupled(int n = 20, double sigma = 0.01,
                                     double c1 = -1.8, double c2 = 4.0) {
  if (n < 2) throw std::invalid_argument("make_stuart_coupled: need n >= 2");
  SdeSystem s;
  s.d = 2 * n;
  s.r = n;
  s.label = "stuart-coupled";
  s.f = [n, sigma, c1, c2](const Vec& z) {
    const double inv = 1.0 / n;
    Vec f(2 * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const double a = z[2 * j], b = z[2 * j + 1];
      const double q = a * a + b * b;
      double la = 0.0, lb = 0.0;
      for (int k = 0; k < n; ++k) {
        la += a - z[2 * k];
        lb += b - z[2 * k + 1];
      }
      la *= inv;
      lb *= inv;
      f[2 * j] = a - q * (a - c2 * b) - sigma * (la - c1 * lb);
      f[2 * j + 1] = b - q * (b + c2 * a) - sigma * (lb + c1 * la);
    }
    return f;
  };
  s.g = [n](const Vec&) { return Mat(2 * static_cast<std::size_t>(n), n); };
  return s;
}

// Closed training stand-in for the coupled system in deviation coordinates:
// nodes are placed at delta_j + (1, 0) on the unit cycle and the mean of the
// resulting node fields is removed (again via pairwise differences), so
// delta = 0 is an exact equilibrium.  Stabilizing it drives the nodes
// together; the full system above is the validation target.
inline SdeSystem make_stuart_coupled_proxy(int n = 20, double sigma = 0.01,
                                           double c1 = -1.8, double c2 = 4.0) {
  if (n < 2)
    throw std::invalid_argument("make_stuart_coupled_proxy: need n >= 2");
  SdeSystem s;
  s.d = 2 * n;
  s.r = n;
  s.label = "stuart-coupled-proxy";
  s.f = [n, sigma, c1, c2](const Vec& dlt) {
    const double inv = 1.0 / n;
    Vec fa(static_cast<std::size_t>(n)), fb(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const double a = dlt[2 * j] + 1.0, b = dlt[2 * j + 1];
      const double q = a * a + b * b;
      double la = 0.0, lb = 0.0;
      for (int k = 0; k < n; ++k) {
        la += dlt[2 * j] - dlt[2 * k];
        lb += dlt[2 * j + 1] - dlt[2 * k + 1];
      }
      la *= inv;
      lb *= inv;
      fa[j] = a - q * (a - c2 * b) - sigma * (la - c1 * lb);
      fb[j] = b - q * (b + c2 * a) - sigma * (lb + c1 * la);
    }
    Vec f(2 * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      double da = 0.0, db = 0.0;
      for (int k = 0; k < n; ++k) {
        da += fa[j] - fa[k];
        db += fb[j] - fb[k];
      }
      f[2 * j] = da * inv;
      f[2 * j + 1] = db * inv;
    }
    return f;
  };
  s.g = [n](const Vec&) { return Mat(2 * static_cast<std::size_t>(n), n); };
  return s;
}

// Projector onto deviations from the synchronized mean, per real component:
// suitable as a controller in_map so that u vanishes on the manifold.
inline Mat sync_deviation_map(int n) {
  Mat p(2 * static_cast<std::size_t>(n), 2 * static_cast<std::size_t>(n));
  const double inv = 1.0 / n;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const double v = (j == k ? 1.0 : 0.0) - inv;
      p(2 * j, 2 * k) = v;
      p(2 * j + 1, 2 * k + 1) = v;
    }
  return p;
}

// Root-mean-square distance of the nodes from their instantaneous mean.
inline double sync_error(const Vec& z) {
  const int n = static_cast<int>(z.size()) / 2;
  double ma = 0.0, mb = 0.0;
  for (int j = 0; j < n; ++j) {
    ma += z[2 * j];
    mb += z[2 * j + 1];
  }
  ma /= n;
  mb /= n;
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    const double da = z[2 * j] - ma, db = z[2 * j + 1] - mb;
    s += da * da + db * db;
  }
  return std::sqrt(s / n);
}

// Geometric Brownian motion dx = a x dt + b x dB with a known solution;
// integrator-validation plumbing.
inline SdeSystem make_gbm(double a, double b) {
  SdeSystem s;
  s.d = 1;
  s.r = 1;
  s.label = "gbm";
  s.f = [a](const Vec& x) { return Vec{a * x[0]}; };
  s.g = [b](const Vec& x) {
    Mat g(1, 1);
    g(0, 0) = b * x[0];
    return g;
  };
  return s;
}

inline double gbm_exact(double a, double b, double x0, double t, double b_t) {
  return x0 * std::exp((a - 0.5 * b * b) * t + b * b_t);
}

// Name-addressable catalogue with key=value parameter overrides.
struct SystemBundle {
  SdeSystem sys;
  std::map<std::string, double> params;  // resolved values actually used
};

inline SystemBundle make_system(const std::string& name,
                                std::map<std::string, double> over = {}) {
  auto take = [&over](const char* key, double dflt) {
    auto it = over.find(key);
    if (it == over.end()) return dflt;
    const double v = it->second;
    over.erase(it);
    return v;
  };

  SystemBundle b;
  if (name == "prop1") {
    b.sys = make_prop1();
  } else if (name == "example1") {
    b.sys = make_example1();
  } else if (name == "harmonic") {
    const double w2 = take("w2", 1.0), beta = take("beta", 0.5);
    const double z1 = take("zeta1", -3.0), z2 = take("zeta2", 2.15);
    const double two = take("two_channel", 0.0);
    b.sys = make_harmonic(w2, beta, z1, z2, two != 0.0);
    b.params = {{"w2", w2},
                {"beta", beta},
                {"zeta1", z1},
                {"zeta2", z2},
                {"two_channel", two}};
  } else if (name == "log1p") {
    b.sys = make_log1p();
  } else if (name == "stuart-single") {
    const double beta = take("beta", -25.0);
    const double gamma = take("gamma", 1.0), mu = take("mu", 1.0);
    auto s = make_stuart_single(beta, gamma, mu);
    b.sys = std::move(s.sys);
    b.params = {{"beta", beta},
                {"gamma", gamma},
                {"mu", mu},
                {"rho_star", s.rho_star}};
  } else if (name == "stuart-coupled") {
    const double n = take("n", 20.0), sigma = take("sigma", 0.01);
    const double c1 = take("c1", -1.8), c2 = take("c2", 4.0);
    const double proxy = take("proxy", 0.0);
    const int ni = static_cast<int>(n);
    b.sys = proxy != 0.0 ? make_stuart_coupled_proxy(ni, sigma, c1, c2)
                         : make_stuart_coupled(ni, sigma, c1, c2);
    b.params = {{"n", n},
                {"sigma", sigma},
                {"c1", c1},
                {"c2", c2},
                {"proxy", proxy}};
  } else if (name == "gbm") {
    const double a = take("a", 0.05), bb = take("b", 0.2);
    b.sys = make_gbm(a, bb);
    b.params = {{"a", a}, {"b", bb}};
  } else {
    throw std::invalid_argument("unknown system: " + name);
  }
  if (!over.empty())
    throw std::invalid_argument("unknown parameter '" + over.begin()->first +
                                "' for system " + name);
  return b;
}

}  // namespace nsc
