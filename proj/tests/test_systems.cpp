#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include <nsc/sde.hpp>
#include <nsc/systems.hpp>

using namespace nsc;

TEST_CASE("catalogued systems fix the origin exactly") {
  const char* names[] = {"prop1",         "example1",       "harmonic",
                         "log1p",         "stuart-single",  "stuart-coupled",
                         "gbm"};
  for (const char* name : names) {
    auto b = make_system(name);
    Vec zero(static_cast<std::size_t>(b.sys.d), 0.0);
    for (double v : b.sys.f(zero)) CHECK(v == 0.0);
    for (double v : b.sys.g(zero).a) CHECK(v == 0.0);
  }
}

TEST_CASE("log-drift scalar system") {
  auto sys = make_prop1();
  CHECK(sys.f({0.0})[0] == 0.0);
  CHECK(sys.f({1.0})[0] == 0.0);
  CHECK(sys.f({-1.0})[0] == 0.0);
  const double e = std::exp(1.0);
  CHECK(std::abs(sys.f({e})[0] - e) < 1e-14);
  CHECK(std::abs(sys.f({-e})[0] + e) < 1e-14);
  // tiny arguments stay finite
  CHECK(std::isfinite(sys.f({1e-300})[0]));
}

TEST_CASE("planar single-channel system") {
  auto sys = make_example1();
  CHECK(sys.d == 2);
  CHECK(sys.r == 1);
  auto f = sys.f({1.0, 0.0});
  CHECK(f[0] == 0.0);
  CHECK(f[1] == -2.0);
  auto g = sys.g({1.0, 0.0});
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 0) == 1.0);
  auto f2 = sys.f({0.5, -1.5});
  CHECK(f2[0] == -1.5);
  CHECK(f2[1] == 0.5);
}

TEST_CASE("harmonic oscillator") {
  auto sys = make_harmonic();
  auto f = sys.f({1.0, 0.0});
  CHECK(f[0] == 0.0);
  CHECK(f[1] == -1.0);
  auto f2 = sys.f({0.0, 1.0});
  CHECK(f2[0] == 1.0);
  CHECK(f2[1] == -1.0);
  auto g = sys.g({1.0, 0.0});
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 0) == 3.0);
  auto gm = sys.g({1.0, 1.0});
  CHECK(gm(1, 0) == 3.0 - 2.15);

  auto two = make_harmonic(1.0, 0.5, -3.0, 2.15, true);
  CHECK(two.r == 2);
  auto g2 = two.g({1.0, 1.0});
  CHECK(g2(1, 0) == 3.0);
  CHECK(g2(1, 1) == -2.15);
  CHECK(g2(0, 0) == 0.0);
  CHECK(g2(0, 1) == 0.0);

  CHECK_THROWS_AS(make_harmonic(1.0, 0.0), std::invalid_argument);

  // multiplicative noise destabilizes the damped oscillator
  auto ens = ensemble(
      sys, nullptr, [](RngStream&) { return Vec{1.0, 0.0}; }, 20, 1e-3, 4.0,
      std::nullopt, 31, 100);
  CHECK(ens.n_diverged == 0);
  CHECK(ens.mean_final_norm() > 3.0);
}

TEST_CASE("softplus-log scalar system") {
  auto sys = make_log1p();
  CHECK(sys.f({0.0})[0] == 0.0);
  const double e1 = std::exp(1.0) - 1.0;
  CHECK(std::abs(sys.f({e1})[0] - e1) < 1e-14);
  CHECK_THROWS_AS(sys.f({-1.0}), std::domain_error);
  CHECK_THROWS_AS(sys.f({-1.5}), std::domain_error);
}

TEST_CASE("radial deviation of the planar limit cycle") {
  auto s = make_stuart_single();
  CHECK(s.rho_star == 5.0);
  CHECK(s.sys.d == 1);
  CHECK(s.sys.f({0.0})[0] == 0.0);
  CHECK(s.sys.f({-1.0})[0] == -36.0);
  // rho = 6: (-25 + 36) * 6 = 66
  CHECK(std::abs(s.sys.f({1.0})[0] - 66.0) < 1e-12);

  auto p = s.to_plane(0.0, 0.0);
  CHECK(p[0] == 5.0);
  CHECK(p[1] == 0.0);
  auto q = s.to_plane(-1.0, 1.5707963267948966);
  CHECK(std::abs(q[0]) < 1e-12);
  CHECK(std::abs(q[1] - 4.0) < 1e-12);
  auto [e, th] = s.from_plane(q[0], q[1]);
  CHECK(std::abs(e + 1.0) < 1e-12);
  CHECK(std::abs(th - 1.5707963267948966) < 1e-12);
  // |e| small => reconstructed point lies within |e| of the cycle
  auto near = s.to_plane(0.03, 2.2);
  CHECK(std::abs(std::hypot(near[0], near[1]) - 5.0) <= 0.03 + 1e-12);

  CHECK_THROWS_AS(make_stuart_single(25.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("coupled oscillators hand values") {
  auto sys = make_stuart_coupled(2, 0.01, -1.8, 4.0);
  CHECK(sys.d == 4);
  CHECK(sys.r == 2);
  // Z1 = 1, Z2 = 0: coupling (L Z)_1 = 0.5, (L Z)_2 = -0.5
  auto f = sys.f({1.0, 0.0, 0.0, 0.0});
  CHECK(std::abs(f[0] - (-0.005)) < 1e-15);
  CHECK(std::abs(f[1] - (-3.991)) < 1e-15);
  CHECK(std::abs(f[2] - 0.005) < 1e-15);
  CHECK(std::abs(f[3] - (-0.009)) < 1e-15);

  // equal nodes: identical field entries, bit for bit
  auto sys20 = make_stuart_coupled();
  Vec z(40);
  for (int j = 0; j < 20; ++j) {
    z[2 * j] = 0.3;
    z[2 * j + 1] = -0.71;
  }
  auto f20 = sys20.f(z);
  for (int j = 1; j < 20; ++j) {
    CHECK(f20[2 * j] == f20[0]);
    CHECK(f20[2 * j + 1] == f20[1]);
  }

  CHECK_THROWS_AS(make_stuart_coupled(1), std::invalid_argument);
}

TEST_CASE("synchronization manifold is invariant without control") {
  auto sys = make_stuart_coupled();
  Vec z(40);
  for (int j = 0; j < 20; ++j) {
    z[2 * j] = 0.4;
    z[2 * j + 1] = 0.2;
  }
  CHECK(sync_error(z) < 1e-15);
  auto tr = simulate(sys, nullptr, z, 1e-3, 5.0, std::nullopt, 77, 500);
  CHECK_FALSE(tr.diverged);
  for (const auto& state : tr.states) CHECK(sync_error(state) < 1e-12);
}

TEST_CASE("deviation proxy of the coupled system") {
  auto sys = make_stuart_coupled_proxy(4, 0.01, -1.8, 4.0);
  CHECK(sys.d == 8);
  CHECK(sys.r == 4);
  Vec zero(8, 0.0);
  for (double v : sys.f(zero)) CHECK(v == 0.0);

  // two-node proxy is antisymmetric across the nodes
  auto two = make_stuart_coupled_proxy(2, 0.01, -1.8, 4.0);
  auto f = two.f({0.1, -0.05, -0.1, 0.05});
  CHECK(std::abs(f[0] + f[2]) < 1e-15);
  CHECK(std::abs(f[1] + f[3]) < 1e-15);

  // field mean is removed: components sum to ~0 per axis
  auto f4 = sys.f({0.2, 0.1, -0.3, 0.0, 0.05, -0.15, 0.05, 0.05});
  double sa = 0.0, sb = 0.0;
  for (int j = 0; j < 4; ++j) {
    sa += f4[2 * j];
    sb += f4[2 * j + 1];
  }
  CHECK(std::abs(sa) < 1e-14);
  CHECK(std::abs(sb) < 1e-14);
}

TEST_CASE("deviation projector") {
  auto p = sync_deviation_map(2);
  CHECK(p.rows == 4);
  CHECK(p(0, 0) == 0.5);
  CHECK(p(0, 2) == -0.5);
  CHECK(p(0, 1) == 0.0);
  CHECK(p(1, 1) == 0.5);
  CHECK(p(1, 3) == -0.5);
  CHECK(p(2, 0) == -0.5);
  CHECK(p(2, 2) == 0.5);

  // equal nodes map to zero up to rounding of 1/n
  auto p5 = sync_deviation_map(5);
  Vec z(10);
  for (int j = 0; j < 5; ++j) {
    z[2 * j] = 1.37;
    z[2 * j + 1] = -0.9;
  }
  for (double v : matvec(p5, z)) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("geometric brownian motion plumbing") {
  auto sys = make_gbm(0.5, 0.25);
  CHECK(sys.f({2.0})[0] == 1.0);
  CHECK(sys.g({2.0})(0, 0) == 0.5);
  CHECK(gbm_exact(0.5, 0.25, 3.0, 0.0, 0.0) == 3.0);
  // drift-only exactness: b = 0 reduces to exp(a t)
  CHECK(std::abs(gbm_exact(0.5, 0.0, 1.0, 2.0, 0.7) - std::exp(1.0)) < 1e-14);
}

TEST_CASE("catalogue lookup with overrides") {
  auto b = make_system("harmonic", {{"beta", 1.0}});
  auto f = b.sys.f({0.0, 1.0});
  CHECK(f[1] == -2.0);
  CHECK(b.params.at("beta") == 1.0);
  CHECK(b.params.at("zeta1") == -3.0);

  auto sc = make_system("stuart-coupled", {{"proxy", 1.0}, {"n", 4.0}});
  CHECK(sc.sys.d == 8);
  CHECK(sc.sys.label == "stuart-coupled-proxy");

  auto ss = make_system("stuart-single");
  CHECK(ss.params.at("rho_star") == 5.0);

  CHECK_THROWS_AS(make_system("lorenz"), std::invalid_argument);
  CHECK_THROWS_AS(make_system("harmonic", {{"mass", 2.0}}),
                  std::invalid_argument);
}
