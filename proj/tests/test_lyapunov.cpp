#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nsc/lyapunov.hpp"
#include "support/finite_diff.hpp"

using namespace nsc;
using nsc::testing::fd_gradient;
using nsc::testing::fd_hessian;
using nsc::testing::max_rel_err;
using nsc::testing::rel_err;

TEST_CASE("quadratic V with a zero net is eps||x||^2") {
  LyapunovNet v = QuadraticV::make(2, {4}, 0, 0.001);
  CHECK(lyap_value(v, Vec{1.0, 1.0}) == Catch::Approx(0.002));
  CHECK(lyap_value(v, Vec{0.0, 0.0}) == 0.0);

  LyapunovNet v1 = QuadraticV::make(2, {}, 0, 1.0);
  auto [grad, hess] = lyap_grad_hess(v1, Vec{1.0, 2.0});
  CHECK(grad[0] == Catch::Approx(2.0));
  CHECK(grad[1] == Catch::Approx(4.0));
  CHECK(hess(0, 0) == Catch::Approx(2.0));
  CHECK(hess(1, 1) == Catch::Approx(2.0));
  CHECK(hess(0, 1) == Catch::Approx(0.0).margin(1e-13));
}

TEST_CASE("both constructions stay above the eps floor") {
  auto icnn = IcnnV::make({2, 16, 16, 1});
  icnn.init_params(5);
  LyapunovNet vi = icnn;

  auto quad = QuadraticV::make(2, {12});
  quad.net.init_params(6);
  LyapunovNet vq = quad;

  CHECK(lyap_value(vi, Vec{0.0, 0.0}) == 0.0);
  CHECK(lyap_value(vq, Vec{0.0, 0.0}) == 0.0);

  RngStream rng(77);
  for (int k = 0; k < 2000; ++k) {
    Vec x{rng.next_uniform(-5, 5), rng.next_uniform(-5, 5)};
    double floor = 1e-3 * (x[0] * x[0] + x[1] * x[1]);
    CHECK(lyap_value(vi, x) >= floor - 1e-12);
    CHECK(lyap_value(vq, x) >= floor - 1e-12);
  }
}

TEST_CASE("gradient vanishes at the origin") {
  auto icnn = IcnnV::make({3, 8, 8, 1});
  icnn.init_params(9);
  LyapunovNet vi = icnn;
  auto quad = QuadraticV::make(3, {8});
  quad.net.init_params(10);
  LyapunovNet vq = quad;

  for (const auto* v : {&vi, &vq}) {
    auto g = lyap_grad(*v, Vec{0.0, 0.0, 0.0});
    for (double gi : g) CHECK(std::abs(gi) < 1e-10);
  }
}

TEST_CASE("icnn core is midpoint convex") {
  auto icnn = IcnnV::make({2, 16, 16, 1});
  icnn.init_params(15);
  auto g_of = [&](const Vec& x) {
    return icnn.core_value<double, double>(std::span<const double>(x),
                                           std::span<const double>(icnn.params));
  };
  RngStream rng(16);
  for (int k = 0; k < 2000; ++k) {
    Vec x{rng.next_uniform(-5, 5), rng.next_uniform(-5, 5)};
    Vec y{rng.next_uniform(-5, 5), rng.next_uniform(-5, 5)};
    Vec mid{0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])};
    CHECK(g_of(mid) <= 0.5 * g_of(x) + 0.5 * g_of(y) + 1e-12);
  }
}

TEST_CASE("icnn curvature dominates the regularizer") {
  // V - eps||x||^2 is convex, so v^T H v >= 2 eps ||v||^2 everywhere.
  auto icnn = IcnnV::make({2, 12, 1});
  icnn.init_params(23);
  LyapunovNet v = icnn;
  RngStream rng(24);
  for (int k = 0; k < 200; ++k) {
    Vec x{rng.next_uniform(-3, 3), rng.next_uniform(-3, 3)};
    auto [grad, hess] = lyap_grad_hess(v, x);
    Vec dir{rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)};
    double q = 0.0, n2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      n2 += dir[i] * dir[i];
      for (int j = 0; j < 2; ++j) q += dir[i] * hess(i, j) * dir[j];
    }
    CHECK(q >= 2e-3 * n2 - 1e-10);
  }
}

TEST_CASE("derivatives match finite differences") {
  auto icnn = IcnnV::make({3, 10, 10, 1});
  icnn.init_params(41);
  LyapunovNet vi = icnn;
  auto quad = QuadraticV::make(3, {10}, 2);
  quad.net.init_params(42);
  LyapunovNet vq = quad;

  RngStream rng(43);
  for (const auto* v : {&vi, &vq}) {
    for (int k = 0; k < 5; ++k) {
      Vec x{rng.next_uniform(-2, 2), rng.next_uniform(-2, 2),
            rng.next_uniform(-2, 2)};
      auto val_at = [&](std::span<const double> y) {
        return lyap_value(*v, y);
      };
      double got_v = 0.0;
      auto g = lyap_grad(*v, x, &got_v);
      CHECK(got_v == Catch::Approx(lyap_value(*v, x)));
      CHECK(max_rel_err(g, fd_gradient(val_at, x)) < 1e-6);

      CHECK(max_asymmetry(lyap_hess_raw(*v, x)) < 1e-11);
      auto [g2, h] = lyap_grad_hess(*v, x);
      auto hfd = fd_hessian(val_at, x);
      double worst = 0.0;
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          worst = std::max(worst, rel_err(h(i, j), hfd(i, j)));
      CHECK(worst < 2e-3);
    }
  }
}

TEST_CASE("parameter gradients of V match finite differences") {
  auto icnn = IcnnV::make({2, 6, 1});
  icnn.init_params(51);
  auto quad = QuadraticV::make(2, {6});
  quad.net.init_params(52);
  Vec x{0.7, -1.1};

  auto check_param_grad = [&](auto& holder, Vec& params) {
    auto loss = [&](std::span<const Var<double>> ps) {
      return holder.template value_generic<double, Var<double>>(
          std::span<const double>(x), ps);
    };
    auto eval = [&](std::span<const double> ps) {
      return holder.template value_generic<double, double>(
          std::span<const double>(x), ps);
    };
    auto g = param_gradient(loss, params);
    auto gfd = fd_gradient(eval, params, 1e-6);
    CHECK(max_rel_err(g, gfd) < 1e-6);
  };
  check_param_grad(icnn, icnn.params);
  check_param_grad(quad, quad.net.params);
}

TEST_CASE("generator hand values") {
  // V = ||x||^2, f = -x, no diffusion: LV = -2||x||^2
  LyapunovNet v2 = QuadraticV::make(2, {}, 0, 1.0);
  auto decay2 = make_drift_only(2, "decay2", [](const Vec& x) {
    return Vec{-x[0], -x[1]};
  });
  CHECK(generator_LV(v2, decay2, nullptr, Vec{1.0, 0.0}) ==
        Catch::Approx(-2.0));

  // V = ||x||^2, f = 0, g = I (r=2): LV = trace(I) = d
  SdeSystem iso;
  iso.d = 2;
  iso.r = 2;
  iso.label = "iso";
  iso.f = [](const Vec&) { return Vec{0.0, 0.0}; };
  iso.g = [](const Vec&) { return Mat::identity(2); };
  CHECK(generator_LV(v2, iso, nullptr, Vec{0.3, -0.8}) == Catch::Approx(2.0));

  // 1-D: V = x^2, f = x log|x|, g_u = 2x^2 at x=1 -> 4
  LyapunovNet v1 = QuadraticV::make(1, {}, 0, 1.0);
  auto prop = make_drift_only(1, "prop", [](const Vec& x) {
    double ax = std::abs(x[0]);
    return Vec{ax > 0.0 ? x[0] * std::log(ax) : 0.0};
  });
  auto nn = MlpNet::make({1, 1}, Activation::Identity);
  nn.params = {2.0, 0.0};
  auto u = Controller::neural_diag(nn, 1);
  CHECK(generator_LV(v1, prop, &u, Vec{1.0}) == Catch::Approx(4.0));
}

TEST_CASE("generator is linear in the lyapunov parts") {
  RngStream rng(61);
  for (int k = 0; k < 20; ++k) {
    Vec g1{rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)};
    Vec g2{rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)};
    Mat h1(2, 2), h2(2, 2);
    for (auto* h : {&h1, &h2})
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = i; j < 2; ++j)
          (*h)(i, j) = (*h)(j, i) = rng.next_uniform(-1, 1);
    Vec fx{rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)};
    Mat gu(2, 1);
    gu(0, 0) = rng.next_uniform(-1, 1);
    gu(1, 0) = rng.next_uniform(-1, 1);
    double a = rng.next_uniform(-2, 2), b = rng.next_uniform(-2, 2);

    Vec gc{a * g1[0] + b * g2[0], a * g1[1] + b * g2[1]};
    Mat hc(2, 2);
    for (std::size_t i = 0; i < 4; ++i) hc.a[i] = a * h1.a[i] + b * h2.a[i];
    CHECK(generator_from_parts(gc, hc, fx, gu) ==
          Catch::Approx(a * generator_from_parts(g1, h1, fx, gu) +
                        b * generator_from_parts(g2, h2, fx, gu))
              .margin(1e-12));
  }
}
