#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nsc/control.hpp"
#include "nsc/rng.hpp"

using namespace nsc;

TEST_CASE("linear controller") {
  auto u = Controller::linear(6.0, 1);
  Vec x{0.5};
  auto m = control_eval(u, x);
  REQUIRE(m.rows == 1);
  REQUIRE(m.cols == 1);
  CHECK(m(0, 0) == 3.0);
  CHECK(control_energy_density(u, Vec{1.0}) == 36.0);
  CHECK(control_eval(u, Vec{0.0})(0, 0) == 0.0);

  // homogeneity
  RngStream rng(3);
  auto u2 = Controller::linear(-2.5, 3);
  for (int k = 0; k < 50; ++k) {
    Vec y{rng.next_uniform(-2, 2), rng.next_uniform(-2, 2),
          rng.next_uniform(-2, 2)};
    double lam = rng.next_uniform(-3, 3);
    Vec ly{lam * y[0], lam * y[1], lam * y[2]};
    auto a = control_eval(u2, y);
    auto b = control_eval(u2, ly);
    for (int i = 0; i < 3; ++i)
      CHECK(b(i, 0) == Catch::Approx(lam * a(i, 0)).margin(1e-12));
  }

  Mat k_mat(2, 2);
  k_mat(0, 1) = 1.0;
  k_mat(1, 0) = -1.0;
  auto um = Controller::linear_matrix(k_mat);
  auto mm = control_eval(um, Vec{1.0, 2.0});
  CHECK(mm(0, 0) == 2.0);
  CHECK(mm(1, 0) == -1.0);
  CHECK(controller_lipschitz_upper(um) == Catch::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("neural shift controller") {
  auto net = MlpNet::make({2, 8, 2}, Activation::Tanh);
  net.init_params(11);
  auto u = Controller::neural_shift(net, 2, 1);

  auto z = control_eval(u, Vec{0.0, 0.0});
  CHECK(z(0, 0) == 0.0);
  CHECK(z(1, 0) == 0.0);

  // matches direct net evaluation
  Vec x{0.4, -1.2};
  auto m = control_eval(u, x);
  auto out = net.forward(x);
  auto out0 = net.forward(Vec{0.0, 0.0});
  CHECK(m(0, 0) == Catch::Approx(out[0] - out0[0]));
  CHECK(m(1, 0) == Catch::Approx(out[1] - out0[1]));

  // general r: d*r outputs reshaped row-major
  auto net2 = MlpNet::make({3, 6, 6}, Activation::Tanh);
  net2.init_params(12);
  auto u2 = Controller::neural_shift(net2, 3, 2);
  Vec y{1.0, -0.5, 0.3};
  auto m2 = control_eval(u2, y);
  auto o = net2.forward(y);
  auto o0 = net2.forward(Vec{0.0, 0.0, 0.0});
  REQUIRE(m2.rows == 3);
  REQUIRE(m2.cols == 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(m2(i, j) == Catch::Approx(o[i * 2 + j] - o0[i * 2 + j]));

  CHECK(controller_lipschitz_upper(u) ==
        Catch::Approx(lipschitz_upper_bound(net)).epsilon(1e-12));
}

TEST_CASE("neural diag controller") {
  auto nn = MlpNet::make({1, 1}, Activation::Identity);
  nn.params = {2.0, 0.0};  // NN(x) = 2x
  auto u = Controller::neural_diag(nn, 1);
  CHECK(control_eval(u, Vec{1.0})(0, 0) == Catch::Approx(2.0));
  // u(x) = 2x^2: energy at x=2 is (2*4)^2
  CHECK(control_energy_density(u, Vec{2.0}) == Catch::Approx(64.0));

  auto nn2 = MlpNet::make({2, 2}, Activation::Identity);
  nn2.params = {1.0, 0.0, 0.0, 1.0, 0.5, -0.5};  // NN(x) = x + (0.5,-0.5)
  auto u2 = Controller::neural_diag(nn2, 2);
  Vec x{3.0, 0.0};
  auto m = control_eval(u2, x);
  REQUIRE(m.rows == 2);
  REQUIRE(m.cols == 2);
  CHECK(m(0, 0) == Catch::Approx(3.0 * 3.5));
  CHECK(m(0, 1) == 0.0);
  CHECK(m(1, 0) == 0.0);
  CHECK(m(1, 1) == 0.0);  // x_2 = 0 kills the row

  CHECK(control_eval(u2, Vec{0.0, 0.0}).a == Vec{0.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_AS(controller_lipschitz_upper(u2), std::invalid_argument);
  CHECK(controller_lipschitz_upper(u2, 5.0) > 0.0);
}

TEST_CASE("pin mask zeroes rows") {
  auto net = MlpNet::make({2, 6, 2}, Activation::Tanh);
  net.init_params(21);
  auto u = Controller::neural_shift(net, 2, 1);
  u.pin_mask = {1, 0};
  RngStream rng(9);
  for (int k = 0; k < 20; ++k) {
    Vec x{rng.next_uniform(-2, 2), rng.next_uniform(-2, 2)};
    auto m = control_eval(u, x);
    CHECK(m(1, 0) == 0.0);
  }
}

TEST_CASE("fixed input/output wrappers") {
  // u(x) = R * core(Q x) with Q = [1 -1], R = (1, -1)^T and core = shift of
  // the identity 1->1 net: u(x) = (x1-x2, -(x1-x2))^T.
  auto net = MlpNet::make({1, 1}, Activation::Identity);
  net.params = {1.0, 0.25};  // bias cancels in the shift
  Mat q(1, 2);
  q(0, 0) = 1.0;
  q(0, 1) = -1.0;
  Mat rmap(2, 1);
  rmap(0, 0) = 1.0;
  rmap(1, 0) = -1.0;
  auto u = Controller::neural_shift_wrapped(net, 2, 1, q, rmap);

  auto m = control_eval(u, Vec{2.0, 0.5});
  CHECK(m(0, 0) == Catch::Approx(1.5));
  CHECK(m(1, 0) == Catch::Approx(-1.5));
  // vanishes exactly on the diagonal (Qx = 0)
  auto md = control_eval(u, Vec{0.7, 0.7});
  CHECK(md(0, 0) == 0.0);
  CHECK(md(1, 0) == 0.0);
}

TEST_CASE("training-typed evaluation matches frozen route") {
  auto net = MlpNet::make({2, 6, 2}, Activation::Tanh);
  net.init_params(31);
  auto u = Controller::neural_diag(
      MlpNet::make({2, 6, 2}, Activation::Tanh), 2);
  u.net.init_params(31);

  Vec x{0.8, -0.4};
  auto frozen = control_entries<double>(u, x,
                                        std::span<const double>(u.params()));

  Tape<double> tape;
  std::vector<Var<double>> ps;
  for (double p : u.params()) ps.push_back(tape.leaf(p));
  auto live = control_entries<Var<double>>(
      u, x, std::span<const Var<double>>(ps));
  REQUIRE(live.size() == frozen.size());
  for (std::size_t i = 0; i < live.size(); ++i)
    CHECK(value_of(live[i]) == Catch::Approx(frozen[i]).margin(1e-15));

  // linear controllers refuse the training route
  auto ul = Controller::linear(2.0, 1);
  Vec x1{1.0};
  CHECK_THROWS_AS((control_entries<Var<double>>(
                      ul, x1, std::span<const Var<double>>(ps))),
                  std::logic_error);
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(
      Controller::neural_diag(MlpNet::make({2, 3}, Activation::Tanh), 2),
      std::invalid_argument);
  CHECK_THROWS_AS(
      Controller::neural_shift(MlpNet::make({2, 5}, Activation::Tanh), 2, 2),
      std::invalid_argument);
  CHECK_THROWS_AS(Controller::linear_matrix(Mat(2, 3)), std::invalid_argument);
}

TEST_CASE("neural block controller") {
  // d=4, r=2: channel 0 owns rows 0..1, channel 1 owns rows 2..3
  auto net = MlpNet::make({4, 6, 4}, Activation::Tanh);
  net.init_params(41);
  auto u = Controller::neural_block(net, 4, 2);

  auto z = control_eval(u, Vec{0.0, 0.0, 0.0, 0.0});
  for (double v : z.a) CHECK(v == 0.0);

  Vec x{0.4, -1.2, 0.7, 0.1};
  auto m = control_eval(u, x);
  auto out = net.forward(x);
  auto out0 = net.forward(Vec{0.0, 0.0, 0.0, 0.0});
  CHECK(m(0, 0) == Catch::Approx(out[0] - out0[0]).margin(1e-15));
  CHECK(m(1, 0) == Catch::Approx(out[1] - out0[1]).margin(1e-15));
  CHECK(m(2, 1) == Catch::Approx(out[2] - out0[2]).margin(1e-15));
  CHECK(m(3, 1) == Catch::Approx(out[3] - out0[3]).margin(1e-15));
  CHECK(m(0, 1) == 0.0);
  CHECK(m(1, 1) == 0.0);
  CHECK(m(2, 0) == 0.0);
  CHECK(m(3, 0) == 0.0);

  CHECK(controller_lipschitz_upper(u) == lipschitz_upper_bound(net));

  // var route agrees with the frozen one
  Tape<double> tape;
  std::vector<Var<double>> ps;
  for (double p : u.params()) ps.push_back(tape.leaf(p));
  auto live =
      control_entries<Var<double>>(u, x, std::span<const Var<double>>(ps));
  auto frozen =
      control_entries<double>(u, x, std::span<const double>(u.params()));
  REQUIRE(live.size() == frozen.size());
  for (std::size_t i = 0; i < live.size(); ++i)
    CHECK(value_of(live[i]) == Catch::Approx(frozen[i]).margin(1e-15));

  CHECK_THROWS_AS(
      Controller::neural_block(MlpNet::make({4, 6, 4}, Activation::Tanh), 4,
                               3),
      std::invalid_argument);
  CHECK_THROWS_AS(
      Controller::neural_block(MlpNet::make({4, 6, 2}, Activation::Tanh), 4,
                               2),
      std::invalid_argument);
  CHECK(controller_kind_from_string("neural_block") ==
        ControllerKind::NeuralBlock);
  CHECK(to_string(ControllerKind::NeuralBlock) == "neural_block");
}

TEST_CASE("neural block with a deviation premap vanishes on equal blocks") {
  // in_map sends synchronized pairs to zero, so u must vanish there exactly
  auto net = MlpNet::make({4, 8, 4}, Activation::Tanh);
  net.init_params(42);
  Mat p(4, 4);
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      const double v = (j == k ? 1.0 : 0.0) - 0.5;
      p(2 * j, 2 * k) = v;
      p(2 * j + 1, 2 * k + 1) = v;
    }
  auto u = Controller::neural_block(net, 4, 2, p);

  auto on = control_eval(u, Vec{0.9, -0.3, 0.9, -0.3});
  for (double v : on.a) CHECK(v == 0.0);

  auto off = control_eval(u, Vec{0.9, -0.3, 0.1, 0.2});
  double mag = 0.0;
  for (double v : off.a) mag += v * v;
  CHECK(mag > 0.0);
}
