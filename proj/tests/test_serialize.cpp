#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nsc/serialize.hpp>
#include <nsc/systems.hpp>

using namespace nsc;

namespace {

// Finite doubles drawn from raw bit patterns: exercises subnormals, extreme
// exponents and negative zero, where a lossy text round-trip would show first.
Vec hostile_doubles(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vec out;
  out.reserve(n);
  while (out.size() < n) {
    const double v = std::bit_cast<double>(rng());
    if (std::isfinite(v)) out.push_back(v);
  }
  out[0] = -0.0;
  if (n > 1) out[1] = 1e-300;
  return out;
}

bool same_bits(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i]))
      return false;
  return true;
}

}  // namespace

TEST_CASE("network json round-trip is bit-exact") {
  auto net = MlpNet::make({3, 7, 2}, Activation::Tanh, 0.25);
  net.params = hostile_doubles(net.params.size(), 101);

  const Json j = net_to_json(net);
  CHECK(j.at("activation") == "tanh");
  CHECK(j.at("layers").size() == 2);
  CHECK(j.at("layers")[0].at("W").size() == 21);
  CHECK(j.at("layers")[1].at("b").size() == 2);

  const auto back = net_from_json(Json::parse(j.dump()));
  CHECK(back.arch == net.arch);
  CHECK(back.act == net.act);
  CHECK(back.d_knot == net.d_knot);
  CHECK(same_bits(back.params, net.params));

  // bad shapes are rejected
  Json broken = j;
  broken["layers"][0]["W"] = std::vector<double>(5, 0.0);
  CHECK_THROWS_AS(net_from_json(broken), std::invalid_argument);
  broken = j;
  broken["layers"].erase(1);
  CHECK_THROWS_AS(net_from_json(broken), std::invalid_argument);
}

TEST_CASE("icnn json round-trip preserves value and bits") {
  auto icnn = IcnnV::make({2, 6, 6, 1}, 0.002, 0.05);
  icnn.init_params(7);
  icnn.inner = InnerMap::Tanh;

  LyapunovNet v = icnn;
  const Json j = lyapunov_to_json(v);
  CHECK(j.at("lyapunov_kind") == "icnn");
  CHECK(j.at("m") == 0);
  CHECK(j.at("inner_map") == "tanh");
  CHECK_FALSE(j.at("layers")[0].contains("U"));
  CHECK(j.at("layers")[1].at("U").size() == 36);

  const LyapunovNet back = lyapunov_from_json(Json::parse(j.dump()));
  const auto& bi = std::get<IcnnV>(back);
  CHECK(bi.arch == icnn.arch);
  CHECK(bi.epsilon == icnn.epsilon);
  CHECK(bi.d_knot == icnn.d_knot);
  CHECK(bi.inner == InnerMap::Tanh);
  CHECK(same_bits(bi.params, icnn.params));
  for (double t : {-1.3, 0.4, 2.0}) {
    const Vec x{t, -0.5 * t};
    CHECK(lyap_value(back, x) == lyap_value(v, x));
  }
}

TEST_CASE("quadratic json round-trip preserves value and bits") {
  auto quad = QuadraticV::make(3, {5}, 2, 0.01);
  quad.net.init_params(8);

  LyapunovNet v = quad;
  const Json j = lyapunov_to_json(v);
  CHECK(j.at("lyapunov_kind") == "quadratic");
  CHECK(j.at("m") == 2);
  CHECK(j.at("arch") == std::vector<int>{3, 5, 6});

  const LyapunovNet back = lyapunov_from_json(Json::parse(j.dump()));
  const auto& bq = std::get<QuadraticV>(back);
  CHECK(bq.m == 2);
  CHECK(bq.epsilon == 0.01);
  CHECK(same_bits(bq.net.params, quad.net.params));
  const Vec x{0.3, -1.1, 0.7};
  CHECK(lyap_value(back, x) == lyap_value(v, x));

  Json broken = j;
  broken["lyapunov_kind"] = "cubic";
  CHECK_THROWS_AS(lyapunov_from_json(broken), std::invalid_argument);
  broken = j;
  broken["m"] = 5;
  CHECK_THROWS_AS(lyapunov_from_json(broken), std::invalid_argument);
}

TEST_CASE("controller json round-trip for every kind") {
  const Vec x{0.8, -0.4, 1.2, 0.1};

  SECTION("linear scalar with pin mask") {
    auto u = Controller::linear(-2.5, 4);
    u.pin_mask = {1, 0, 1, 1};
    const Json j = controller_to_json(u);
    CHECK(j.at("controller_kind") == "linear");
    CHECK(j.at("k_scalar") == true);
    const auto back = controller_from_json(Json::parse(j.dump()));
    CHECK(back.kind == ControllerKind::Linear);
    CHECK(back.pin_mask == u.pin_mask);
    CHECK(control_eval(back, x).a == control_eval(u, x).a);
  }

  SECTION("linear matrix") {
    Mat k(2, 2);
    k.a = {1.0, -0.5, 0.25, 3.0};
    const auto u = Controller::linear_matrix(k);
    const auto back = controller_from_json(Json::parse(controller_to_json(u).dump()));
    CHECK_FALSE(back.lin_scalar);
    CHECK(same_bits(back.lin_k, u.lin_k));
    const Vec y{0.3, -0.9};
    CHECK(control_eval(back, y).a == control_eval(u, y).a);
  }

  SECTION("neural shift with wrappers") {
    auto net = MlpNet::make({2, 5, 4}, Activation::Tanh);
    net.params = hostile_doubles(net.params.size(), 55);
    Mat in(2, 4);
    in.a = {1, 0, 0, 0, 0, 1, 0, 0};
    Mat out(4, 2);
    out.a = {1, 0, 0, 1, 1, 0, 0, 1};
    const auto u = Controller::neural_shift_wrapped(net, 4, 2, in, out);
    const Json j = controller_to_json(u);
    CHECK(j.at("controller_kind") == "neural_shift");
    CHECK(j.contains("in_map"));
    CHECK(j.contains("out_rowmap"));
    const auto back = controller_from_json(Json::parse(j.dump()));
    CHECK(same_bits(back.net.params, net.params));
    CHECK(back.in_map.a == in.a);
    CHECK(back.out_rowmap.a == out.a);
  }

  SECTION("neural diag") {
    auto net = MlpNet::make({4, 6, 4}, Activation::Tanh);
    net.init_params(3);
    const auto u = Controller::neural_diag(net, 4);
    const auto back = controller_from_json(Json::parse(controller_to_json(u).dump()));
    CHECK(back.r == 4);
    CHECK(control_eval(back, x).a == control_eval(u, x).a);
  }

  SECTION("neural block with deviation premap") {
    auto net = MlpNet::make({4, 6, 4}, Activation::Tanh);
    net.init_params(9);
    const auto u = Controller::neural_block(net, 4, 2, sync_deviation_map(2));
    const Json j = controller_to_json(u);
    const auto back = controller_from_json(Json::parse(j.dump()));
    CHECK(back.kind == ControllerKind::NeuralBlock);
    CHECK(back.in_map.a == u.in_map.a);
    CHECK(control_eval(back, x).a == control_eval(u, x).a);

    Json broken = j;
    broken["r"] = 3;  // does not divide d
    CHECK_THROWS_AS(controller_from_json(broken), std::invalid_argument);
    broken = j;
    broken["pin_mask"] = std::vector<int>{1, 0};
    CHECK_THROWS_AS(controller_from_json(broken), std::invalid_argument);
    broken = j;
    broken["controller_kind"] = "mystery";
    CHECK_THROWS_AS(controller_from_json(broken), std::invalid_argument);
  }
}

TEST_CASE("training log is one json object per line") {
  std::vector<LossReport> reports(3);
  reports[0] = {0, 0.75, 12, 1.5};
  reports[1] = {1, 0.0625, 3, 1.25};
  reports[2] = {2, 0.0, 0, 1.0};

  std::ostringstream os;
  write_training_log(os, reports);
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    const Json j = Json::parse(line);
    CHECK(j.at("iteration") == n);
    CHECK(j.at("loss") == reports[n].loss);
    CHECK(j.at("active") == reports[n].active);
    ++n;
  }
  CHECK(n == 3);
}

TEST_CASE("trajectory csv layout") {
  Trajectory tr;
  tr.times = {0.0, 0.5, 1.0};
  tr.states = {{1.0, -2.0}, {0.5, 0.25}, {0.125, 0.0}};
  tr.energy_acc = {0.0, 0.75, 1.5};
  CHECK(trajectory_csv(tr) ==
        "t,x1,x2,energy\n"
        "0,1,-2,0\n"
        "0.5,0.5,0.25,0.75\n"
        "1,0.125,0,1.5\n");

  // simulated output: header + one row per stored state, identical bytes for
  // identical seeds
  const auto sys = make_system("prop1").sys;
  const auto u = Controller::linear(2.0, 1);
  const auto run = [&] {
    return trajectory_csv(
        simulate(sys, &u, Vec{1.0}, 1e-3, 0.05, std::nullopt, 77, 10));
  };
  const std::string csv = run();
  CHECK(csv == run());
  CHECK(csv.rfind("t,x1,energy\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header + t=0 + 5 stored
}

TEST_CASE("json files round-trip on disk") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "nsc_serialize_test";
  fs::create_directories(dir);
  const std::string path = (dir / "net.json").string();

  auto net = MlpNet::make({2, 4, 2}, Activation::SmoothedRelu, 0.1);
  net.params = hostile_doubles(net.params.size(), 321);
  write_json_file(path, net_to_json(net));
  const auto back = net_from_json(read_json_file(path));
  CHECK(same_bits(back.params, net.params));

  CHECK_THROWS_AS(read_json_file((dir / "missing.json").string()),
                  std::runtime_error);
  fs::remove_all(dir);
}
