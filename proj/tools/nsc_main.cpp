// Command-line front end: training, simulation, hitting-time bounds and
// benchmark suites, all writing fixed-name artifacts under --out-dir.
//
// Every command records a manifest.json carrying the fully resolved
// configuration; `replay <manifest>` re-runs it and reproduces the outputs
// byte-for-byte (bench.csv timing columns excepted — wall-clock is not a
// reproducible quantity, so replay only preserves the non-timing columns).
//
// Exit codes: 0 success or valid report, 2 usage/configuration error,
// 3 numeric divergence, 4 training did not converge.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <nsc/bench.hpp>
#include <nsc/bounds.hpp>
#include <nsc/control.hpp>
#include <nsc/lyapunov.hpp>
#include <nsc/sde.hpp>
#include <nsc/serialize.hpp>
#include <nsc/systems.hpp>
#include <nsc/train.hpp>

namespace fs = std::filesystem;
using nsc::Json;
using nsc::Mat;
using nsc::Vec;

namespace {

constexpr const char* kVersion = "nsc 1.0.0";

std::uint64_t env_seed() {
  if (const char* s = std::getenv("NSC_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw std::invalid_argument("NSC_SEED is not an unsigned integer");
    }
  }
  return 0;
}

// Config-file merge: a JSON object supplies values for exactly the flags the
// command line left at their defaults.
struct ConfigMerge {
  std::vector<std::function<void(const Json&)>> items;

  template <class T>
  void bind(CLI::Option* opt, const char* key, T& var) {
    items.push_back([opt, key, &var](const Json& cfg) {
      if (opt->count() == 0 && cfg.contains(key)) cfg.at(key).get_to(var);
    });
  }

  void apply(const std::string& path) const {
    if (path.empty()) return;
    const Json cfg = nsc::read_json_file(path);
    if (!cfg.is_object())
      throw std::invalid_argument("config file must hold a JSON object");
    for (const auto& f : items) f(cfg);
  }
};

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, double> out;
  for (const auto& s : kv) {
    const auto pos = s.find('=');
    if (pos == std::string::npos || pos == 0)
      throw std::invalid_argument("--param expects name=value, got " + s);
    out[s.substr(0, pos)] = std::stod(s.substr(pos + 1));
  }
  return out;
}

Json params_to_json(const std::map<std::string, double>& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

std::map<std::string, double> params_from_json(const Json& j) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : j.items()) out[k] = v.get<double>();
  return out;
}

// NaN stands for "not provided"; it crosses JSON as null.
void set_opt_num(Json& j, const char* key, double v) {
  if (std::isnan(v))
    j[key] = nullptr;
  else
    j[key] = v;
}

double get_opt_num(const Json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                     : v.get<double>();
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const Json& config, const std::vector<std::string>& outputs,
                    const char* notes = "") {
  Json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config"] = config;
  m["outputs"] = outputs;
  m["notes"] = notes;
  nsc::write_json_file((out_dir / "manifest.json").string(), m);
}

fs::path prepare_out_dir(const std::string& dir) {
  if (dir.empty()) throw std::invalid_argument("--out-dir is required");
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

// Resolve the sampling box: explicit per-axis bounds win over the symmetric
// half-width.
void resolve_box(const Json& cfg, int d, Vec& lo, Vec& hi) {
  lo = cfg.at("box-lo").get<Vec>();
  hi = cfg.at("box-hi").get<Vec>();
  if (lo.empty() && hi.empty()) {
    const double w = cfg.at("box").get<double>();
    if (!(w > 0.0)) throw std::invalid_argument("box half-width must be > 0");
    lo.assign(static_cast<std::size_t>(d), -w);
    hi.assign(static_cast<std::size_t>(d), w);
    return;
  }
  if (lo.size() != static_cast<std::size_t>(d) ||
      hi.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("box-lo/box-hi must have one entry per axis");
}

// ---------------------------------------------------------------- train ----

int run_train(const Json& cfg, const fs::path& out_dir) {
  const auto bundle =
      nsc::make_system(cfg.at("system"), params_from_json(cfg.at("params")));
  const auto& sys = bundle.sys;
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

  Vec lo, hi;
  resolve_box(cfg, sys.d, lo, hi);

  nsc::TrainConfig tc;
  tc.loss = nsc::loss_kind_from_string(cfg.at("loss"));
  tc.b = cfg.at("b").get<double>();
  tc.alpha = cfg.at("alpha").get<double>();
  tc.drift_factor = nsc::drift_factor_from_string(cfg.at("drift-factor"));
  tc.box_lo = lo;
  tc.box_hi = hi;
  tc.n_samples = cfg.at("n-samples").get<int>();
  tc.resample = cfg.at("resample").get<bool>();
  tc.max_iters = cfg.at("max-iters").get<int>();
  tc.zero_streak = cfg.at("zero-streak").get<int>();
  tc.exclusion = cfg.at("exclusion").get<double>();
  tc.adam.lr = cfg.at("lr").get<double>();
  tc.seed = seed;

  // controller
  const std::string ckind = cfg.at("controller");
  const auto u_hidden = cfg.at("u-arch").get<std::vector<int>>();
  const int r = cfg.at("r").get<int>();
  const auto act = nsc::activation_from_string(cfg.at("u-activation"));
  std::vector<int> u_arch{sys.d};
  u_arch.insert(u_arch.end(), u_hidden.begin(), u_hidden.end());
  nsc::Controller u0;
  if (ckind == "shift") {
    u_arch.push_back(sys.d * r);
    auto net = nsc::MlpNet::make(u_arch, act);
    net.init_params(nsc::derive_seed(seed, 2));
    net.params.back() += cfg.at("u-bias").get<double>();
    u0 = nsc::Controller::neural_shift(std::move(net), sys.d, r);
  } else if (ckind == "diag") {
    u_arch.push_back(sys.d);
    auto net = nsc::MlpNet::make(u_arch, act);
    net.init_params(nsc::derive_seed(seed, 2));
    net.params.back() += cfg.at("u-bias").get<double>();
    u0 = nsc::Controller::neural_diag(std::move(net), sys.d);
  } else if (ckind == "block") {
    u_arch.push_back(sys.d);
    auto net = nsc::MlpNet::make(u_arch, act);
    net.init_params(nsc::derive_seed(seed, 2));
    net.params.back() += cfg.at("u-bias").get<double>();
    Mat pre;
    const std::string premap = cfg.at("u-premap");
    if (premap == "sync") {
      if (sys.d % 2 != 0)
        throw std::invalid_argument("sync premap needs an even state dim");
      pre = nsc::sync_deviation_map(sys.d / 2);
    } else if (premap != "none") {
      throw std::invalid_argument("unknown u-premap: " + premap);
    }
    u0 = nsc::Controller::neural_block(std::move(net), sys.d, r, std::move(pre));
  } else {
    throw std::invalid_argument("unknown controller kind: " + ckind);
  }

  // Lyapunov candidate (ES only)
  nsc::LyapunovNet V = nsc::QuadraticV{};
  const nsc::LyapunovNet* vp = nullptr;
  if (tc.loss == nsc::LossKind::ES) {
    const std::string lkind = cfg.at("lyapunov");
    const auto v_hidden = cfg.at("v-arch").get<std::vector<int>>();
    const double epsilon = cfg.at("epsilon").get<double>();
    if (lkind == "icnn") {
      std::vector<int> v_arch{sys.d};
      v_arch.insert(v_arch.end(), v_hidden.begin(), v_hidden.end());
      v_arch.push_back(1);
      auto icnn = nsc::IcnnV::make(v_arch, epsilon, cfg.at("d-knot"));
      icnn.init_params(nsc::derive_seed(seed, 1));
      V = std::move(icnn);
    } else if (lkind == "quadratic") {
      auto quad = nsc::QuadraticV::make(sys.d, v_hidden, cfg.at("m"), epsilon);
      quad.net.init_params(nsc::derive_seed(seed, 1));
      V = std::move(quad);
    } else {
      throw std::invalid_argument("unknown lyapunov kind: " + lkind);
    }
    vp = &V;
  }

  auto res = nsc::train(tc, sys, vp, u0);

  bool finite = std::isfinite(res.best_loss);
  for (const auto& rep : res.reports) finite = finite && std::isfinite(rep.loss);

  std::vector<std::string> outputs{"controller.json", "log.jsonl",
                                   "summary.json"};
  nsc::write_json_file((out_dir / "controller.json").string(),
                       nsc::controller_to_json(res.u));
  if (res.has_V) {
    nsc::write_json_file((out_dir / "lyapunov.json").string(),
                         nsc::lyapunov_to_json(res.V));
    outputs.push_back("lyapunov.json");
  }
  {
    // wall_ms is zeroed so the log replays byte-exactly; timing goes to stderr
    auto reports = res.reports;
    for (auto& rep : reports) rep.wall_ms = 0.0;
    std::ofstream log(out_dir / "log.jsonl", std::ios::binary);
    nsc::write_training_log(log, reports);
  }
  Json summary;
  summary["converged"] = res.converged;
  summary["iterations"] = res.iterations;
  summary["best_loss"] = res.best_loss;
  summary["final_loss"] = res.reports.empty() ? res.best_loss
                                              : res.reports.back().loss;
  nsc::write_json_file((out_dir / "summary.json").string(), summary);
  write_manifest(out_dir, "train", cfg, outputs);

  double wall = 0.0;
  for (const auto& rep : res.reports) wall += rep.wall_ms;
  std::cerr << "train: " << res.iterations << " iterations, best loss "
            << res.best_loss << ", " << wall << " ms\n";

  if (!finite) return 3;
  return res.converged ? 0 : 4;
}

// ------------------------------------------------------------- simulate ----

int run_simulate(const Json& cfg, const fs::path& out_dir) {
  const auto bundle =
      nsc::make_system(cfg.at("system"), params_from_json(cfg.at("params")));
  const auto& sys = bundle.sys;
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

  nsc::Controller u;
  const nsc::Controller* up = nullptr;
  const std::string cfile = cfg.at("controller-file");
  if (!cfile.empty()) {
    u = nsc::controller_from_json(nsc::read_json_file(cfile));
    if (u.d != sys.d)
      throw std::invalid_argument("controller dimension mismatch: controller d=" +
                                  std::to_string(u.d) + ", system d=" +
                                  std::to_string(sys.d));
    up = &u;
  }

  const int n = cfg.at("n").get<int>();
  const double dt = cfg.at("dt").get<double>();
  const double T = cfg.at("T").get<double>();
  const double eps = cfg.at("eps").get<double>();
  if (n < 1) throw std::invalid_argument("n must be >= 1");

  const auto x0 = cfg.at("x0").get<Vec>();
  const auto x0_lo = cfg.at("x0-lo").get<Vec>();
  const auto x0_hi = cfg.at("x0-hi").get<Vec>();
  const double x0_excl = cfg.at("x0-exclusion").get<double>();
  std::function<Vec(nsc::RngStream&)> sampler;
  if (!x0.empty()) {
    if (x0.size() != static_cast<std::size_t>(sys.d))
      throw std::invalid_argument("x0 must have one entry per state axis");
    sampler = [x0](nsc::RngStream&) { return x0; };
  } else if (!x0_lo.empty() || !x0_hi.empty()) {
    if (x0_lo.size() != static_cast<std::size_t>(sys.d) ||
        x0_hi.size() != static_cast<std::size_t>(sys.d))
      throw std::invalid_argument("x0-lo/x0-hi must have one entry per axis");
    sampler = [x0_lo, x0_hi, x0_excl](nsc::RngStream& rng) {
      Vec x(x0_lo.size());
      for (int tries = 0; tries < 100000; ++tries) {
        for (std::size_t i = 0; i < x.size(); ++i)
          x[i] = rng.next_uniform(x0_lo[i], x0_hi[i]);
        if (nsc::norm2(x) >= x0_excl) return x;
      }
      throw std::runtime_error("x0 sampler: exclusion rejects everything");
    };
  } else {
    throw std::invalid_argument("provide --x0 or --x0-lo/--x0-hi");
  }

  int store_every = cfg.at("store-every").get<int>();
  if (store_every == 0) {
    const auto steps = static_cast<long long>(std::ceil(T / dt));
    store_every = static_cast<int>(std::max(1ll, steps / 1000));
  }

  const auto ens = nsc::ensemble(sys, up, sampler, n, dt, T,
                                 eps > 0.0 ? std::optional<double>(eps)
                                           : std::nullopt,
                                 seed, store_every);

  std::vector<std::string> outputs;
  for (int i = 0; i < n; ++i) {
    const std::string name = "traj_" + std::to_string(i) + ".csv";
    nsc::write_text_file((out_dir / name).string(),
                         nsc::trajectory_csv(ens.trajectories[i]));
    outputs.push_back(name);
  }

  int n_hit = 0, n_ct = 0;
  Json summary;
  summary["n"] = n;
  summary["dt"] = dt;
  summary["T"] = T;
  summary["eps"] = eps;
  summary["n_diverged"] = ens.n_diverged;
  summary["fraction_converged"] = ens.fraction_converged(eps > 0 ? eps : 0.05, T);
  const double mht = ens.mean_hitting_time(&n_hit);
  set_opt_num(summary, "mean_hitting_time", mht);
  summary["n_hit"] = n_hit;
  summary["mean_energy"] = ens.mean_energy();
  summary["di"] = ens.mean_final_norm();
  set_opt_num(summary, "ct", ens.mean_time_below(0.05, &n_ct));
  summary["n_ct_reached"] = n_ct;
  nsc::write_json_file((out_dir / "summary.json").string(), summary);
  outputs.push_back("summary.json");
  write_manifest(out_dir, "simulate", cfg, outputs);

  return ens.n_diverged > 0 ? 3 : 0;
}

// --------------------------------------------------------------- bounds ----

int run_bounds(const Json& cfg, const fs::path& out_dir) {
  const int theorem = cfg.at("theorem").get<int>();
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const auto x0 = cfg.at("x0").get<Vec>();
  const double eps = cfg.at("eps").get<double>();
  if (x0.empty()) throw std::invalid_argument("--x0 is required");
  const double x0_norm = nsc::norm2(x0);

  // optional system + controller + V
  std::optional<nsc::SystemBundle> bundle;
  if (!cfg.at("system").get<std::string>().empty())
    bundle = nsc::make_system(cfg.at("system"),
                              params_from_json(cfg.at("params")));
  nsc::Controller u;
  const nsc::Controller* up = nullptr;
  if (!cfg.at("controller-file").get<std::string>().empty()) {
    u = nsc::controller_from_json(
        nsc::read_json_file(cfg.at("controller-file")));
    up = &u;
  }
  nsc::LyapunovNet V = nsc::QuadraticV{};
  bool has_V = false;
  if (!cfg.at("lyapunov-file").get<std::string>().empty()) {
    V = nsc::lyapunov_from_json(nsc::read_json_file(cfg.at("lyapunov-file")));
    has_V = true;
  }
  if (bundle) {
    if (up && u.d != bundle->sys.d)
      throw std::invalid_argument("controller dimension mismatch");
    if (x0.size() != static_cast<std::size_t>(bundle->sys.d))
      throw std::invalid_argument("x0 dimension mismatch");
  }

  Vec lo, hi;
  if (bundle) resolve_box(cfg, bundle->sys.d, lo, hi);
  const int n_est = cfg.at("n-est").get<int>();
  double box_radius = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i)
    box_radius = std::max({box_radius, std::abs(lo[i]), std::abs(hi[i])});

  Json inputs;
  inputs["x0"] = x0;
  inputs["eps"] = eps;
  Json flags = Json::object();
  std::optional<nsc::BoundResult> bound;
  std::string why_invalid;

  try {
    if (theorem == 3) {
      double k = get_opt_num(cfg, "k");
      if (std::isnan(k)) {
        if (up && u.kind == nsc::ControllerKind::Linear && u.lin_scalar)
          k = std::abs(u.lin_k[0]);
        else
          throw std::invalid_argument(
              "theorem 3 needs --k or a scalar linear controller file");
      }
      double L = get_opt_num(cfg, "L");
      if (std::isnan(L)) {
        if (!bundle)
          throw std::invalid_argument("theorem 3 needs --L or --system");
        const auto est = nsc::estimate_L(bundle->sys, lo, hi, n_est,
                                         nsc::derive_seed(seed, 11));
        L = est.L;
        inputs["L_argmax"] = est.argmax;
      }
      inputs["k"] = k;
      inputs["L"] = L;
      flags["gain_dominates_drift"] = k * k > 2.0 * L;
      if (flags["gain_dominates_drift"].get<bool>())
        bound = nsc::thm3_bounds(L, k, x0_norm, eps);
      else
        why_invalid = "k^2 <= 2L";
      if (!up && bundle) {
        // synthesize the linear controller for Monte Carlo validation
        u = nsc::Controller::linear(k, bundle->sys.d);
        up = &u;
      }
    } else if (theorem == 4) {
      if (!bundle || !up || !has_V)
        throw std::invalid_argument(
            "theorem 4 needs --system, --controller-file and --lyapunov-file");
      const auto est = nsc::estimate_es_constants(V, bundle->sys, up, lo, hi,
                                                  n_est,
                                                  nsc::derive_seed(seed, 12));
      const auto lest = nsc::estimate_L(bundle->sys, lo, hi, n_est,
                                        nsc::derive_seed(seed, 11));
      const double k_u = nsc::controller_lipschitz_upper(u, box_radius);
      const double v_x0 = nsc::lyap_value(V, x0);
      inputs["c1"] = est.c1;
      inputs["c2"] = est.c2;
      inputs["c3"] = est.c3;
      inputs["p"] = est.p;
      inputs["v_x0"] = v_x0;
      inputs["L"] = lest.L;
      inputs["k_u"] = k_u;
      flags["certificate_margin"] = est.valid;
      if (est.valid)
        bound = nsc::thm4_bounds(est.c1, est.c2, est.c3, est.p, v_x0, lest.L,
                                 k_u, x0_norm, eps);
      else
        why_invalid = "c3 <= 0 or c3 - 2 c2 <= 0 on the sampled box";
    } else if (theorem == 5) {
      if (!bundle)
        throw std::invalid_argument("theorem 5 needs --system");
      const double alpha = cfg.at("alpha").get<double>();
      const auto est = nsc::estimate_delta_eps(bundle->sys, up, alpha, eps, lo,
                                               hi, n_est,
                                               nsc::derive_seed(seed, 13));
      const auto lest = nsc::estimate_L(bundle->sys, lo, hi, n_est,
                                        nsc::derive_seed(seed, 11));
      const double k_u =
          up ? nsc::controller_lipschitz_upper(u, box_radius) : 0.0;
      inputs["alpha"] = alpha;
      inputs["delta_eps"] = est.delta;
      inputs["L"] = lest.L;
      inputs["k_u"] = k_u;
      flags["margin_positive"] = est.valid;
      if (est.valid)
        bound = nsc::thm5_bounds(alpha, est.delta, lest.L, k_u, x0_norm, eps);
      else
        why_invalid = "hinge margin is not positive on the sampled box";
    } else {
      throw std::invalid_argument("theorem must be 3, 4 or 5");
    }
  } catch (const std::domain_error& e) {
    // formula preconditions decide applicability, not success
    why_invalid = e.what();
    bound.reset();
  }

  Json report;
  report["theorem"] = theorem;
  report["inputs"] = inputs;
  set_opt_num(report, "T_eps",
              bound ? bound->t_eps : std::numeric_limits<double>::quiet_NaN());
  set_opt_num(report, "energy_bound",
              bound ? bound->energy_bound
                    : std::numeric_limits<double>::quiet_NaN());
  flags["applicable"] = bound.has_value();
  if (!why_invalid.empty()) flags["reason"] = why_invalid;
  report["validity_flags"] = flags;

  report["monte_carlo"] = nullptr;
  if (bound && cfg.at("validate").get<bool>()) {
    if (!bundle)
      throw std::invalid_argument("--validate needs --system");
    const auto mc = nsc::validate_bound(bundle->sys, up, bound->t_eps, x0, eps,
                                        cfg.at("n").get<int>(),
                                        cfg.at("dt").get<double>(),
                                        nsc::derive_seed(seed, 14));
    Json m;
    m["mean"] = mc.mean;
    m["stderr"] = mc.std_error;
    m["n"] = mc.n;
    m["censored"] = mc.n_censored;
    m["horizon"] = mc.horizon;
    m["pass"] = mc.pass;
    m["trivial"] = mc.trivial;
    report["monte_carlo"] = m;
  }

  nsc::write_json_file((out_dir / "summary.json").string(), report);
  write_manifest(out_dir, "bounds", cfg, {"summary.json"});
  return 0;
}

// ---------------------------------------------------------------- bench ----

int run_bench(const Json& cfg, const fs::path& out_dir) {
  const auto rows = nsc::bench_rows(cfg.at("suite"),
                                    cfg.at("seed").get<std::uint64_t>());
  nsc::write_text_file((out_dir / "bench.csv").string(), nsc::bench_csv(rows));
  write_manifest(out_dir, "bench", cfg, {"bench.csv"},
                 "timing columns (train_per_iter_ms) are wall-clock and "
                 "excluded from the bit-exact replay guarantee");
  for (const auto& row : rows)
    if (row.status != "ok")
      std::cerr << "bench: " << row.method << ": " << row.status << "\n";
  return 0;
}

int dispatch(const std::string& command, const Json& cfg,
             const fs::path& out_dir) {
  if (command == "train") return run_train(cfg, out_dir);
  if (command == "simulate") return run_simulate(cfg, out_dir);
  if (command == "bounds") return run_bounds(cfg, out_dir);
  if (command == "bench") return run_bench(cfg, out_dir);
  throw std::invalid_argument("manifest holds unknown command: " + command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural stochastic control toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::uint64_t default_seed = 0;
  try {
    default_seed = env_seed();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  // staging variables shared across subcommands
  struct TrainArgs {
    std::string system, out_dir, config;
    std::vector<std::string> params;
    std::string loss = "es", lyapunov = "icnn", controller = "shift";
    std::string premap = "none", u_activation = "tanh";
    std::string drift_factor = "two";
    double b = 2.5, alpha = 0.5, epsilon = 1e-3, d_knot = 0.1, u_bias = 0.0;
    double box = 4.0, exclusion = -1.0, lr = 0.01;
    std::vector<double> box_lo, box_hi;
    std::vector<int> v_arch{16, 16}, u_arch{16};
    int m = 0, r = 1, n_samples = 500, max_iters = 500, zero_streak = 10;
    bool resample = true;
    std::uint64_t seed;
  } ta;
  ta.seed = default_seed;

  ConfigMerge train_merge;
  auto* train_cmd =
      app.add_subcommand("train", "fit a diffusion controller (and V for ES)");
  {
    auto* c = train_cmd;
    auto& m = train_merge;
    m.bind(c->add_option("--system", ta.system, "catalogue system name")
               ->required(),
           "system", ta.system);
    m.bind(c->add_option("--param", ta.params,
                         "system parameter override, name=value"),
           "param", ta.params);
    m.bind(c->add_option("--loss", ta.loss, "es | as"), "loss", ta.loss);
    m.bind(c->add_option("--b", ta.b, "ES hinge factor (> 2)"), "b", ta.b);
    m.bind(c->add_option("--alpha", ta.alpha, "AS exponent in (0,1)"), "alpha",
           ta.alpha);
    m.bind(c->add_option("--drift-factor", ta.drift_factor, "two | one"),
           "drift-factor", ta.drift_factor);
    m.bind(c->add_option("--lyapunov", ta.lyapunov, "icnn | quadratic"),
           "lyapunov", ta.lyapunov);
    m.bind(c->add_option("--v-arch", ta.v_arch, "V hidden widths"), "v-arch",
           ta.v_arch);
    m.bind(c->add_option("--epsilon", ta.epsilon, "V floor coefficient"),
           "epsilon", ta.epsilon);
    m.bind(c->add_option("--m", ta.m, "quadratic V rows (0 = d)"), "m", ta.m);
    m.bind(c->add_option("--d-knot", ta.d_knot, "smoothed-relu knot"), "d-knot",
           ta.d_knot);
    m.bind(c->add_option("--controller", ta.controller,
                         "shift | diag | block"),
           "controller", ta.controller);
    m.bind(c->add_option("--u-arch", ta.u_arch, "controller hidden widths"),
           "u-arch", ta.u_arch);
    m.bind(c->add_option("--r", ta.r, "diffusion channels"), "r", ta.r);
    m.bind(c->add_option("--u-premap", ta.premap, "none | sync"), "u-premap",
           ta.premap);
    m.bind(c->add_option("--u-activation", ta.u_activation,
                         "tanh | identity | smoothed_relu"),
           "u-activation", ta.u_activation);
    m.bind(c->add_option("--u-bias", ta.u_bias,
                         "added to the last bias after init"),
           "u-bias", ta.u_bias);
    m.bind(c->add_option("--box", ta.box, "symmetric sampling half-width"),
           "box", ta.box);
    m.bind(c->add_option("--box-lo", ta.box_lo, "per-axis lower bounds"),
           "box-lo", ta.box_lo);
    m.bind(c->add_option("--box-hi", ta.box_hi, "per-axis upper bounds"),
           "box-hi", ta.box_hi);
    m.bind(c->add_option("--n-samples", ta.n_samples, "batch size"),
           "n-samples", ta.n_samples);
    m.bind(c->add_flag("--resample,!--no-resample", ta.resample,
                       "fresh batch each iteration"),
           "resample", ta.resample);
    m.bind(c->add_option("--max-iters", ta.max_iters, "iteration cap"),
           "max-iters", ta.max_iters);
    m.bind(c->add_option("--zero-streak", ta.zero_streak,
                         "zero batches to declare convergence"),
           "zero-streak", ta.zero_streak);
    m.bind(c->add_option("--exclusion", ta.exclusion,
                         "origin exclusion radius (< 0 = auto)"),
           "exclusion", ta.exclusion);
    m.bind(c->add_option("--lr", ta.lr, "Adam learning rate"), "lr", ta.lr);
    m.bind(c->add_option("--seed", ta.seed, "base seed (default NSC_SEED)"),
           "seed", ta.seed);
    c->add_option("--out-dir", ta.out_dir, "output directory")->required();
    c->add_option("--config", ta.config, "JSON config merged under flags");
  }

  struct SimArgs {
    std::string system, out_dir, config, controller_file;
    std::vector<std::string> params;
    std::vector<double> x0, x0_lo, x0_hi;
    double x0_exclusion = 0.0, dt = 1e-3, T = 10.0, eps = 0.05;
    int n = 1, store_every = 0;
    std::uint64_t seed;
  } sa;
  sa.seed = default_seed;

  ConfigMerge sim_merge;
  auto* sim_cmd = app.add_subcommand("simulate", "run a trajectory ensemble");
  {
    auto* c = sim_cmd;
    auto& m = sim_merge;
    m.bind(c->add_option("--system", sa.system, "catalogue system name")
               ->required(),
           "system", sa.system);
    m.bind(c->add_option("--param", sa.params, "system parameter override"),
           "param", sa.params);
    m.bind(c->add_option("--controller-file", sa.controller_file,
                         "controller JSON (omit for uncontrolled)"),
           "controller-file", sa.controller_file);
    m.bind(c->add_option("--x0", sa.x0, "fixed start (one entry per axis)"),
           "x0", sa.x0);
    m.bind(c->add_option("--x0-lo", sa.x0_lo, "sampler lower bounds"), "x0-lo",
           sa.x0_lo);
    m.bind(c->add_option("--x0-hi", sa.x0_hi, "sampler upper bounds"), "x0-hi",
           sa.x0_hi);
    m.bind(c->add_option("--x0-exclusion", sa.x0_exclusion,
                         "sampler keeps ||x0|| above this"),
           "x0-exclusion", sa.x0_exclusion);
    m.bind(c->add_option("--n", sa.n, "ensemble size"), "n", sa.n);
    m.bind(c->add_option("--dt", sa.dt, "step size"), "dt", sa.dt);
    m.bind(c->add_option("--T", sa.T, "horizon"), "T", sa.T);
    m.bind(c->add_option("--eps", sa.eps,
                         "hitting radius (0 disables tracking)"),
           "eps", sa.eps);
    m.bind(c->add_option("--store-every", sa.store_every,
                         "grid thinning (0 = auto, about 1000 rows)"),
           "store-every", sa.store_every);
    m.bind(c->add_option("--seed", sa.seed, "base seed (default NSC_SEED)"),
           "seed", sa.seed);
    c->add_option("--out-dir", sa.out_dir, "output directory")->required();
    c->add_option("--config", sa.config, "JSON config merged under flags");
  }

  struct BoundArgs {
    std::string system, out_dir, config, controller_file, lyapunov_file;
    std::vector<std::string> params;
    int theorem = 3, n_est = 20000, n = 500;
    std::vector<double> x0;
    double eps = 0.1, k = std::numeric_limits<double>::quiet_NaN();
    double L = std::numeric_limits<double>::quiet_NaN();
    double alpha = 0.5, box = 4.0, dt = 1e-3;
    std::vector<double> box_lo, box_hi;
    bool validate = false;
    std::uint64_t seed;
  } ba;
  ba.seed = default_seed;

  ConfigMerge bounds_merge;
  auto* bounds_cmd =
      app.add_subcommand("bounds", "hitting-time and energy bound report");
  {
    auto* c = bounds_cmd;
    auto& m = bounds_merge;
    m.bind(c->add_option("--theorem", ba.theorem, "3 | 4 | 5")->required(),
           "theorem", ba.theorem);
    m.bind(c->add_option("--system", ba.system, "catalogue system name"),
           "system", ba.system);
    m.bind(c->add_option("--param", ba.params, "system parameter override"),
           "param", ba.params);
    m.bind(c->add_option("--controller-file", ba.controller_file,
                         "controller JSON"),
           "controller-file", ba.controller_file);
    m.bind(c->add_option("--lyapunov-file", ba.lyapunov_file,
                         "Lyapunov JSON (theorem 4)"),
           "lyapunov-file", ba.lyapunov_file);
    m.bind(c->add_option("--k", ba.k, "linear gain (theorem 3)"), "k", ba.k);
    m.bind(c->add_option("--L", ba.L, "one-sided drift bound (theorem 3)"),
           "L", ba.L);
    m.bind(c->add_option("--alpha", ba.alpha, "exponent (theorem 5)"), "alpha",
           ba.alpha);
    m.bind(c->add_option("--x0", ba.x0, "start point")->required(), "x0",
           ba.x0);
    m.bind(c->add_option("--eps", ba.eps, "target radius"), "eps", ba.eps);
    m.bind(c->add_option("--box", ba.box, "estimation half-width"), "box",
           ba.box);
    m.bind(c->add_option("--box-lo", ba.box_lo, "per-axis lower bounds"),
           "box-lo", ba.box_lo);
    m.bind(c->add_option("--box-hi", ba.box_hi, "per-axis upper bounds"),
           "box-hi", ba.box_hi);
    m.bind(c->add_option("--n-est", ba.n_est, "estimator sample count"),
           "n-est", ba.n_est);
    m.bind(c->add_flag("--validate", ba.validate,
                       "attach a Monte Carlo check"),
           "validate", ba.validate);
    m.bind(c->add_option("--n", ba.n, "Monte Carlo paths"), "n", ba.n);
    m.bind(c->add_option("--dt", ba.dt, "Monte Carlo step size"), "dt", ba.dt);
    m.bind(c->add_option("--seed", ba.seed, "base seed (default NSC_SEED)"),
           "seed", ba.seed);
    c->add_option("--out-dir", ba.out_dir, "output directory")->required();
    c->add_option("--config", ba.config, "JSON config merged under flags");
  }

  struct BenchArgs {
    std::string suite, out_dir, config;
    std::uint64_t seed;
  } ga;
  ga.seed = default_seed;

  ConfigMerge bench_merge;
  auto* bench_cmd =
      app.add_subcommand("bench", "end-to-end benchmark suites (CSV)");
  {
    auto* c = bench_cmd;
    bench_merge.bind(
        c->add_option("--suite", ga.suite,
                      "prop1 | energy-compare | harmonic | stuart-single | "
                      "stuart-coupled")
            ->required(),
        "suite", ga.suite);
    bench_merge.bind(c->add_option("--seed", ga.seed,
                                   "base seed (default NSC_SEED)"),
                     "seed", ga.seed);
    c->add_option("--out-dir", ga.out_dir, "output directory")->required();
    c->add_option("--config", ga.config, "JSON config merged under flags");
  }

  struct ReplayArgs {
    std::string manifest, out_dir;
  } ra;
  auto* replay_cmd =
      app.add_subcommand("replay", "re-run a manifest bit-exactly");
  replay_cmd->add_option("manifest", ra.manifest, "manifest.json path")
      ->required();
  replay_cmd->add_option("--out-dir", ra.out_dir, "output directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) {
      train_merge.apply(ta.config);
      Json cfg;
      cfg["system"] = ta.system;
      cfg["params"] = params_to_json(parse_params(ta.params));
      cfg["loss"] = ta.loss;
      cfg["b"] = ta.b;
      cfg["alpha"] = ta.alpha;
      cfg["drift-factor"] = ta.drift_factor;
      cfg["lyapunov"] = ta.lyapunov;
      cfg["v-arch"] = ta.v_arch;
      cfg["epsilon"] = ta.epsilon;
      cfg["m"] = ta.m;
      cfg["d-knot"] = ta.d_knot;
      cfg["controller"] = ta.controller;
      cfg["u-arch"] = ta.u_arch;
      cfg["r"] = ta.r;
      cfg["u-premap"] = ta.premap;
      cfg["u-activation"] = ta.u_activation;
      cfg["u-bias"] = ta.u_bias;
      cfg["box"] = ta.box;
      cfg["box-lo"] = ta.box_lo;
      cfg["box-hi"] = ta.box_hi;
      cfg["n-samples"] = ta.n_samples;
      cfg["resample"] = ta.resample;
      cfg["max-iters"] = ta.max_iters;
      cfg["zero-streak"] = ta.zero_streak;
      cfg["exclusion"] = ta.exclusion;
      cfg["lr"] = ta.lr;
      cfg["seed"] = ta.seed;
      return run_train(cfg, prepare_out_dir(ta.out_dir));
    }
    if (sim_cmd->parsed()) {
      sim_merge.apply(sa.config);
      Json cfg;
      cfg["system"] = sa.system;
      cfg["params"] = params_to_json(parse_params(sa.params));
      cfg["controller-file"] = sa.controller_file;
      cfg["x0"] = sa.x0;
      cfg["x0-lo"] = sa.x0_lo;
      cfg["x0-hi"] = sa.x0_hi;
      cfg["x0-exclusion"] = sa.x0_exclusion;
      cfg["n"] = sa.n;
      cfg["dt"] = sa.dt;
      cfg["T"] = sa.T;
      cfg["eps"] = sa.eps;
      cfg["store-every"] = sa.store_every;
      cfg["seed"] = sa.seed;
      return run_simulate(cfg, prepare_out_dir(sa.out_dir));
    }
    if (bounds_cmd->parsed()) {
      bounds_merge.apply(ba.config);
      Json cfg;
      cfg["theorem"] = ba.theorem;
      cfg["system"] = ba.system;
      cfg["params"] = params_to_json(parse_params(ba.params));
      cfg["controller-file"] = ba.controller_file;
      cfg["lyapunov-file"] = ba.lyapunov_file;
      set_opt_num(cfg, "k", ba.k);
      set_opt_num(cfg, "L", ba.L);
      cfg["alpha"] = ba.alpha;
      cfg["x0"] = ba.x0;
      cfg["eps"] = ba.eps;
      cfg["box"] = ba.box;
      cfg["box-lo"] = ba.box_lo;
      cfg["box-hi"] = ba.box_hi;
      cfg["n-est"] = ba.n_est;
      cfg["validate"] = ba.validate;
      cfg["n"] = ba.n;
      cfg["dt"] = ba.dt;
      cfg["seed"] = ba.seed;
      return run_bounds(cfg, prepare_out_dir(ba.out_dir));
    }
    if (bench_cmd->parsed()) {
      bench_merge.apply(ga.config);
      Json cfg;
      cfg["suite"] = ga.suite;
      cfg["seed"] = ga.seed;
      return run_bench(cfg, prepare_out_dir(ga.out_dir));
    }
    if (replay_cmd->parsed()) {
      const Json m = nsc::read_json_file(ra.manifest);
      return dispatch(m.at("command"), m.at("config"),
                      prepare_out_dir(ra.out_dir));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
