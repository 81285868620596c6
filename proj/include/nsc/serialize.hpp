#pragma once
// JSON schemas for networks, Lyapunov candidates and controllers, JSON-lines
// training logs, and CSV trajectory export.  Doubles round-trip bit-exactly:
// the JSON writer emits shortest-round-trip decimal and the CSV writer uses
// std::to_chars.

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <nsc/control.hpp>
#include <nsc/lyapunov.hpp>
#include <nsc/mlp.hpp>
#include <nsc/sde.hpp>
#include <nsc/train.hpp>

namespace nsc {

using Json = nlohmann::json;

// ---- networks: {arch, activation, d_knot, layers: [{W, b}]} ----

inline Json net_to_json(const MlpNet& n) {
  Json j;
  j["arch"] = n.arch;
  j["activation"] = to_string(n.act);
  j["d_knot"] = n.d_knot;
  Json layers = Json::array();
  for (std::size_t l = 0; l + 1 < n.arch.size(); ++l) {
    const std::size_t in = n.arch[l], out = n.arch[l + 1];
    const std::size_t woff = n.weight_offset(l), boff = n.bias_offset(l);
    Json layer;
    layer["W"] = std::vector<double>(n.params.begin() + woff,
                                     n.params.begin() + woff + in * out);
    layer["b"] = std::vector<double>(n.params.begin() + boff,
                                     n.params.begin() + boff + out);
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  return j;
}

inline MlpNet net_from_json(const Json& j) {
  auto net = MlpNet::make(j.at("arch").get<std::vector<int>>(),
                          activation_from_string(j.at("activation")),
                          j.at("d_knot").get<double>());
  const Json& layers = j.at("layers");
  if (layers.size() != net.layer_count())
    throw std::invalid_argument("net_from_json: layer count mismatch");
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto w = layers[l].at("W").get<std::vector<double>>();
    const auto b = layers[l].at("b").get<std::vector<double>>();
    const std::size_t in = net.arch[l], out = net.arch[l + 1];
    if (w.size() != in * out || b.size() != out)
      throw std::invalid_argument("net_from_json: layer shape mismatch");
    std::copy(w.begin(), w.end(), net.params.begin() + net.weight_offset(l));
    std::copy(b.begin(), b.end(), net.params.begin() + net.bias_offset(l));
  }
  return net;
}

// ---- Lyapunov candidates: net schema + lyapunov_kind / epsilon / m ----

inline Json lyapunov_to_json(const LyapunovNet& v) {
  if (const auto* q = std::get_if<QuadraticV>(&v)) {
    Json j = net_to_json(q->net);
    j["lyapunov_kind"] = "quadratic";
    j["epsilon"] = q->epsilon;
    j["m"] = q->m;
    return j;
  }
  const auto& icnn = std::get<IcnnV>(v);
  Json j;
  j["lyapunov_kind"] = "icnn";
  j["arch"] = icnn.arch;
  j["activation"] = to_string(icnn.outer_act);
  j["inner_map"] = to_string(icnn.inner);
  j["d_knot"] = icnn.d_knot;
  j["epsilon"] = icnn.epsilon;
  j["m"] = 0;
  Json layers = Json::array();
  const int d = icnn.arch.front();
  for (std::size_t i = 0; i < icnn.stage_count(); ++i) {
    const std::size_t out = icnn.arch[i + 1];
    std::size_t off = icnn.stage_offset(i);
    Json layer;
    if (i > 0) {
      const std::size_t un = static_cast<std::size_t>(icnn.arch[i]) * out;
      layer["U"] = std::vector<double>(icnn.params.begin() + off,
                                       icnn.params.begin() + off + un);
      off += un;
    }
    const std::size_t wn = static_cast<std::size_t>(d) * out;
    layer["W"] = std::vector<double>(icnn.params.begin() + off,
                                     icnn.params.begin() + off + wn);
    off += wn;
    layer["b"] = std::vector<double>(icnn.params.begin() + off,
                                     icnn.params.begin() + off + out);
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  return j;
}

inline LyapunovNet lyapunov_from_json(const Json& j) {
  const std::string kind = j.at("lyapunov_kind");
  if (kind == "quadratic") {
    QuadraticV q;
    q.net = net_from_json(j);
    q.m = j.at("m").get<int>();
    q.epsilon = j.at("epsilon").get<double>();
    if (q.m < 1 || q.net.output_dim() != q.m * q.net.input_dim())
      throw std::invalid_argument("lyapunov_from_json: quadratic shape");
    if (q.epsilon <= 0.0)
      throw std::invalid_argument("lyapunov_from_json: epsilon > 0");
    return q;
  }
  if (kind != "icnn")
    throw std::invalid_argument("lyapunov_from_json: unknown kind " + kind);
  auto icnn = IcnnV::make(j.at("arch").get<std::vector<int>>(),
                          j.at("epsilon").get<double>(),
                          j.at("d_knot").get<double>());
  icnn.outer_act = activation_from_string(j.at("activation"));
  icnn.inner = inner_map_from_string(j.at("inner_map"));
  const Json& layers = j.at("layers");
  if (layers.size() != icnn.stage_count())
    throw std::invalid_argument("lyapunov_from_json: stage count mismatch");
  const int d = icnn.arch.front();
  for (std::size_t i = 0; i < icnn.stage_count(); ++i) {
    const std::size_t out = icnn.arch[i + 1];
    std::size_t off = icnn.stage_offset(i);
    if (i > 0) {
      const auto u = layers[i].at("U").get<std::vector<double>>();
      if (u.size() != static_cast<std::size_t>(icnn.arch[i]) * out)
        throw std::invalid_argument("lyapunov_from_json: U shape");
      std::copy(u.begin(), u.end(), icnn.params.begin() + off);
      off += u.size();
    }
    const auto w = layers[i].at("W").get<std::vector<double>>();
    const auto b = layers[i].at("b").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(d) * out || b.size() != out)
      throw std::invalid_argument("lyapunov_from_json: layer shape");
    std::copy(w.begin(), w.end(), icnn.params.begin() + off);
    std::copy(b.begin(), b.end(), icnn.params.begin() + off + w.size());
  }
  return icnn;
}

// ---- matrices and controllers ----

inline Json mat_to_json(const Mat& m) {
  Json j;
  j["rows"] = m.rows;
  j["cols"] = m.cols;
  j["data"] = m.a;
  return j;
}

inline Mat mat_from_json(const Json& j) {
  Mat m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows * m.cols)
    throw std::invalid_argument("mat_from_json: data size");
  m.a = std::move(data);
  return m;
}

inline Json controller_to_json(const Controller& u) {
  Json j;
  j["controller_kind"] = to_string(u.kind);
  j["d"] = u.d;
  j["r"] = u.r;
  j["pin_mask"] = std::vector<int>(u.pin_mask.begin(), u.pin_mask.end());
  if (u.kind == ControllerKind::Linear) {
    j["k"] = u.lin_k;
    j["k_scalar"] = u.lin_scalar;
  } else {
    j["net"] = net_to_json(u.net);
  }
  if (u.in_map.rows > 0) j["in_map"] = mat_to_json(u.in_map);
  if (u.out_rowmap.rows > 0) j["out_rowmap"] = mat_to_json(u.out_rowmap);
  return j;
}

inline Controller controller_from_json(const Json& j) {
  const ControllerKind kind = controller_kind_from_string(j.at("controller_kind"));
  const int d = j.at("d").get<int>();
  const int r = j.at("r").get<int>();
  if (d < 1 || r < 1)
    throw std::invalid_argument("controller_from_json: bad dims");
  const auto opt_mat = [&](const char* key) {
    return j.contains(key) ? mat_from_json(j.at(key)) : Mat{};
  };
  Controller u;
  switch (kind) {
    case ControllerKind::Linear: {
      const auto k = j.at("k").get<std::vector<double>>();
      if (j.at("k_scalar").get<bool>()) {
        u = Controller::linear(k.at(0), d);
      } else {
        Mat km(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
        if (k.size() != km.a.size())
          throw std::invalid_argument("controller_from_json: k matrix size");
        km.a = k;
        u = Controller::linear_matrix(km);
      }
      u.in_map = opt_mat("in_map");
      u.out_rowmap = opt_mat("out_rowmap");
      break;
    }
    case ControllerKind::NeuralShift: {
      Mat in = opt_mat("in_map"), out = opt_mat("out_rowmap");
      auto net = net_from_json(j.at("net"));
      u = (in.rows > 0 || out.rows > 0)
              ? Controller::neural_shift_wrapped(std::move(net), d, r,
                                                 std::move(in), std::move(out))
              : Controller::neural_shift(std::move(net), d, r);
      break;
    }
    case ControllerKind::NeuralDiag:
      u = Controller::neural_diag(net_from_json(j.at("net")), d);
      break;
    case ControllerKind::NeuralBlock:
      u = Controller::neural_block(net_from_json(j.at("net")), d, r,
                                   opt_mat("in_map"));
      break;
  }
  if (u.r != r)
    throw std::invalid_argument("controller_from_json: inconsistent r");
  const auto mask = j.at("pin_mask").get<std::vector<int>>();
  if (!mask.empty() && mask.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument("controller_from_json: pin mask size");
  u.pin_mask.assign(mask.begin(), mask.end());
  return u;
}

// ---- training log (JSON lines, one report per line) ----

inline Json loss_report_to_json(const LossReport& r) {
  Json j;
  j["iteration"] = r.iteration;
  j["loss"] = r.loss;
  j["active"] = r.active;
  j["wall_ms"] = r.wall_ms;
  return j;
}

inline void write_training_log(std::ostream& os,
                               const std::vector<LossReport>& reports) {
  for (const auto& r : reports) os << loss_report_to_json(r).dump() << '\n';
}

// ---- CSV trajectory export: header "t,x1,...,xd,energy" ----

namespace detail {
inline void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}
}  // namespace detail

inline std::string trajectory_csv(const Trajectory& tr) {
  std::string out = "t";
  const std::size_t d = tr.states.empty() ? 0 : tr.states.front().size();
  for (std::size_t i = 1; i <= d; ++i) {
    out += ",x";
    out += std::to_string(i);
  }
  out += ",energy\n";
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    detail::append_double(out, tr.times[k]);
    for (double v : tr.states[k]) {
      out += ',';
      detail::append_double(out, v);
    }
    out += ',';
    detail::append_double(out, tr.energy_acc[k]);
    out += '\n';
  }
  return out;
}

// ---- file helpers ----

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << body;
  if (!os.flush()) throw std::runtime_error("write failed: " + path);
}

inline void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline Json read_json_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return Json::parse(is);
}

}  // namespace nsc
