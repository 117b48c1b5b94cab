#pragma once

#include <sdtk/controllability.hpp>
#include <sdtk/jsr.hpp>
#include <sdtk/model.hpp>
#include <sdtk/signals.hpp>
#include <sdtk/simulate.hpp>
#include <sdtk/synthesis.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdtk {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Numeric text: 12 significant digits, '.' decimal point, no locale surprises.

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::string(buf);
}

inline std::string format_scalar(double x) { return format_double(x); }
inline std::string format_scalar(const Rational& r) { return to_string(r); }

// ---------------------------------------------------------------------------
// Scalar parsing. Exact mode refuses non-integer JSON numbers: nlohmann has
// already rounded them to double, so the intended value is unrecoverable.
// Write "2/5" or "0.4" as a string instead.

template <class S>
S parse_scalar(const Json& j);

template <>
inline Rational parse_scalar<Rational>(const Json& j) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number())
    throw std::invalid_argument(
        "exact mode: non-integer numeric literal " + j.dump() +
        " would be rounded; quote it as a string");
  throw std::invalid_argument("cannot parse scalar from " + j.dump());
}

template <>
inline double parse_scalar<double>(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (auto pos = s.find('/'); pos != std::string::npos)
      return parse_rational(s).to_double();
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing junk in number '" + s + "'");
    return v;
  }
  throw std::invalid_argument("cannot parse scalar from " + j.dump());
}

template <class S>
MatX<S> parse_matrix(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw std::invalid_argument("matrix must be a nonempty array of nonempty rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  MatX<S> M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw std::invalid_argument("matrix rows must all have the same length");
    for (Eigen::Index c = 0; c < cols; ++c)
      M(i, c) = parse_scalar<S>(row[static_cast<std::size_t>(c)]);
  }
  return M;
}

template <class S>
VecX<S> parse_numeric_vector(const Json& j) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument("vector must be a nonempty array");
  VecX<S> v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = parse_scalar<S>(j[i]);
  return v;
}

inline std::vector<int> parse_int_list(const Json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
  std::vector<int> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number_integer())
      throw std::invalid_argument(std::string(what) + " entries must be integers");
    out.push_back(e.get<int>());
  }
  return out;
}

namespace detail {

inline void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                                const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw std::invalid_argument(std::string(what) + ": unknown key '" + it.key() + "'");
  }
}

inline const Json& require_key(const Json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end())
    throw std::invalid_argument(std::string(what) + ": missing key '" + key + "'");
  return *it;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// System file: {"A": [[...]], "B": [[...]], "delays": [...], "lookahead": n,
//               "arithmetic": "rational" | "float"}.

struct SystemSpec {
  bool exact = false;
  Plant<Rational> exact_plant;  // only when exact
  Plant<double> float_plant;    // always usable
};

inline SystemSpec parse_system(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("system: expected a JSON object");
  detail::reject_unknown_keys(j, {"A", "B", "delays", "lookahead", "arithmetic"}, "system");
  const Json& arith = detail::require_key(j, "arithmetic", "system");
  if (!arith.is_string() ||
      (arith.get<std::string>() != "rational" && arith.get<std::string>() != "float"))
    throw std::invalid_argument("system: arithmetic must be \"rational\" or \"float\"");
  SystemSpec spec;
  spec.exact = arith.get<std::string>() == "rational";
  const Json& A = detail::require_key(j, "A", "system");
  const Json& B = detail::require_key(j, "B", "system");
  std::vector<int> delays = parse_int_list(detail::require_key(j, "delays", "system"), "delays");
  int lookahead = 0;
  if (auto it = j.find("lookahead"); it != j.end()) {
    if (!it->is_number_integer()) throw std::invalid_argument("system: lookahead must be an integer");
    lookahead = it->get<int>();
  }
  if (spec.exact) {
    spec.exact_plant.A = parse_matrix<Rational>(A);
    spec.exact_plant.B = parse_matrix<Rational>(B);
    spec.exact_plant.delays = delays;
    spec.exact_plant.lookahead = lookahead;
    validate_plant(spec.exact_plant);
    spec.float_plant.A = to_double(spec.exact_plant.A);
    spec.float_plant.B = to_double(spec.exact_plant.B);
    spec.float_plant.delays = delays;
    spec.float_plant.lookahead = lookahead;
  } else {
    spec.float_plant.A = parse_matrix<double>(A);
    spec.float_plant.B = parse_matrix<double>(B);
    spec.float_plant.delays = delays;
    spec.float_plant.lookahead = lookahead;
    validate_plant(spec.float_plant);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Network file: {"nodes": [...], "edges": [{"from","to","delay"}],
//                "controller_node": ..., "actuator_node": ...}.

inline NetworkGraph parse_network(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("network: expected a JSON object");
  detail::reject_unknown_keys(j, {"nodes", "edges", "controller_node", "actuator_node"},
                              "network");
  NetworkGraph g;
  const Json& nodes = detail::require_key(j, "nodes", "network");
  if (!nodes.is_array()) throw std::invalid_argument("network: nodes must be an array");
  for (const auto& n : nodes) {
    if (!n.is_string()) throw std::invalid_argument("network: node names must be strings");
    g.nodes.push_back(n.get<std::string>());
  }
  const Json& edges = detail::require_key(j, "edges", "network");
  if (!edges.is_array()) throw std::invalid_argument("network: edges must be an array");
  for (const auto& e : edges) {
    if (!e.is_object()) throw std::invalid_argument("network: each edge must be an object");
    detail::reject_unknown_keys(e, {"from", "to", "delay"}, "network edge");
    NetworkGraph::Edge edge;
    const Json& from = detail::require_key(e, "from", "network edge");
    const Json& to = detail::require_key(e, "to", "network edge");
    const Json& delay = detail::require_key(e, "delay", "network edge");
    if (!from.is_string() || !to.is_string() || !delay.is_number_integer())
      throw std::invalid_argument("network edge: from/to strings and integer delay required");
    edge.from = from.get<std::string>();
    edge.to = to.get<std::string>();
    edge.delay = delay.get<int>();
    g.edges.push_back(edge);
  }
  const Json& cn = detail::require_key(j, "controller_node", "network");
  const Json& an = detail::require_key(j, "actuator_node", "network");
  if (!cn.is_string() || !an.is_string())
    throw std::invalid_argument("network: controller_node/actuator_node must be strings");
  g.controller_node = cn.get<std::string>();
  g.actuator_node = an.get<std::string>();
  validate_network(g);
  return g;
}

// ---------------------------------------------------------------------------
// Signal file: {"kind": "...", ...}. The delay domain comes from the file's
// "domain" key if present, else from the caller (usually the system's delay
// set). Routing signals derive their domain from the network instead.

inline SwitchingSignal parse_signal(const Json& j, const std::vector<int>& fallback_domain = {},
                                    const NetworkGraph* net = nullptr) {
  if (!j.is_object()) throw std::invalid_argument("signal: expected a JSON object");
  const Json& kind = detail::require_key(j, "kind", "signal");
  if (!kind.is_string()) throw std::invalid_argument("signal: kind must be a string");
  const std::string k = kind.get<std::string>();

  auto domain_of = [&]() {
    if (auto it = j.find("domain"); it != j.end()) return parse_int_list(*it, "domain");
    if (!fallback_domain.empty()) return fallback_domain;
    throw std::invalid_argument("signal: no domain given and none available from the system");
  };

  if (k == "periodic") {
    detail::reject_unknown_keys(j, {"kind", "domain", "values"}, "signal");
    return SwitchingSignal::periodic(
        domain_of(), parse_int_list(detail::require_key(j, "values", "signal"), "values"));
  }
  if (k == "explicit") {
    detail::reject_unknown_keys(j, {"kind", "domain", "values"}, "signal");
    return SwitchingSignal::explicit_list(
        domain_of(), parse_int_list(detail::require_key(j, "values", "signal"), "values"));
  }
  if (k == "eventually_periodic") {
    detail::reject_unknown_keys(j, {"kind", "domain", "preperiod", "period"}, "signal");
    std::vector<int> pre;
    if (auto it = j.find("preperiod"); it != j.end()) pre = parse_int_list(*it, "preperiod");
    return SwitchingSignal::eventually_periodic(
        domain_of(), pre, parse_int_list(detail::require_key(j, "period", "signal"), "period"));
  }
  if (k == "random") {
    detail::reject_unknown_keys(j, {"kind", "domain", "seed", "weights"}, "signal");
    const Json& seed = detail::require_key(j, "seed", "signal");
    if (!seed.is_number_integer()) throw std::invalid_argument("signal: seed must be an integer");
    if (auto it = j.find("weights"); it != j.end()) {
      std::vector<double> w;
      for (const auto& e : *it) w.push_back(parse_scalar<double>(e));
      return SwitchingSignal::random_weighted(domain_of(), w, seed.get<std::uint64_t>());
    }
    return SwitchingSignal::random_uniform(domain_of(), seed.get<std::uint64_t>());
  }
  if (k == "routing") {
    detail::reject_unknown_keys(j, {"kind", "policy", "seed", "trace"}, "signal");
    if (net == nullptr)
      throw std::invalid_argument("signal: routing kind requires a network file");
    const Json& pol = detail::require_key(j, "policy", "signal");
    if (!pol.is_string()) throw std::invalid_argument("signal: policy must be a string");
    const std::string p = pol.get<std::string>();
    std::uint64_t seed = 0;
    if (auto it = j.find("seed"); it != j.end()) seed = it->get<std::uint64_t>();
    if (p == "round_robin") return SwitchingSignal::routing(*net, RoutingPolicy::RoundRobin);
    if (p == "uniform") return SwitchingSignal::routing(*net, RoutingPolicy::Uniform, seed);
    if (p == "trace") {
      std::vector<std::size_t> trace;
      for (int v : parse_int_list(detail::require_key(j, "trace", "signal"), "trace")) {
        if (v < 0) throw std::invalid_argument("signal: trace indices must be nonnegative");
        trace.push_back(static_cast<std::size_t>(v));
      }
      return SwitchingSignal::routing(*net, RoutingPolicy::Trace, seed, trace);
    }
    throw std::invalid_argument("signal: unknown routing policy '" + p + "'");
  }
  throw std::invalid_argument("signal: unknown kind '" + k + "'");
}

// ---------------------------------------------------------------------------
// Gain file. Two shapes:
//   delay-independent memory gain: {"K": [[...]], "memory": "input"|"state"}
//     (m rows, n + m*d_max cols; "input" memory acts on (x, v(t-d_max..t-1)),
//     the default; "state" memory means v(t) = k1 x(t-1) + k2 x(t) and is
//     supported for scalar plants with D = {0,1} only)
//   delay-dependent gains: {"N": n, "gains": [{"sigma": [...], "K": [[...]]}]}
//     (each K acts on the extended state (x, u_1..u_{d_max}))

enum class GainMemory { Input, State };

template <class S>
struct GainFile {
  bool delay_dependent = false;
  MatX<S> K;
  GainMemory memory = GainMemory::Input;
  int N = 1;
  std::map<std::vector<int>, MatX<S>> gains;
};

template <class S>
GainFile<S> parse_gain(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("gain: expected a JSON object");
  GainFile<S> g;
  if (j.contains("gains")) {
    detail::reject_unknown_keys(j, {"N", "gains"}, "gain");
    g.delay_dependent = true;
    const Json& N = detail::require_key(j, "N", "gain");
    if (!N.is_number_integer() || N.get<int>() < 1)
      throw std::invalid_argument("gain: N must be a positive integer");
    g.N = N.get<int>();
    const Json& entries = j["gains"];
    if (!entries.is_array() || entries.empty())
      throw std::invalid_argument("gain: gains must be a nonempty array");
    for (const auto& e : entries) {
      detail::reject_unknown_keys(e, {"sigma", "K"}, "gain entry");
      std::vector<int> tup = parse_int_list(detail::require_key(e, "sigma", "gain entry"), "sigma");
      if (static_cast<int>(tup.size()) != g.N)
        throw std::invalid_argument("gain: sigma tuple length must equal N");
      if (!g.gains.emplace(tup, parse_matrix<S>(detail::require_key(e, "K", "gain entry")))
               .second)
        throw std::invalid_argument("gain: duplicate sigma tuple");
    }
  } else {
    detail::reject_unknown_keys(j, {"K", "memory"}, "gain");
    g.K = parse_matrix<S>(detail::require_key(j, "K", "gain"));
    if (j.contains("memory")) {
      const Json& m = j["memory"];
      if (!m.is_string())
        throw std::invalid_argument("gain: memory must be \"input\" or \"state\"");
      const std::string s = m.get<std::string>();
      if (s == "input")
        g.memory = GainMemory::Input;
      else if (s == "state")
        g.memory = GainMemory::State;
      else
        throw std::invalid_argument("gain: memory must be \"input\" or \"state\"");
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Trajectory CSV: header t,sigma,tau,v_1..v_m,x_1..x_n, one row per step.
// Exact values print as integers or p/q; floats at 12 significant digits.

template <class S>
std::string trajectory_csv(const Trajectory<S>& traj) {
  if (traj.states.empty()) throw std::invalid_argument("csv: empty trajectory");
  const Eigen::Index m = traj.inputs[0].size();
  const Eigen::Index n = traj.states[0].x.size();
  std::ostringstream os;
  os << "t,sigma,tau";
  for (Eigen::Index i = 1; i <= m; ++i) os << ",v_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x_" << i;
  os << "\n";
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    os << t << "," << traj.sigma[t] << "," << traj.tau[t];
    for (Eigen::Index i = 0; i < m; ++i) os << "," << format_scalar(traj.inputs[t](i));
    for (Eigen::Index i = 0; i < n; ++i) os << "," << format_scalar(traj.states[t].x(i));
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Verdict JSON. Hand-emitted with a fixed key order so identical runs produce
// identical bytes; nlohmann is used for parsing only.

namespace detail {

inline std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (static_cast<unsigned char>(c) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\u%04x", c);
      out += buf;
    } else {
      out += c;
    }
  }
  out += '"';
  return out;
}

inline std::string json_number(double x) {
  if (std::isnan(x) || std::isinf(x)) return "null";
  return format_double(x);
}

inline std::string json_int_list(const std::vector<int>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out + "]";
}

}  // namespace detail

inline std::string stability_verdict_json(const StabilityVerdict& v) {
  std::string out = "{\"outcome\":";
  out += detail::json_string(to_string(v.outcome));
  out += ",\"lower\":" + detail::json_number(v.bounds.lower);
  out += ",\"upper\":" + detail::json_number(v.bounds.upper);
  out += ",\"witness_product\":[";
  for (std::size_t i = 0; i < v.bounds.witness.size(); ++i) {
    if (i) out += ",";
    out += detail::json_string(v.bounds.witness[i]);
  }
  out += "]}";
  return out;
}

inline std::string controllability_verdict_json(const ControllabilityVerdict& v) {
  std::string out = "{\"outcome\":";
  out += detail::json_string(to_string(v.outcome));
  out += ",\"witness\":";
  if (v.witness) {
    out += "{\"preperiod\":" + detail::json_int_list(v.witness->preperiod);
    out += ",\"period\":" + detail::json_int_list(v.witness->period) + "}";
  } else {
    out += "null";
  }
  out += ",\"bound_Nstar\":" + std::to_string(v.steps_bound);
  out += ",\"min_lookahead\":";
  out += v.min_lookahead ? std::to_string(*v.min_lookahead) : std::string("null");
  out += "}";
  return out;
}

template <class S>
std::string deadbeat_plan_json(const DeadbeatPlan<S>& plan) {
  std::string out = "{\"t\":" + std::to_string(plan.t) + ",\"sends\":[";
  for (std::size_t i = 0; i < plan.send_times.size(); ++i) {
    if (i) out += ",";
    out += "{\"time\":" + std::to_string(plan.send_times[i]) + ",\"value\":";
    out += detail::json_string(format_scalar(plan.values(static_cast<Eigen::Index>(i)))) + "}";
  }
  out += "]}";
  return out;
}

template <class S>
std::string scalar_controller_json(const ScalarDeadbeatController<S>& ctl) {
  std::string out = "{\"N\":1,\"gains\":[";
  bool first = true;
  for (const auto& [tup, K] : ctl.gains) {
    if (!first) out += ",";
    first = false;
    out += "{\"sigma\":" + detail::json_int_list(tup) + ",\"K\":[[";
    for (Eigen::Index c = 0; c < K.cols(); ++c) {
      if (c) out += ",";
      out += detail::json_string(format_scalar(K(0, c)));
    }
    out += "]]}";
  }
  out += "]}";
  return out;
}

// ---------------------------------------------------------------------------
// Files.

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw std::runtime_error("malformed JSON in '" + path + "': " + e.what());
  }
  return j;
}

inline SystemSpec load_system(const std::string& path) { return parse_system(read_json_file(path)); }
inline NetworkGraph load_network(const std::string& path) {
  return parse_network(read_json_file(path));
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

}  // namespace sdtk
