#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdtk {

// SplitMix64 run in counter mode: the i-th draw mixes seed + i*golden, so
// emit(t) stays a pure function of (seed, t) and traces are bit-reproducible
// across platforms.
inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform double in [0,1) from the high 53 bits.
inline double splitmix64_unit(std::uint64_t seed, std::uint64_t i) {
  return static_cast<double>(splitmix64_at(seed, i) >> 11) * 0x1.0p-53;
}

// Multi-hop network between controller and actuator. Each edge costs a fixed
// number of slots; a packet's delay is the sum over the path it is routed on.
struct NetworkGraph {
  struct Edge {
    std::string from, to;
    int delay = 0;
  };
  std::vector<std::string> nodes;
  std::vector<Edge> edges;
  std::string controller_node;
  std::string actuator_node;
};

namespace detail {

inline std::size_t node_index(const NetworkGraph& g, const std::string& id) {
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (g.nodes[i] == id) return i;
  throw std::invalid_argument("network: unknown node '" + id + "'");
}

}  // namespace detail

inline void validate_network(const NetworkGraph& g) {
  if (g.nodes.empty()) throw std::invalid_argument("network: no nodes");
  std::set<std::string> seen;
  for (const auto& id : g.nodes)
    if (!seen.insert(id).second)
      throw std::invalid_argument("network: duplicate node '" + id + "'");
  const std::size_t nn = g.nodes.size();
  std::vector<std::vector<std::size_t>> out(nn);
  std::vector<int> indeg(nn, 0);
  for (const auto& e : g.edges) {
    if (e.delay < 0) throw std::invalid_argument("network: negative edge delay");
    std::size_t a = detail::node_index(g, e.from);
    std::size_t b = detail::node_index(g, e.to);
    out[a].push_back(b);
    ++indeg[b];
  }
  detail::node_index(g, g.controller_node);
  detail::node_index(g, g.actuator_node);
  // Kahn's algorithm; leftover nodes mean a directed cycle.
  std::queue<std::size_t> q;
  for (std::size_t i = 0; i < nn; ++i)
    if (indeg[i] == 0) q.push(i);
  std::size_t removed = 0;
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop();
    ++removed;
    for (std::size_t w : out[u])
      if (--indeg[w] == 0) q.push(w);
  }
  if (removed != nn) throw std::invalid_argument("network: graph has a cycle");
}

// All controller-to-actuator paths as edge-index lists, in a canonical
// depth-first order (edges explored by target node, then delay, then input
// order). The graph is a DAG, so the walk terminates without a visited set.
inline std::vector<std::vector<std::size_t>> enumerate_paths(const NetworkGraph& g) {
  validate_network(g);
  const std::size_t src = detail::node_index(g, g.controller_node);
  const std::size_t dst = detail::node_index(g, g.actuator_node);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out(g.nodes.size());
  for (std::size_t ei = 0; ei < g.edges.size(); ++ei)
    out[detail::node_index(g, g.edges[ei].from)].push_back(
        {detail::node_index(g, g.edges[ei].to), ei});
  for (auto& lst : out)
    std::sort(lst.begin(), lst.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      if (g.edges[a.second].delay != g.edges[b.second].delay)
        return g.edges[a.second].delay < g.edges[b.second].delay;
      return a.second < b.second;
    });
  std::vector<std::vector<std::size_t>> paths;
  std::vector<std::size_t> stack;
  auto dfs = [&](auto&& self, std::size_t u) -> void {
    if (u == dst) {
      // Acyclic, so no path revisits the actuator; stop here.
      paths.push_back(stack);
      return;
    }
    for (const auto& [w, ei] : out[u]) {
      stack.push_back(ei);
      self(self, w);
      stack.pop_back();
    }
  };
  if (src == dst) {
    paths.push_back({});
  } else {
    dfs(dfs, src);
  }
  if (paths.empty()) throw std::invalid_argument("network: no controller-to-actuator path");
  return paths;
}

inline int path_delay(const NetworkGraph& g, const std::vector<std::size_t>& path) {
  int total = 0;
  for (std::size_t ei : path) total += g.edges.at(ei).delay;
  return total;
}

// The induced delay set: total slot delay of every simple path, deduplicated.
inline std::vector<int> path_delays(const NetworkGraph& g) {
  std::set<int> ds;
  for (const auto& p : enumerate_paths(g)) ds.insert(path_delay(g, p));
  return std::vector<int>(ds.begin(), ds.end());
}

enum class RoutingPolicy { RoundRobin, Uniform, Trace };

// Switching signal sigma(t): which delay the network applies to the packet
// sent at time t. Immutable after construction; emit(t) is pure.
class SwitchingSignal {
 public:
  enum class Kind { Periodic, Random, Explicit, EventuallyPeriodic, Routing };

  static SwitchingSignal periodic(std::vector<int> domain, std::vector<int> word) {
    SwitchingSignal s(Kind::Periodic, std::move(domain));
    if (word.empty()) throw std::invalid_argument("signal: empty periodic word");
    s.check_values(word);
    s.period_ = std::move(word);
    return s;
  }

  static SwitchingSignal random_uniform(std::vector<int> domain, std::uint64_t seed) {
    SwitchingSignal s(Kind::Random, std::move(domain));
    s.seed_ = seed;
    s.cumweights_.clear();
    return s;
  }

  static SwitchingSignal random_weighted(std::vector<int> domain, std::vector<double> weights,
                                         std::uint64_t seed) {
    SwitchingSignal s(Kind::Random, std::move(domain));
    if (weights.size() != s.domain_.size())
      throw std::invalid_argument("signal: one weight per delay required");
    double total = 0;
    for (double w : weights) {
      if (!(w > 0)) throw std::invalid_argument("signal: weights must be positive");
      total += w;
    }
    double acc = 0;
    for (double w : weights) {
      acc += w / total;
      s.cumweights_.push_back(acc);
    }
    s.cumweights_.back() = 1.0;
    s.seed_ = seed;
    return s;
  }

  static SwitchingSignal explicit_list(std::vector<int> domain, std::vector<int> values) {
    SwitchingSignal s(Kind::Explicit, std::move(domain));
    s.check_values(values);
    s.list_ = std::move(values);
    return s;
  }

  // Plays preperiod once, then cycles period forever. This is the playback
  // form of uncontrollability witnesses.
  static SwitchingSignal eventually_periodic(std::vector<int> domain, std::vector<int> preperiod,
                                             std::vector<int> period) {
    SwitchingSignal s(Kind::EventuallyPeriodic, std::move(domain));
    if (period.empty()) throw std::invalid_argument("signal: empty period");
    s.check_values(preperiod);
    s.check_values(period);
    s.preperiod_ = std::move(preperiod);
    s.period_ = std::move(period);
    return s;
  }

  static SwitchingSignal routing(NetworkGraph graph, RoutingPolicy policy,
                                 std::uint64_t seed = 0, std::vector<std::size_t> trace = {}) {
    SwitchingSignal s(Kind::Routing, path_delays(graph));
    s.paths_ = enumerate_paths(graph);
    s.path_delay_.clear();
    for (const auto& p : s.paths_) s.path_delay_.push_back(path_delay(graph, p));
    s.policy_ = policy;
    s.seed_ = seed;
    if (policy == RoutingPolicy::Trace) {
      if (trace.empty()) throw std::invalid_argument("signal: routing trace is empty");
      for (std::size_t pi : trace)
        if (pi >= s.paths_.size()) throw std::invalid_argument("signal: trace path index out of range");
      s.trace_ = std::move(trace);
    }
    return s;
  }

  const std::vector<int>& domain() const { return domain_; }
  Kind kind() const { return kind_; }

  int emit(long long t) const {
    if (t < 0) throw std::invalid_argument("signal: negative time");
    switch (kind_) {
      case Kind::Periodic:
        return period_[static_cast<std::size_t>(t % static_cast<long long>(period_.size()))];
      case Kind::Explicit:
        if (t >= static_cast<long long>(list_.size()))
          throw std::out_of_range("signal: explicit list exhausted at t=" + std::to_string(t));
        return list_[static_cast<std::size_t>(t)];
      case Kind::EventuallyPeriodic: {
        if (t < static_cast<long long>(preperiod_.size()))
          return preperiod_[static_cast<std::size_t>(t)];
        long long j = (t - static_cast<long long>(preperiod_.size())) %
                      static_cast<long long>(period_.size());
        return period_[static_cast<std::size_t>(j)];
      }
      case Kind::Random: {
        if (cumweights_.empty()) {
          std::uint64_t z = splitmix64_at(seed_, static_cast<std::uint64_t>(t));
          return domain_[static_cast<std::size_t>(z % domain_.size())];
        }
        double u = splitmix64_unit(seed_, static_cast<std::uint64_t>(t));
        std::size_t i = 0;
        while (i + 1 < cumweights_.size() && u >= cumweights_[i]) ++i;
        return domain_[i];
      }
      case Kind::Routing: {
        std::size_t pi = 0;
        if (policy_ == RoutingPolicy::RoundRobin) {
          pi = static_cast<std::size_t>(t % static_cast<long long>(paths_.size()));
        } else if (policy_ == RoutingPolicy::Uniform) {
          pi = static_cast<std::size_t>(splitmix64_at(seed_, static_cast<std::uint64_t>(t)) %
                                        paths_.size());
        } else {
          if (t >= static_cast<long long>(trace_.size()))
            throw std::out_of_range("signal: routing trace exhausted at t=" + std::to_string(t));
          pi = trace_[static_cast<std::size_t>(t)];
        }
        return path_delay_[pi];
      }
    }
    throw std::logic_error("signal: unreachable");
  }

 private:
  SwitchingSignal(Kind kind, std::vector<int> domain) : kind_(kind), domain_(std::move(domain)) {
    if (domain_.empty()) throw std::invalid_argument("signal: empty delay set");
    for (std::size_t i = 0; i < domain_.size(); ++i) {
      if (domain_[i] < 0) throw std::invalid_argument("signal: negative delay in domain");
      if (i > 0 && domain_[i] <= domain_[i - 1])
        throw std::invalid_argument("signal: domain must be strictly increasing");
    }
  }

  void check_values(const std::vector<int>& vals) const {
    for (int v : vals)
      if (!std::binary_search(domain_.begin(), domain_.end(), v))
        throw std::invalid_argument("signal: value " + std::to_string(v) + " outside the delay set");
  }

  Kind kind_;
  std::vector<int> domain_;
  std::vector<int> period_, preperiod_, list_;
  std::vector<double> cumweights_;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<std::size_t>> paths_;
  std::vector<int> path_delay_;
  std::vector<std::size_t> trace_;
  RoutingPolicy policy_ = RoutingPolicy::RoundRobin;
};

// tau(t) = 1 when some earlier packet lands at t: exists t' <= t with
// t' + sigma(t') = t. Only sends in [t - d_max, t] can matter.
inline std::vector<int> actuation_times(const SwitchingSignal& sig, long long T) {
  if (T < 0) throw std::invalid_argument("actuation_times: negative horizon");
  std::vector<int> tau(static_cast<std::size_t>(T) + 1, 0);
  for (long long t = 0; t <= T; ++t) {
    long long a = t + sig.emit(t);
    if (a <= T) tau[static_cast<std::size_t>(a)] = 1;
  }
  return tau;
}

}  // namespace sdtk
