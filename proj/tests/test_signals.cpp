#include <doctest.h>

#include <sdtk/signals.hpp>

#include <map>
#include <random>
#include <set>
#include <stdexcept>

using sdtk::NetworkGraph;
using sdtk::RoutingPolicy;
using sdtk::SwitchingSignal;

TEST_CASE("splitmix64 counter mode matches the reference sequence") {
  // First output of the reference splitmix64 stream for seed 0.
  CHECK(sdtk::splitmix64_at(0, 0) == 16294208416658607535ULL);
  CHECK(sdtk::splitmix64_at(42, 0) == 13679457532755275413ULL);
  CHECK(sdtk::splitmix64_at(42, 1) == 2949826092126892291ULL);
  CHECK(sdtk::splitmix64_at(42, 2) == 5139283748462763858ULL);
  CHECK(sdtk::splitmix64_at(42, 3) == 6349198060258255764ULL);
  double u = sdtk::splitmix64_unit(7, 0);
  CHECK(u >= 0.0);
  CHECK(u < 1.0);
  CHECK(u == doctest::Approx(0.38982974839127149).epsilon(1e-15));
}

TEST_CASE("periodic signal") {
  auto s = SwitchingSignal::periodic({0, 1}, {0, 1});
  CHECK(s.emit(0) == 0);
  CHECK(s.emit(1) == 1);
  CHECK(s.emit(4) == 0);
  CHECK(s.emit(1000001) == 1);
  CHECK_THROWS_AS(s.emit(-1), std::invalid_argument);
  CHECK_THROWS_AS(SwitchingSignal::periodic({0, 1}, {}), std::invalid_argument);
  CHECK_THROWS_AS(SwitchingSignal::periodic({0, 1}, {2}), std::invalid_argument);
  CHECK_THROWS_AS(SwitchingSignal::periodic({}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(SwitchingSignal::periodic({1, 0}, {0}), std::invalid_argument);
}

TEST_CASE("explicit signal enforces its horizon") {
  auto s = SwitchingSignal::explicit_list({0, 1}, {1, 0, 1});
  CHECK(s.emit(1) == 0);
  CHECK(s.emit(2) == 1);
  CHECK_THROWS_AS(s.emit(3), std::out_of_range);
}

TEST_CASE("eventually periodic signal reproduces the two-rotation schedule") {
  // sigma(t) = 0 for t <= 2, then 121 - (t mod 121).
  std::vector<int> domain;
  for (int d = 0; d <= 121; ++d) domain.push_back(d);
  std::vector<int> period;
  for (int j = 0; j < 121; ++j) period.push_back(121 - ((3 + j) % 121));
  auto s = SwitchingSignal::eventually_periodic(domain, {0, 0, 0}, period);
  for (long long t = 0; t <= 1000; ++t) {
    int expected = t <= 2 ? 0 : 121 - static_cast<int>(t % 121);
    CHECK(s.emit(t) == expected);
  }
  CHECK(s.emit(121) == 121);
  CHECK(s.emit(124) == 118);
}

TEST_CASE("random signals are deterministic and stay inside the delay set") {
  auto s = SwitchingSignal::random_uniform({0, 2, 5}, 99);
  auto s2 = SwitchingSignal::random_uniform({0, 2, 5}, 99);
  std::map<int, int> counts;
  for (long long t = 0; t < 3000; ++t) {
    int d = s.emit(t);
    CHECK(s2.emit(t) == d);
    CHECK((d == 0 || d == 2 || d == 5));
    ++counts[d];
  }
  // All three values occur; roughly uniform.
  for (int d : {0, 2, 5}) CHECK(counts[d] > 800);

  auto w = SwitchingSignal::random_weighted({0, 1}, {1.0, 9.0}, 7);
  int ones = 0;
  for (long long t = 0; t < 5000; ++t) ones += w.emit(t);
  CHECK(ones > 4200);
  CHECK(ones < 4800);
  CHECK_THROWS_AS(SwitchingSignal::random_weighted({0, 1}, {1.0}, 7), std::invalid_argument);
  CHECK_THROWS_AS(SwitchingSignal::random_weighted({0, 1}, {1.0, -1.0}, 7), std::invalid_argument);
}

static NetworkGraph two_path_graph() {
  NetworkGraph g;
  g.nodes = {"c", "a", "b", "u"};
  g.edges = {{"c", "a", 1}, {"a", "u", 1}, {"c", "b", 2}, {"b", "u", 3}};
  g.controller_node = "c";
  g.actuator_node = "u";
  return g;
}

TEST_CASE("path delays") {
  SUBCASE("single edge") {
    NetworkGraph g;
    g.nodes = {"c", "u"};
    g.edges = {{"c", "u", 3}};
    g.controller_node = "c";
    g.actuator_node = "u";
    CHECK(sdtk::path_delays(g) == std::vector<int>{3});
  }
  SUBCASE("two parallel two-hop paths") {
    CHECK(sdtk::path_delays(two_path_graph()) == std::vector<int>{2, 5});
  }
  SUBCASE("diamond with equal arms deduplicates") {
    NetworkGraph g;
    g.nodes = {"c", "a", "b", "u"};
    g.edges = {{"c", "a", 1}, {"a", "u", 2}, {"c", "b", 2}, {"b", "u", 1}};
    g.controller_node = "c";
    g.actuator_node = "u";
    CHECK(sdtk::path_delays(g) == std::vector<int>{3});
  }
  SUBCASE("rejects cycles, missing paths, duplicate nodes") {
    NetworkGraph g = two_path_graph();
    g.edges.push_back({"u", "c", 1});
    CHECK_THROWS_AS(sdtk::path_delays(g), std::invalid_argument);
    NetworkGraph h;
    h.nodes = {"c", "u", "x"};
    h.edges = {{"c", "x", 1}};
    h.controller_node = "c";
    h.actuator_node = "u";
    CHECK_THROWS_AS(sdtk::path_delays(h), std::invalid_argument);
    NetworkGraph d = two_path_graph();
    d.nodes.push_back("a");
    CHECK_THROWS_AS(sdtk::path_delays(d), std::invalid_argument);
    NetworkGraph e = two_path_graph();
    e.edges[0].delay = -1;
    CHECK_THROWS_AS(sdtk::path_delays(e), std::invalid_argument);
  }
}

// Independent oracle: delay sets via forward set-union dynamic programming
// over a topological order, instead of path enumeration.
static std::vector<int> path_delays_dp(const NetworkGraph& g) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) idx[g.nodes[i]] = i;
  std::size_t nn = g.nodes.size();
  std::vector<std::vector<std::pair<std::size_t, int>>> out(nn);
  std::vector<int> indeg(nn, 0);
  for (const auto& e : g.edges) {
    out[idx[e.from]].push_back({idx[e.to], e.delay});
    ++indeg[idx[e.to]];
  }
  std::vector<std::size_t> order, q;
  for (std::size_t i = 0; i < nn; ++i)
    if (indeg[i] == 0) q.push_back(i);
  while (!q.empty()) {
    std::size_t u = q.back();
    q.pop_back();
    order.push_back(u);
    for (auto [w, d] : out[u])
      if (--indeg[w] == 0) q.push_back(w);
  }
  std::vector<std::set<int>> ds(nn);
  ds[idx.at(g.controller_node)].insert(0);
  std::size_t dst = idx.at(g.actuator_node);
  for (std::size_t u : order) {
    if (u == dst) continue;  // paths stop at the actuator
    for (auto [w, d] : out[u])
      for (int base : ds[u]) ds[w].insert(base + d);
  }
  const auto& s = ds[dst];
  return std::vector<int>(s.begin(), s.end());
}

TEST_CASE("path delay enumeration agrees with a set-union oracle on random dags") {
  std::mt19937 rng(12345);
  int nonempty = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + static_cast<int>(rng() % 6);
    NetworkGraph g;
    for (int i = 0; i < n; ++i) g.nodes.push_back("n" + std::to_string(i));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng() % 10 < 4) g.edges.push_back({g.nodes[static_cast<std::size_t>(i)],
                                               g.nodes[static_cast<std::size_t>(j)],
                                               static_cast<int>(rng() % 5)});
    g.controller_node = g.nodes.front();
    g.actuator_node = g.nodes.back();
    std::vector<int> got;
    try {
      got = sdtk::path_delays(g);
    } catch (const std::invalid_argument&) {
      continue;  // no path this trial
    }
    ++nonempty;
    CHECK(got == path_delays_dp(g));
  }
  CHECK(nonempty > 50);
}

TEST_CASE("routing policies") {
  auto g = two_path_graph();
  SUBCASE("round robin cycles paths in canonical order") {
    auto s = SwitchingSignal::routing(g, RoutingPolicy::RoundRobin);
    CHECK(s.domain() == std::vector<int>{2, 5});
    CHECK(s.emit(0) == 2);
    CHECK(s.emit(1) == 5);
    CHECK(s.emit(2) == 2);
    CHECK(s.emit(7) == 5);
  }
  SUBCASE("uniform is seeded and in-range") {
    auto s = SwitchingSignal::routing(g, RoutingPolicy::Uniform, 5);
    auto s2 = SwitchingSignal::routing(g, RoutingPolicy::Uniform, 5);
    std::set<int> seen;
    for (long long t = 0; t < 200; ++t) {
      int d = s.emit(t);
      CHECK(s2.emit(t) == d);
      CHECK((d == 2 || d == 5));
      seen.insert(d);
    }
    CHECK(seen.size() == 2);
  }
  SUBCASE("trace replays path indices") {
    auto s = SwitchingSignal::routing(g, RoutingPolicy::Trace, 0, {1, 0, 0});
    CHECK(s.emit(0) == 5);
    CHECK(s.emit(1) == 2);
    CHECK(s.emit(2) == 2);
    CHECK_THROWS_AS(s.emit(3), std::out_of_range);
    CHECK_THROWS_AS(SwitchingSignal::routing(g, RoutingPolicy::Trace, 0, {2}),
                    std::invalid_argument);
    CHECK_THROWS_AS(SwitchingSignal::routing(g, RoutingPolicy::Trace, 0, {}),
                    std::invalid_argument);
  }
}

TEST_CASE("actuation times") {
  SUBCASE("zero delay means every slot actuates") {
    auto s = SwitchingSignal::periodic({0}, {0});
    auto tau = sdtk::actuation_times(s, 10);
    for (int b : tau) CHECK(b == 1);
  }
  SUBCASE("alternating word lands only on even slots") {
    auto s = SwitchingSignal::periodic({0, 1}, {0, 1});
    auto tau = sdtk::actuation_times(s, 9);
    std::vector<int> expected = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
    CHECK(tau == expected);
  }
  SUBCASE("definition cross-check on a random signal") {
    auto s = SwitchingSignal::random_uniform({0, 1, 3, 4}, 2024);
    const long long T = 300;
    auto tau = sdtk::actuation_times(s, T);
    int d_max = s.domain().back();
    for (long long t = 0; t <= T; ++t) {
      bool hit = false;
      for (long long tp = std::max<long long>(0, t - d_max); tp <= t; ++tp)
        if (tp + s.emit(tp) == t) hit = true;
      CHECK(tau[static_cast<std::size_t>(t)] == (hit ? 1 : 0));
    }
  }
}
