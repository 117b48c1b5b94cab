#include <doctest.h>

#include <sdtk/io.hpp>
#include <sdtk/reproduce.hpp>

using sdtk::Json;
using sdtk::MatR;
using sdtk::Plant;
using sdtk::Rational;
using sdtk::SwitchingSignal;
using sdtk::VecR;

TEST_CASE("scalar parsing honors the arithmetic mode") {
  CHECK(sdtk::parse_scalar<Rational>(Json(7)) == Rational(7));
  CHECK(sdtk::parse_scalar<Rational>(Json("2/5")) == Rational(2, 5));
  CHECK(sdtk::parse_scalar<Rational>(Json("-0.25")) == Rational(-1, 4));
  CHECK(sdtk::parse_scalar<Rational>(Json("1e-3")) == Rational(1, 1000));
  CHECK_THROWS_AS(sdtk::parse_scalar<Rational>(Json(0.4)), std::invalid_argument);
  CHECK_THROWS_AS(sdtk::parse_scalar<Rational>(Json("x")), std::invalid_argument);
  CHECK_THROWS_AS(sdtk::parse_scalar<Rational>(Json(true)), std::invalid_argument);

  CHECK(sdtk::parse_scalar<double>(Json(0.4)) == 0.4);
  CHECK(sdtk::parse_scalar<double>(Json("0.5")) == 0.5);
  CHECK(sdtk::parse_scalar<double>(Json("3/4")) == 0.75);
  CHECK_THROWS_AS(sdtk::parse_scalar<double>(Json("0.5oops")), std::invalid_argument);
}

TEST_CASE("matrix parsing rejects ragged input") {
  Json good = Json::parse("[[1,2],[3,4]]");
  auto M = sdtk::parse_matrix<Rational>(good);
  CHECK(M.rows() == 2);
  CHECK(M(1, 0) == Rational(3));
  CHECK_THROWS_AS(sdtk::parse_matrix<Rational>(Json::parse("[[1,2],[3]]")),
                  std::invalid_argument);
  CHECK_THROWS_AS(sdtk::parse_matrix<Rational>(Json::parse("[]")), std::invalid_argument);
  CHECK_THROWS_AS(sdtk::parse_matrix<Rational>(Json::parse("[1,2]")), std::invalid_argument);
}

TEST_CASE("system files load in both modes") {
  Json j = Json::parse(R"({
    "A": [[0, 2], [2, 0]],
    "B": [[0], [1]],
    "delays": [0, 1],
    "lookahead": 0,
    "arithmetic": "rational"
  })");
  auto spec = sdtk::parse_system(j);
  CHECK(spec.exact);
  CHECK(spec.exact_plant.A(0, 1) == Rational(2));
  CHECK(spec.float_plant.A(0, 1) == 2.0);
  CHECK(spec.exact_plant.delays == std::vector<int>{0, 1});

  Json f = Json::parse(R"({
    "A": [[0.5]],
    "B": [[1.0]],
    "delays": [0, 2],
    "arithmetic": "float"
  })");
  auto fspec = sdtk::parse_system(f);
  CHECK(!fspec.exact);
  CHECK(fspec.float_plant.A(0, 0) == 0.5);
  CHECK(fspec.float_plant.lookahead == 0);

  // exact mode refuses rounded literals
  Json bad = j;
  bad["A"][0][1] = 0.4;
  CHECK_THROWS_AS(sdtk::parse_system(bad), std::invalid_argument);

  Json missing = j;
  missing.erase("B");
  CHECK_THROWS_AS(sdtk::parse_system(missing), std::invalid_argument);

  Json unknown = j;
  unknown["arrival_semantics"] = "hold";
  CHECK_THROWS_AS(sdtk::parse_system(unknown), std::invalid_argument);

  Json badmode = j;
  badmode["arithmetic"] = "decimal";
  CHECK_THROWS_AS(sdtk::parse_system(badmode), std::invalid_argument);

  // plant validation runs at load: duplicate delays are rejected
  Json dup = j;
  dup["delays"] = Json::parse("[0, 0]");
  CHECK_THROWS_AS(sdtk::parse_system(dup), std::invalid_argument);
}

TEST_CASE("network files load and derive path delays") {
  Json j = Json::parse(R"({
    "nodes": ["c", "m1", "m2", "u"],
    "edges": [
      {"from": "c", "to": "m1", "delay": 1},
      {"from": "m1", "to": "u", "delay": 1},
      {"from": "c", "to": "m2", "delay": 2},
      {"from": "m2", "to": "u", "delay": 3}
    ],
    "controller_node": "c",
    "actuator_node": "u"
  })");
  auto g = sdtk::parse_network(j);
  CHECK(sdtk::path_delays(g) == std::vector<int>{2, 5});

  Json cyc = j;
  cyc["edges"].push_back(Json::parse(R"({"from": "u", "to": "c", "delay": 1})"));
  CHECK_THROWS_AS(sdtk::parse_network(cyc), std::invalid_argument);

  Json unknown = j;
  unknown["mtu"] = 1500;
  CHECK_THROWS_AS(sdtk::parse_network(unknown), std::invalid_argument);

  Json badnode = j;
  badnode["controller_node"] = "nope";
  CHECK_THROWS_AS(sdtk::parse_network(badnode), std::invalid_argument);
}

TEST_CASE("signal files cover every kind") {
  auto per = sdtk::parse_signal(Json::parse(R"({"kind":"periodic","domain":[0,1],"values":[0,1]})"));
  CHECK(per.emit(4) == 0);
  CHECK(per.emit(5) == 1);

  // fallback domain from the system
  auto fb = sdtk::parse_signal(Json::parse(R"({"kind":"periodic","values":[1]})"), {0, 1});
  CHECK(fb.emit(10) == 1);
  CHECK_THROWS_AS(sdtk::parse_signal(Json::parse(R"({"kind":"periodic","values":[1]})")),
                  std::invalid_argument);

  auto ex = sdtk::parse_signal(
      Json::parse(R"({"kind":"explicit","domain":[0,1,2],"values":[2,0,1]})"));
  CHECK(ex.emit(0) == 2);
  CHECK_THROWS_AS(ex.emit(3), std::out_of_range);

  auto ep = sdtk::parse_signal(Json::parse(
      R"({"kind":"eventually_periodic","domain":[0,1],"preperiod":[0],"period":[1,1]})"));
  CHECK(ep.emit(0) == 0);
  CHECK(ep.emit(1) == 1);
  CHECK(ep.emit(100) == 1);

  auto rnd = sdtk::parse_signal(Json::parse(R"({"kind":"random","domain":[0,3],"seed":9})"));
  auto rnd2 = sdtk::parse_signal(Json::parse(R"({"kind":"random","domain":[0,3],"seed":9})"));
  for (long long t = 0; t < 50; ++t) {
    CHECK(rnd.emit(t) == rnd2.emit(t));
    CHECK((rnd.emit(t) == 0 || rnd.emit(t) == 3));
  }

  Json netj = Json::parse(R"({
    "nodes": ["c", "a", "u"],
    "edges": [
      {"from": "c", "to": "u", "delay": 1},
      {"from": "c", "to": "a", "delay": 1},
      {"from": "a", "to": "u", "delay": 2}
    ],
    "controller_node": "c",
    "actuator_node": "u"
  })");
  auto net = sdtk::parse_network(netj);
  auto route =
      sdtk::parse_signal(Json::parse(R"({"kind":"routing","policy":"round_robin"})"), {}, &net);
  CHECK(route.domain() == std::vector<int>{1, 3});
  CHECK_THROWS_AS(
      sdtk::parse_signal(Json::parse(R"({"kind":"routing","policy":"round_robin"})")),
      std::invalid_argument);
  CHECK_THROWS_AS(
      sdtk::parse_signal(Json::parse(R"({"kind":"routing","policy":"nope"})"), {}, &net),
      std::invalid_argument);

  CHECK_THROWS_AS(sdtk::parse_signal(Json::parse(R"({"kind":"fancy"})")), std::invalid_argument);
  CHECK_THROWS_AS(
      sdtk::parse_signal(Json::parse(R"({"kind":"periodic","domain":[0,1],"values":[1],"x":0})")),
      std::invalid_argument);
}

TEST_CASE("gain files parse both shapes") {
  auto di = sdtk::parse_gain<Rational>(Json::parse(R"({"K": [["-2", "-1"]]})"));
  CHECK(!di.delay_dependent);
  CHECK(di.K(0, 0) == Rational(-2));

  auto dd = sdtk::parse_gain<Rational>(Json::parse(R"({
    "N": 1,
    "gains": [
      {"sigma": [0], "K": [["-2", "-1"]]},
      {"sigma": [1], "K": [["-4", "-2"]]}
    ]
  })"));
  CHECK(dd.delay_dependent);
  CHECK(dd.N == 1);
  CHECK(dd.gains.at({1})(0, 0) == Rational(-4));

  CHECK_THROWS_AS(sdtk::parse_gain<Rational>(Json::parse(
                      R"({"N": 1, "gains": [{"sigma": [0, 1], "K": [["1"]]}]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(sdtk::parse_gain<Rational>(Json::parse(
                      R"({"N": 1, "gains": [{"sigma": [0], "K": [["1"]]},
                                             {"sigma": [0], "K": [["2"]]}]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(sdtk::parse_gain<Rational>(Json::parse(R"({"k": [[1]]})")),
                  std::invalid_argument);
}

TEST_CASE("the emitted scalar controller is a loadable gain file") {
  auto ctl = sdtk::scalar_deadbeat(Rational(2), Rational(3), {0, 1, 2});
  auto j = Json::parse(sdtk::scalar_controller_json(ctl));
  auto g = sdtk::parse_gain<Rational>(j);
  REQUIRE(g.delay_dependent);
  CHECK(g.N == 1);
  REQUIRE(g.gains.size() == ctl.gains.size());
  for (const auto& [tup, K] : ctl.gains) {
    const auto& L = g.gains.at(tup);
    REQUIRE(L.cols() == K.cols());
    for (Eigen::Index c = 0; c < K.cols(); ++c) CHECK(L(0, c) == K(0, c));
  }
}

TEST_CASE("trajectory CSV is exact, stable, and headed correctly") {
  auto p = sdtk::example1_plant();
  sdtk::ZeroLaw<Rational> law(1);
  auto sig = sdtk::example1_signal();
  VecR x0(2);
  x0(0) = Rational(1);
  x0(1) = Rational(0);
  auto traj = sdtk::simulate<Rational>(p, law, sig, x0, 4);
  auto csv = sdtk::trajectory_csv(traj);
  auto csv2 = sdtk::trajectory_csv(sdtk::simulate<Rational>(p, law, sig, x0, 4));
  CHECK(csv == csv2);
  CHECK(csv.substr(0, csv.find('\n')) == "t,sigma,tau,v_1,x_1,x_2");
  // row for t=2: sigma=0, tau=1 (arrivals at even times), x = (4, 0)
  CHECK(csv.find("\n2,0,1,0,4,0\n") != std::string::npos);
}

TEST_CASE("numbers print with 12 significant digits and no locale") {
  CHECK(sdtk::format_double(0.1) == "0.1");
  CHECK(sdtk::format_double(1.0 / 3.0) == "0.333333333333");
  CHECK(sdtk::format_double(-2.0) == "-2");
  CHECK(sdtk::format_double(123456789012345.0) == "1.23456789012e+14");
  CHECK(sdtk::format_scalar(Rational(-7, 3)) == "-7/3");
  CHECK(sdtk::format_scalar(Rational(5)) == "5");
}

TEST_CASE("verdict JSON has a fixed shape") {
  sdtk::StabilityVerdict sv;
  sv.outcome = sdtk::StabilityOutcome::Stable;
  sv.bounds.lower = 0.5;
  sv.bounds.upper = 0.625;
  sv.bounds.witness = {"1", "0"};
  CHECK(sdtk::stability_verdict_json(sv) ==
        R"({"outcome":"Stable","lower":0.5,"upper":0.625,"witness_product":["1","0"]})");

  sdtk::ControllabilityVerdict cv;
  cv.outcome = sdtk::ControllabilityOutcome::Uncontrollable;
  cv.witness = sdtk::DelayWitness{{}, {0, 1}};
  cv.steps_bound = 15;
  CHECK(sdtk::controllability_verdict_json(cv) ==
        R"({"outcome":"Uncontrollable","witness":{"preperiod":[],"period":[0,1]},"bound_Nstar":15,"min_lookahead":null})");

  sdtk::ControllabilityVerdict ok;
  ok.outcome = sdtk::ControllabilityOutcome::Controllable;
  ok.steps_bound = 84;
  ok.min_lookahead = 2;
  CHECK(sdtk::controllability_verdict_json(ok) ==
        R"({"outcome":"Controllable","witness":null,"bound_Nstar":84,"min_lookahead":2})");
}

TEST_CASE("plan JSON round trips through the parser") {
  auto p = sdtk::example1_plant();
  Plant<Rational> scalar;
  scalar.A = MatR(1, 1);
  scalar.A(0, 0) = Rational(2);
  scalar.B = MatR(1, 1);
  scalar.B(0, 0) = Rational(1);
  scalar.delays = {0, 1};
  auto sig = SwitchingSignal::periodic({0, 1}, {1});
  VecR x0(1), xf(1);
  x0(0) = Rational(1);
  xf(0) = Rational(0);
  auto plan = sdtk::deadbeat_plan<Rational>(scalar, sig, x0, xf);
  auto j = Json::parse(sdtk::deadbeat_plan_json(plan));
  CHECK(j["t"] == 2);
  CHECK(j["sends"].size() == 1);
  CHECK(j["sends"][0]["time"] == 0);
  CHECK(j["sends"][0]["value"] == "-4");
}

TEST_CASE("json files read back and write deterministically") {
  const std::string path = "/tmp/sdtk_io_roundtrip.json";
  sdtk::write_text_file(path, R"({"kind":"periodic","domain":[0,1],"values":[0,1]})");
  auto j = sdtk::read_json_file(path);
  auto sig = sdtk::parse_signal(j);
  CHECK(sig.emit(0) == 0);
  CHECK_THROWS_AS(sdtk::read_json_file("/tmp/definitely_missing_sdtk.json"),
                  std::runtime_error);
  sdtk::write_text_file(path, "{not json");
  CHECK_THROWS_AS(sdtk::read_json_file(path), std::runtime_error);
}

TEST_CASE("the first canned reproduction passes end to end") {
  auto rep = sdtk::reproduce_example(1);
  CHECK(rep.pass);
  CHECK(rep.log.find("FAIL") == std::string::npos);
  CHECK(rep.log.find("Uncontrollable") != std::string::npos);
  CHECK_THROWS_AS(sdtk::reproduce_example(7), std::invalid_argument);
}
