// Command-line front end. Subcommands:
//   stability        closed-loop verdict for a memory gain under arbitrary switching
//   evaluate gain    same check, kept as its own verb for scripting symmetry
//   controllability  exact decision with witness / bound / look-ahead report
//   synthesize       scalar (gain table) and deadbeat (open-loop plan)
//   simulate         trajectory CSV under a switching signal
//   rotation demo    nonlinear stabilizer on the rotation plant
//   reproduce        re-runs a bundled case study, exit 1 if its claims fail
// All output is byte-deterministic for a fixed config and seed.

#include <sdtk/sdtk.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

using sdtk::GainMemory;
using sdtk::Json;
using sdtk::Plant;
using sdtk::Rational;
using sdtk::SwitchingSignal;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    sdtk::write_text_file(out_path, text);
  }
}

sdtk::SystemSpec load_system_arith(const std::string& path, const std::string& arith) {
  Json j = sdtk::read_json_file(path);
  if (!arith.empty()) {
    if (!j.is_object()) throw std::invalid_argument("system: expected a JSON object");
    j["arithmetic"] = arith;
  }
  return sdtk::parse_system(j);
}

template <class S>
sdtk::VecX<S> parse_vector_arg(const std::string& text, const char* what) {
  Json arr = Json::array();
  std::string tok;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',') {
      if (tok.empty())
        throw std::invalid_argument(std::string(what) + ": empty component in '" + text + "'");
      arr.push_back(tok);
      tok.clear();
    } else if (!std::isspace(static_cast<unsigned char>(text[i]))) {
      tok += text[i];
    }
  }
  return sdtk::parse_numeric_vector<S>(arr);
}

// v(t) = k_prev x(t-1) + k_curr x(t) for a scalar plant; x(-1) counts as 0.
class StateMemoryLaw final : public sdtk::FeedbackLaw<double> {
 public:
  StateMemoryLaw(double k_prev, double k_curr) : k_prev_(k_prev), k_curr_(k_curr) {}
  void reset() override { prev_ = 0.0; }
  sdtk::VecX<double> control(const sdtk::ControlContext<double>& ctx) override {
    if (ctx.x->size() != 1)
      throw std::invalid_argument("state-memory gain: scalar plants only");
    sdtk::VecX<double> v(1);
    v(0) = k_prev_ * prev_ + k_curr_ * (*ctx.x)(0);
    prev_ = (*ctx.x)(0);
    return v;
  }

 private:
  double k_prev_, k_curr_;
  double prev_ = 0.0;
};

class StateMemoryLawR final : public sdtk::FeedbackLaw<Rational> {
 public:
  StateMemoryLawR(Rational k_prev, Rational k_curr)
      : k_prev_(std::move(k_prev)), k_curr_(std::move(k_curr)) {}
  void reset() override { prev_ = Rational(0); }
  sdtk::VecX<Rational> control(const sdtk::ControlContext<Rational>& ctx) override {
    if (ctx.x->size() != 1)
      throw std::invalid_argument("state-memory gain: scalar plants only");
    sdtk::VecX<Rational> v(1);
    v(0) = k_prev_ * prev_ + k_curr_ * (*ctx.x)(0);
    prev_ = (*ctx.x)(0);
    return v;
  }

 private:
  Rational k_prev_, k_curr_;
  Rational prev_{0};
};

template <class S>
void require_state_memory_shape(const Plant<S>& p, const sdtk::MatX<S>& K) {
  if (p.n() != 1 || p.m() != 1 || p.delays != std::vector<int>{0, 1})
    throw std::invalid_argument(
        "state-memory gain: only scalar plants with delays {0,1} are supported");
  if (K.rows() != 1 || K.cols() != 2)
    throw std::invalid_argument("state-memory gain: K must be 1x2 (past state, current state)");
}

struct StabilityArgs {
  std::string system, gain, arith, out;
  double epsilon = 1e-2;
  int depth = 20;
  long long nodes = 1000000;
};

int run_stability(const StabilityArgs& a) {
  auto sys = load_system_arith(a.system, a.arith);
  Json gj = sdtk::read_json_file(a.gain);
  sdtk::JsrBudget budget;
  budget.max_depth = a.depth;
  budget.max_nodes = a.nodes;
  sdtk::StabilityVerdict v;
  if (sys.exact) {
    auto g = sdtk::parse_gain<Rational>(gj);
    if (g.delay_dependent)
      throw std::invalid_argument(
          "stability: delay-dependent gain tables have no switching-independent closed loop; "
          "use simulate instead");
    if (g.memory == GainMemory::State) {
      require_state_memory_shape(sys.exact_plant, g.K);
      auto set = sdtk::build_example3_matrices(
          sys.exact_plant.A(0, 0).to_double(), sys.exact_plant.B(0, 0).to_double(),
          g.K(0, 0).to_double(), g.K(0, 1).to_double());
      v = sdtk::is_stable(set, a.epsilon, budget);
    } else {
      v = sdtk::evaluate_di_gain(sys.exact_plant, g.K, a.epsilon, budget);
    }
  } else {
    auto g = sdtk::parse_gain<double>(gj);
    if (g.delay_dependent)
      throw std::invalid_argument(
          "stability: delay-dependent gain tables have no switching-independent closed loop; "
          "use simulate instead");
    if (g.memory == GainMemory::State) {
      require_state_memory_shape(sys.float_plant, g.K);
      auto set = sdtk::build_example3_matrices(sys.float_plant.A(0, 0), sys.float_plant.B(0, 0),
                                               g.K(0, 0), g.K(0, 1));
      v = sdtk::is_stable(set, a.epsilon, budget);
    } else {
      v = sdtk::evaluate_di_gain(sys.float_plant, g.K, a.epsilon, budget);
    }
  }
  emit(sdtk::stability_verdict_json(v) + "\n", a.out);
  return 0;
}

int run_controllability(const std::string& system, const std::string& arith,
                        const std::string& out) {
  auto sys = load_system_arith(system, arith);
  sdtk::ControllabilityVerdict v =
      sys.exact ? sdtk::decide(sys.exact_plant) : sdtk::decide(sys.float_plant);
  emit(sdtk::controllability_verdict_json(v) + "\n", out);
  return 0;
}

int run_synth_scalar(const std::string& system, const std::string& arith,
                     const std::string& out) {
  auto sys = load_system_arith(system, arith);
  std::string text;
  if (sys.exact) {
    const auto& p = sys.exact_plant;
    if (p.n() != 1 || p.m() != 1)
      throw std::invalid_argument("synthesize scalar: the system must be scalar");
    auto ctl = sdtk::scalar_deadbeat(p.A(0, 0), p.B(0, 0), p.delays);
    text = sdtk::scalar_controller_json(ctl);
  } else {
    const auto& p = sys.float_plant;
    if (p.n() != 1 || p.m() != 1)
      throw std::invalid_argument("synthesize scalar: the system must be scalar");
    auto ctl = sdtk::scalar_deadbeat(p.A(0, 0), p.B(0, 0), p.delays);
    text = sdtk::scalar_controller_json(ctl);
  }
  emit(text + "\n", out);
  return 0;
}

struct DeadbeatArgs {
  std::string system, signal, x0, xf, arith, out;
  long long max_t = 0;
};

int run_synth_deadbeat(const DeadbeatArgs& a) {
  auto sys = load_system_arith(a.system, a.arith);
  Json sj = sdtk::read_json_file(a.signal);
  std::string text;
  if (sys.exact) {
    auto sig = sdtk::parse_signal(sj, sys.exact_plant.delays);
    auto x0 = parse_vector_arg<Rational>(a.x0, "--x0");
    auto xf = parse_vector_arg<Rational>(a.xf, "--xf");
    auto plan = sdtk::deadbeat_plan(sys.exact_plant, sig, x0, xf, a.max_t);
    text = sdtk::deadbeat_plan_json(plan);
  } else {
    auto sig = sdtk::parse_signal(sj, sys.float_plant.delays);
    auto x0 = parse_vector_arg<double>(a.x0, "--x0");
    auto xf = parse_vector_arg<double>(a.xf, "--xf");
    auto plan = sdtk::deadbeat_plan(sys.float_plant, sig, x0, xf, a.max_t);
    text = sdtk::deadbeat_plan_json(plan);
  }
  emit(text + "\n", a.out);
  return 0;
}

struct SimulateArgs {
  std::string system, signal, gain, network, x0, arith, out;
  long long horizon = 40;
};

template <class S>
std::string simulate_to_csv(const Plant<S>& plant, const SimulateArgs& a,
                            const SwitchingSignal& sig) {
  sdtk::VecX<S> x0;
  if (a.x0.empty()) {
    sdtk::VecX<S> e1 = sdtk::VecX<S>::Zero(plant.n());
    e1(0) = S(1);
    x0 = e1;
  } else {
    x0 = parse_vector_arg<S>(a.x0, "--x0");
  }
  std::unique_ptr<sdtk::FeedbackLaw<S>> law;
  if (a.gain.empty()) {
    law = std::make_unique<sdtk::ZeroLaw<S>>(plant.m());
  } else {
    auto g = sdtk::parse_gain<S>(sdtk::read_json_file(a.gain));
    if (g.delay_dependent) {
      law = std::make_unique<sdtk::LinearDelayDependentLaw<S>>(g.gains, plant.n(), plant.m(),
                                                               plant.d_max(), g.N);
    } else if (g.memory == GainMemory::State) {
      require_state_memory_shape(plant, g.K);
      if constexpr (std::is_same_v<S, double>)
        law = std::make_unique<StateMemoryLaw>(g.K(0, 0), g.K(0, 1));
      else
        law = std::make_unique<StateMemoryLawR>(g.K(0, 0), g.K(0, 1));
    } else {
      law = std::make_unique<sdtk::LinearMemoryLaw<S>>(g.K, plant.n(), plant.m(), plant.d_max());
    }
  }
  auto traj = sdtk::simulate<S>(plant, *law, sig, x0, a.horizon);
  return sdtk::trajectory_csv(traj);
}

int run_simulate(const SimulateArgs& a) {
  auto sys = load_system_arith(a.system, a.arith);
  sdtk::NetworkGraph net;
  bool have_net = !a.network.empty();
  if (have_net) net = sdtk::load_network(a.network);
  Json sj = sdtk::read_json_file(a.signal);
  std::string csv;
  if (sys.exact) {
    auto sig = sdtk::parse_signal(sj, sys.exact_plant.delays, have_net ? &net : nullptr);
    csv = simulate_to_csv<Rational>(sys.exact_plant, a, sig);
  } else {
    auto sig = sdtk::parse_signal(sj, sys.float_plant.delays, have_net ? &net : nullptr);
    csv = simulate_to_csv<double>(sys.float_plant, a, sig);
  }
  emit(csv, a.out);
  return 0;
}

struct RotationArgs {
  double alpha = 0.0;
  long long horizon = 300;
  std::string signal, out, csv;
  std::uint64_t seed = 0;
};

int run_rotation_demo(const RotationArgs& a) {
  auto plant = sdtk::rotation_plant(a.alpha);
  SwitchingSignal sig = a.signal.empty()
                            ? SwitchingSignal::random_uniform({0, 1}, a.seed)
                            : sdtk::parse_signal(sdtk::read_json_file(a.signal), {0, 1});
  sdtk::RotationController law(a.alpha);
  sdtk::VecX<double> x0(2);
  x0 << 0.0, 1.0;
  auto traj = sdtk::simulate<double>(plant, law, sig, x0, a.horizon);
  const double final_norm = traj.states.back().x.norm();
  const double rate = std::pow(final_norm, 1.0 / static_cast<double>(a.horizon));
  double max_contraction = 0.0, max_drift = 0.0;
  for (double c : law.contraction_ratios) max_contraction = std::max(max_contraction, c);
  for (double d : law.drift_ratios) max_drift = std::max(max_drift, d);
  std::string report = "{\"alpha\":" + sdtk::detail::json_number(a.alpha);
  report += ",\"horizon\":" + std::to_string(a.horizon);
  report += ",\"final_norm\":" + sdtk::detail::json_number(final_norm);
  report += ",\"rate\":" + sdtk::detail::json_number(rate);
  report += ",\"cycles\":" + std::to_string(law.cycle_w.size());
  report += ",\"max_contraction\":" + sdtk::detail::json_number(max_contraction);
  report += ",\"max_drift\":" + sdtk::detail::json_number(max_drift);
  report += "}";
  if (!a.csv.empty()) sdtk::write_text_file(a.csv, sdtk::trajectory_csv(traj));
  emit(report + "\n", a.out);
  return 0;
}

int run_reproduce(int id) {
  auto rep = sdtk::reproduce_example(id);
  std::fwrite(rep.log.data(), 1, rep.log.size(), stdout);
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"switched-delay toolkit: stability, controllability, synthesis, simulation"};
  app.require_subcommand(1);

  auto add_arith = [](CLI::App* cmd, std::string& target) {
    cmd->add_option("--arith", target, "override the system file's arithmetic")
        ->check(CLI::IsMember({"rational", "float"}));
  };

  StabilityArgs stab;
  auto* cmd_stab = app.add_subcommand(
      "stability", "decide stability of a memory gain under arbitrary switching");
  cmd_stab->add_option("--system", stab.system, "system JSON file")->required();
  cmd_stab->add_option("--gain", stab.gain, "gain JSON file")->required();
  cmd_stab->add_option("--epsilon", stab.epsilon, "bound gap at which to stop refining");
  cmd_stab->add_option("--depth", stab.depth, "maximum product length explored");
  cmd_stab->add_option("--nodes", stab.nodes, "node budget for the bound search");
  add_arith(cmd_stab, stab.arith);
  cmd_stab->add_option("--out", stab.out, "write the verdict JSON here instead of stdout");

  StabilityArgs eval;
  auto* cmd_eval = app.add_subcommand("evaluate", "evaluate a candidate controller");
  auto* cmd_eval_gain =
      cmd_eval->add_subcommand("gain", "closed-loop verdict for a memory gain");
  cmd_eval->require_subcommand(1);
  cmd_eval_gain->add_option("--system", eval.system, "system JSON file")->required();
  cmd_eval_gain->add_option("--gain", eval.gain, "gain JSON file")->required();
  cmd_eval_gain->add_option("--epsilon", eval.epsilon, "bound gap at which to stop refining");
  cmd_eval_gain->add_option("--depth", eval.depth, "maximum product length explored");
  cmd_eval_gain->add_option("--nodes", eval.nodes, "node budget for the bound search");
  add_arith(cmd_eval_gain, eval.arith);
  cmd_eval_gain->add_option("--out", eval.out, "write the verdict JSON here instead of stdout");

  std::string ctrl_system, ctrl_arith, ctrl_out;
  auto* cmd_ctrl = app.add_subcommand("controllability",
                                      "decide controllability over all switching signals");
  cmd_ctrl->add_option("--system", ctrl_system, "system JSON file")->required();
  add_arith(cmd_ctrl, ctrl_arith);
  cmd_ctrl->add_option("--out", ctrl_out, "write the verdict JSON here instead of stdout");

  auto* cmd_synth = app.add_subcommand("synthesize", "controller synthesis");
  cmd_synth->require_subcommand(1);
  std::string sc_system, sc_arith, sc_out;
  auto* cmd_sc = cmd_synth->add_subcommand(
      "scalar", "dead-beat gain table for a scalar system, one gain per delay");
  cmd_sc->add_option("--system", sc_system, "system JSON file")->required();
  add_arith(cmd_sc, sc_arith);
  cmd_sc->add_option("--out", sc_out, "write the gain JSON here instead of stdout");

  DeadbeatArgs db;
  auto* cmd_db = cmd_synth->add_subcommand(
      "deadbeat", "open-loop plan that reaches a target state under a known signal");
  cmd_db->add_option("--system", db.system, "system JSON file")->required();
  cmd_db->add_option("--signal", db.signal, "signal JSON file")->required();
  cmd_db->add_option("--x0", db.x0, "start state, comma-separated")->required();
  cmd_db->add_option("--xf", db.xf, "target state, comma-separated")->required();
  cmd_db->add_option("--max-t", db.max_t, "give up after this arrival horizon (0 = automatic)");
  add_arith(cmd_db, db.arith);
  cmd_db->add_option("--out", db.out, "write the plan JSON here instead of stdout");

  SimulateArgs sim;
  auto* cmd_sim = app.add_subcommand("simulate", "run the closed or open loop, print CSV");
  cmd_sim->add_option("--system", sim.system, "system JSON file")->required();
  cmd_sim->add_option("--signal", sim.signal, "signal JSON file")->required();
  cmd_sim->add_option("--gain", sim.gain, "gain JSON file (omit for zero input)");
  cmd_sim->add_option("--network", sim.network, "network JSON file for routing signals");
  cmd_sim->add_option("--horizon", sim.horizon, "number of steps")->check(CLI::PositiveNumber);
  cmd_sim->add_option("--x0", sim.x0, "start state, comma-separated (default e_1)");
  add_arith(cmd_sim, sim.arith);
  cmd_sim->add_option("--out", sim.out, "write the CSV here instead of stdout");

  RotationArgs rot;
  auto* cmd_rot = app.add_subcommand("rotation", "rotation-plant case study");
  cmd_rot->require_subcommand(1);
  auto* cmd_rot_demo =
      cmd_rot->add_subcommand("demo", "run the nonlinear stabilizer, print a rate report");
  cmd_rot_demo->add_option("--alpha", rot.alpha, "rotation angle in (0, pi/30]")->required();
  cmd_rot_demo->add_option("--horizon", rot.horizon, "number of steps")
      ->check(CLI::PositiveNumber);
  cmd_rot_demo->add_option("--signal", rot.signal,
                           "signal JSON file (omit for a seeded random signal)");
  cmd_rot_demo->add_option("--seed", rot.seed, "seed for the default random signal");
  cmd_rot_demo->add_option("--csv", rot.csv, "also write the trajectory CSV here");
  cmd_rot_demo->add_option("--out", rot.out, "write the report JSON here instead of stdout");

  int repro_id = 0;
  auto* cmd_repro = app.add_subcommand("reproduce", "re-run a bundled case study (1-4)");
  cmd_repro->add_option("id", repro_id, "case study number")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_stab->parsed()) return run_stability(stab);
    if (cmd_eval_gain->parsed()) return run_stability(eval);
    if (cmd_ctrl->parsed()) return run_controllability(ctrl_system, ctrl_arith, ctrl_out);
    if (cmd_sc->parsed()) return run_synth_scalar(sc_system, sc_arith, sc_out);
    if (cmd_db->parsed()) return run_synth_deadbeat(db);
    if (cmd_sim->parsed()) return run_simulate(sim);
    if (cmd_rot_demo->parsed()) return run_rotation_demo(rot);
    if (cmd_repro->parsed()) return run_reproduce(repro_id);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
