#pragma once

#include <sdtk/model.hpp>
#include <sdtk/signals.hpp>

#include <memory>
#include <stdexcept>
#include <vector>

namespace sdtk {

// Everything a feedback law may legitimately see at time t. pending holds the
// in-flight accumulations u_1..u_{d_max}; they are a function of past inputs
// and past delays, both known to a controller with look-ahead, so exposing
// them does not leak plant-side information. sigma_window holds
// sigma(t..t+N-1) where N is the law's declared look-ahead demand.
template <class S>
struct ControlContext {
  long long t = 0;
  const VecX<S>* x = nullptr;
  const std::vector<VecX<S>>* pending = nullptr;
  const std::vector<VecX<S>>* past_v = nullptr;  // v(t-d_max) .. v(t-1)
  std::vector<int> sigma_window;
};

template <class S>
class FeedbackLaw {
 public:
  virtual ~FeedbackLaw() = default;
  // How many future delay values the law must be told, the N of its design.
  virtual int lookahead_demand() const { return 0; }
  // Clear any internal state before a fresh run.
  virtual void reset() {}
  virtual VecX<S> control(const ControlContext<S>& ctx) = 0;
};

template <class S>
class ZeroLaw final : public FeedbackLaw<S> {
 public:
  explicit ZeroLaw(Eigen::Index m) : m_(m) {}
  VecX<S> control(const ControlContext<S>&) override {
    VecX<S> v = VecX<S>::Zero(m_);
    return v;
  }

 private:
  Eigen::Index m_;
};

// Static memory feedback with no look-ahead: v(t) = K (x(t); v(t-d_max..t-1)).
template <class S>
class LinearMemoryLaw final : public FeedbackLaw<S> {
 public:
  LinearMemoryLaw(MatX<S> K, Eigen::Index n, Eigen::Index m, int d_max) : K_(std::move(K)) {
    if (K_.cols() != n + m * d_max)
      throw std::invalid_argument("memory law: K must have n + m*d_max columns");
    if (K_.rows() == 0) throw std::invalid_argument("memory law: K has no rows");
  }
  VecX<S> control(const ControlContext<S>& ctx) override {
    const Eigen::Index n = ctx.x->size();
    const Eigen::Index m = K_.rows();
    VecX<S> z(K_.cols());
    z.head(n) = *ctx.x;
    for (std::size_t i = 0; i < ctx.past_v->size(); ++i)
      z.segment(n + static_cast<Eigen::Index>(i) * m, m) = (*ctx.past_v)[i];
    VecX<S> v = K_ * z;
    return v;
  }

 private:
  MatX<S> K_;
};

// Delay-dependent feedback: v(t) = K(sigma(t..t+N-1)) x_e(t), acting on the
// extended state (x, u_1..u_{d_max}).
template <class S>
class LinearDelayDependentLaw final : public FeedbackLaw<S> {
 public:
  LinearDelayDependentLaw(std::map<std::vector<int>, MatX<S>> gains, Eigen::Index n,
                          Eigen::Index m, int d_max, int N)
      : gains_(std::move(gains)), N_(N) {
    if (N_ < 1) throw std::invalid_argument("delay-dependent law: N must be >= 1");
    for (const auto& [tup, K] : gains_) {
      if (static_cast<int>(tup.size()) != N_)
        throw std::invalid_argument("delay-dependent law: tuple length != N");
      if (K.rows() != m || K.cols() != n + m * d_max)
        throw std::invalid_argument("delay-dependent law: gain must be m x (n + m*d_max)");
    }
  }
  int lookahead_demand() const override { return N_; }
  VecX<S> control(const ControlContext<S>& ctx) override {
    auto it = gains_.find(ctx.sigma_window);
    if (it == gains_.end())
      throw std::invalid_argument("delay-dependent law: no gain for observed delay tuple");
    const Eigen::Index n = ctx.x->size();
    const Eigen::Index m = it->second.rows();
    VecX<S> z(it->second.cols());
    z.head(n) = *ctx.x;
    for (std::size_t i = 0; i < ctx.pending->size(); ++i)
      z.segment(n + static_cast<Eigen::Index>(i) * m, m) = (*ctx.pending)[i];
    VecX<S> v = it->second * z;
    return v;
  }

 private:
  std::map<std::vector<int>, MatX<S>> gains_;
  int N_;
};

template <class S>
struct Trajectory {
  std::vector<ExtendedState<S>> states;  // x and pending at t = 0..T
  std::vector<VecX<S>> inputs;           // v(t) for t = 0..T
  std::vector<int> sigma;                // sigma(t) for t = 0..T
  std::vector<int> tau;                  // actuation bits for t = 0..T
  long long horizon() const { return static_cast<long long>(sigma.size()) - 1; }
};

// Runs Def. 1 dynamics under the given law and switching signal. The signal
// must be defined on 0..T+N where N is the law's look-ahead demand; the tail
// window is what the controller is promised, never padded.
template <class S>
Trajectory<S> simulate(const Plant<S>& plant, FeedbackLaw<S>& law, const SwitchingSignal& sig,
                       const VecX<S>& x0, long long T) {
  validate_plant(plant);
  if (T < 1) throw std::invalid_argument("simulate: horizon must be at least 1");
  if (x0.size() != plant.n()) throw std::invalid_argument("simulate: x0 has wrong dimension");
  const int N = law.lookahead_demand();
  if (N > plant.lookahead)
    throw std::invalid_argument("simulate: law demands more look-ahead than the plant offers");
  law.reset();

  const Eigen::Index m = plant.m();
  const int d_max = plant.d_max();
  Trajectory<S> traj;
  traj.states.reserve(static_cast<std::size_t>(T) + 1);
  traj.inputs.reserve(static_cast<std::size_t>(T) + 1);
  traj.sigma.reserve(static_cast<std::size_t>(T) + 1);

  ExtendedState<S> s = ExtendedState<S>::zero(plant.n(), m, d_max);
  s.x = x0;
  std::vector<VecX<S>> past_v(static_cast<std::size_t>(d_max));
  for (auto& v : past_v) {
    VecX<S> z = VecX<S>::Zero(m);
    v = z;
  }

  for (long long t = 0; t <= T; ++t) {
    traj.states.push_back(s);
    ControlContext<S> ctx;
    ctx.t = t;
    ctx.x = &traj.states.back().x;
    ctx.pending = &traj.states.back().pending;
    ctx.past_v = &past_v;
    for (int j = 0; j < N; ++j) ctx.sigma_window.push_back(sig.emit(t + j));
    VecX<S> v = law.control(ctx);
    if (v.size() != m) throw std::invalid_argument("simulate: law returned wrong input dimension");
    const int sigma_t = sig.emit(t);
    traj.inputs.push_back(v);
    traj.sigma.push_back(sigma_t);
    if (t < T) {
      s = step(plant, s, sigma_t, v);
      if (d_max > 0) {
        past_v.erase(past_v.begin());
        past_v.push_back(v);
      }
    }
  }
  traj.tau = actuation_times(sig, T);
  return traj;
}

}  // namespace sdtk
