#pragma once

#include <sdtk/controllability.hpp>
#include <sdtk/jsr.hpp>
#include <sdtk/simulate.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sdtk {

namespace detail {

template <class S>
S scalar_pow(const S& a, long long e) {
  if (e >= 0) {
    S r(1);
    for (long long i = 0; i < e; ++i) r = r * a;
    return r;
  }
  S inv = S(1) / a;
  S r(1);
  for (long long i = 0; i < -e; ++i) r = r * inv;
  return r;
}

}  // namespace detail

// Switching dead-beat gains for the scalar plant x(t+1) = a x(t) + b v(t'):
// K(d) = K*(d_max) a^{d-d_max} with K*(d) = (-a^{d+1}/b, -a^d, ..., -a).
// Zeroes the state by time d_max+1 knowing only the current delay (N = 1).
template <class S>
struct ScalarDeadbeatController {
  S a, b;
  std::vector<int> delays;
  int d_max = 0;
  std::map<std::vector<int>, MatX<S>> gains;  // keyed by the 1-tuple {d}

  LinearDelayDependentLaw<S> law() const {
    return LinearDelayDependentLaw<S>(gains, 1, 1, d_max, 1);
  }
};

template <class S>
ScalarDeadbeatController<S> scalar_deadbeat(const S& a, const S& b, std::vector<int> D) {
  bool b_zero;
  if constexpr (std::is_same_v<S, Rational>) {
    b_zero = b.is_zero();
  } else {
    b_zero = b == 0.0;
  }
  if (b_zero) throw std::invalid_argument("scalar_deadbeat: b must be nonzero");
  if (D.empty()) throw std::invalid_argument("scalar_deadbeat: empty delay set");
  for (std::size_t i = 0; i < D.size(); ++i) {
    if (D[i] < 0) throw std::invalid_argument("scalar_deadbeat: negative delay");
    if (i > 0 && D[i] <= D[i - 1])
      throw std::invalid_argument("scalar_deadbeat: delays must be strictly increasing");
  }
  ScalarDeadbeatController<S> ctl;
  ctl.a = a;
  ctl.b = b;
  ctl.delays = std::move(D);
  ctl.d_max = ctl.delays.back();
  bool a_zero;
  if constexpr (std::is_same_v<S, Rational>) {
    a_zero = a.is_zero();
  } else {
    a_zero = a == 0.0;
  }
  for (int d : ctl.delays) {
    MatX<S> K(1, 1 + ctl.d_max);
    if (a_zero) {
      // A is nilpotent of index 1: any pending inputs vanish from the state
      // by themselves, so the one-shot controller does nothing.
      for (Eigen::Index j = 0; j <= ctl.d_max; ++j) K(0, j) = S(0);
    } else {
      K(0, 0) = S(0) - detail::scalar_pow(a, d + 1) / b;
      for (int j = 1; j <= ctl.d_max; ++j) K(0, j) = S(0) - detail::scalar_pow(a, d + 1 - j);
    }
    ctl.gains[{d}] = K;
  }
  return ctl;
}

// Open-loop plan reaching x_f at time t: the packets that arrive by t-1 give
// x(t) = A^t x0 + M v with M the columns A^{(t-1)-t'-sigma(t')} b; solve for
// the sent values, minimum-norm when underdetermined.
template <class S>
struct DeadbeatPlan {
  long long t = 0;
  std::vector<long long> send_times;  // senders whose packets arrive by t-1
  VecX<S> values;                     // v(send_times[i])
  VecX<S> x_f;

  S value_at(long long time) const {
    for (std::size_t i = 0; i < send_times.size(); ++i)
      if (send_times[i] == time) return values(static_cast<Eigen::Index>(i));
    return S(0);
  }
};

template <class S>
class PlanLaw final : public FeedbackLaw<S> {
 public:
  explicit PlanLaw(const DeadbeatPlan<S>& plan) : plan_(plan) {}
  VecX<S> control(const ControlContext<S>& ctx) override {
    VecX<S> v(1);
    v(0) = plan_.value_at(ctx.t);
    return v;
  }

 private:
  DeadbeatPlan<S> plan_;
};

template <class S>
DeadbeatPlan<S> deadbeat_plan(const Plant<S>& plant, const SwitchingSignal& sig,
                              const VecX<S>& x0, const VecX<S>& x_f, long long max_t = 0) {
  if (plant.m() != 1) throw std::invalid_argument("deadbeat_plan: single-input plants only");
  const Eigen::Index n = plant.n();
  if (x0.size() != n || x_f.size() != n)
    throw std::invalid_argument("deadbeat_plan: state dimension mismatch");
  if (max_t <= 0)
    max_t = static_cast<long long>(
                std::min<unsigned long long>(prefix_bound(n, plant.delays.size()), 100000ULL)) +
            1;
  for (long long t = 1; t <= max_t; ++t) {
    auto snap = controllability_matrix(plant, sig, t - 1);
    if (snap.rank < n) continue;
    DeadbeatPlan<S> plan;
    plan.t = t;
    plan.x_f = x_f;
    for (long long tp = 0; tp <= t - 1; ++tp)
      if (t - 1 - tp - sig.emit(tp) >= 0) plan.send_times.push_back(tp);
    MatX<S> M = snap.columns;
    VecX<S> rhs = x_f - mat_pow(plant.A, t) * x0;
    if constexpr (std::is_same_v<S, Rational>) {
      MatR gram = M * M.transpose();
      VecR y = inverse_exact(gram) * rhs;
      plan.values = M.transpose() * y;
    } else {
      Eigen::CompleteOrthogonalDecomposition<Matd> cod(M);
      plan.values = cod.solve(rhs);
    }
    return plan;
  }
  throw std::runtime_error(
      "deadbeat_plan: rank never reached n within the horizon; "
      "the plant is not controllable along this signal");
}

// Delay-independent linear gain evaluation: reduce to the arbitrary-switching
// closed loop and run the stability analysis.
inline StabilityVerdict evaluate_di_gain(const Plant<double>& plant, const Matd& K,
                                         double epsilon = 1e-2, JsrBudget budget = {}) {
  auto cl = build_di_reduction(plant, K);
  return is_stable(cl, epsilon, budget);
}

inline StabilityVerdict evaluate_di_gain(const Plant<Rational>& plant, const MatR& K,
                                         double epsilon = 1e-2, JsrBudget budget = {}) {
  auto cl = build_di_reduction(plant, K);
  return is_stable(cl, epsilon, budget);
}

// Nonlinear stabilizer for the rotation plant (A = rot(alpha), B = e1,
// D = {0,1}, no look-ahead). Keeps the state near the line L of slope
// -tan(3a/2) and shrinks it by about 1/3 every two to three steps; the delay
// of each emitted packet is inferred from the next observed state.
class RotationController final : public FeedbackLaw<double> {
 public:
  explicit RotationController(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0) || alpha > kMaxAlpha)
      throw std::invalid_argument("rotation controller: alpha must lie in (0, pi/30]");
    A_ << std::cos(alpha), -std::sin(alpha), std::sin(alpha), std::cos(alpha);
    tan32_ = std::tan(1.5 * alpha);
    proj_ = std::cos(0.5 * alpha) / std::sin(1.5 * alpha);
    reset();
  }

  static constexpr double kMaxAlpha = 3.14159265358979323846 / 30.0;

  void reset() override {
    phase_ = Phase::Start;
    base_.setZero();
    undecided_ = 0.0;
    wn_ = 0.0;
    rn_.setZero();
    last_w_ = std::numeric_limits<double>::quiet_NaN();
    cycle_w.clear();
    contraction_ratios.clear();
    drift_ratios.clear();
  }

  VecX<double> control(const ControlContext<double>& ctx) override {
    if (ctx.x->size() != 2) throw std::invalid_argument("rotation controller: state must be 2-D");
    const Vecd x = *ctx.x;
    double v = 0.0;
    switch (phase_) {
      case Phase::Start: {
        Vecd xhat = A_ * x;
        wn_ = xhat(1);
        v = -xhat(0) - wn_ / tan32_;
        rn_ = (A_ - Matd::Identity(2, 2)) * xhat;
        base_ = xhat;
        undecided_ = v;
        phase_ = Phase::Judge;
        break;
      }
      case Phase::Judge: {
        // Did the packet emitted last step arrive immediately?
        Vecd p0 = base_;
        p0(0) += undecided_;
        bool immediate = (x - p0).norm() <= (x - base_).norm();
        if (immediate) {
          begin_cycle(wn_, Vecd::Zero(2));
          v = start_projection(x);
        } else {
          // still in flight: it lands next step, emit nothing and wait
          base_ = A_ * x;
          base_(0) += undecided_;
          undecided_ = 0.0;
          phase_ = Phase::Land;
          v = 0.0;
        }
        break;
      }
      case Phase::Mid: {
        Vecd p0 = base_;
        p0(0) += undecided_;
        bool immediate = (x - p0).norm() <= (x - base_).norm();
        double va = undecided_;
        Vecd xhat = A_ * x;
        if (!immediate) xhat(0) += va;  // lands one step late
        wn_ = xhat(1);
        v = -xhat(0) - wn_ / tan32_;
        rn_ = (A_ - Matd::Identity(2, 2)) * xhat;
        base_ = xhat;
        undecided_ = v;
        phase_ = Phase::Judge;
        break;
      }
      case Phase::Land: {
        begin_cycle(wn_, rn_);
        v = start_projection(x);
        break;
      }
    }
    VecX<double> out(1);
    out(0) = v;
    return out;
  }

  // diagnostics recorded at every cycle boundary
  std::vector<double> cycle_w;
  std::vector<double> contraction_ratios;  // |w'| / |w|
  std::vector<double> drift_ratios;        // ||r|| / (2 |w| sin alpha)

 private:
  enum class Phase { Start, Judge, Mid, Land };

  void begin_cycle(double w, const Vecd& r) {
    cycle_w.push_back(w);
    if (w != 0.0) drift_ratios.push_back(r.norm() / (2.0 * std::abs(w) * std::sin(alpha_)));
    if (!std::isnan(last_w_) && last_w_ != 0.0)
      contraction_ratios.push_back(std::abs(w) / std::abs(last_w_));
    last_w_ = w;
    w_ = w;
  }

  double start_projection(const Vecd& x) {
    double va = w_ * proj_;
    base_ = A_ * x;
    undecided_ = va;
    phase_ = Phase::Mid;
    return va;
  }

  double alpha_;
  Matd A_{2, 2};
  double tan32_ = 0.0, proj_ = 0.0;
  Phase phase_ = Phase::Start;
  Vecd base_{2};
  double undecided_ = 0.0;
  double wn_ = 0.0, w_ = 0.0;
  Vecd rn_{2};
  double last_w_ = 0.0;
};

inline Plant<double> rotation_plant(double alpha) {
  Plant<double> p;
  p.A = Matd(2, 2);
  p.A << std::cos(alpha), -std::sin(alpha), std::sin(alpha), std::cos(alpha);
  p.B = Matd(2, 1);
  p.B << 1.0, 0.0;
  p.delays = {0, 1};
  return p;
}

// The two closed-loop matrices a linear delay-independent gain (k1, k2)
// produces for the rotation plant, by arrival case.
inline std::pair<Matd, Matd> rotation_linear_members(double alpha, double k1, double k2) {
  double ca = std::cos(alpha), sa = std::sin(alpha);
  Matd A0(3, 3), A1(3, 3);
  A0 << ca + k1, -sa + k2, 1, sa, ca, 0, 0, 0, 0;
  A1 << ca, -sa, 1, sa, ca, 0, k1, k2, 0;
  return {A0, A1};
}

struct RotationFloorReport {
  double alpha = 0.0;
  double grid_min = 0.0;  // min over the grid of max(rho(A0), rho(A1))
  double k1_at_min = 0.0, k2_at_min = 0.0;
  bool floor_respected = false;          // grid_min >= linear_rate_floor() - 1e-6
  int pointwise_bound_violations = 0;    // points where the analytic bound fails
  double max_product_identity_error = 0.0;   // nonzero-eigenvalue product of A0
  double max_determinant_identity_error = 0.0;  // det(A1)
};

// Sweeps linear gains and checks that no (k1, k2) beats the analytic rate
// floor: the nonzero eigenvalues of A0 multiply to 1 + k1 cos a - k2 sin a
// and det(A1) = k2 sin a - k1 cos a, which together force
// rho^2 + rho^3 >= 1 at every point.
inline RotationFloorReport rotation_linear_floor_check(double alpha, double lo = -3.0,
                                                       double hi = 3.0, double step = 0.01) {
  if (!(step > 0.0) || !(hi >= lo))
    throw std::invalid_argument("rotation floor check: bad grid");
  RotationFloorReport rep;
  rep.alpha = alpha;
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double floor = linear_rate_floor();
  rep.grid_min = std::numeric_limits<double>::infinity();
  const long long steps = static_cast<long long>(std::floor((hi - lo) / step + 0.5));
  for (long long i = 0; i <= steps; ++i) {
    double k1 = lo + static_cast<double>(i) * step;
    for (long long j = 0; j <= steps; ++j) {
      double k2 = lo + static_cast<double>(j) * step;
      auto [A0, A1] = rotation_linear_members(alpha, k1, k2);
      double r0 = spectral_radius(A0);
      double r1 = spectral_radius(A1);
      double worst = std::max(r0, r1);
      if (worst < rep.grid_min) {
        rep.grid_min = worst;
        rep.k1_at_min = k1;
        rep.k2_at_min = k2;
      }
      double prod = 1.0 + k1 * ca - k2 * sa;  // two nonzero eigenvalues of A0
      double det = k2 * sa - k1 * ca;         // all three of A1
      if (r0 * r0 < std::abs(prod) - 1e-9 || r1 * r1 * r1 < std::abs(det) - 1e-9)
        ++rep.pointwise_bound_violations;
      double e2 = A0(0, 0) * A0(1, 1) - A0(0, 1) * A0(1, 0);  // sole nonzero 2x2 minor sum
      rep.max_product_identity_error =
          std::max(rep.max_product_identity_error, std::abs(e2 - prod));
      rep.max_determinant_identity_error =
          std::max(rep.max_determinant_identity_error, std::abs(A1.determinant() - det));
    }
  }
  rep.floor_respected = rep.grid_min >= floor - 1e-6;
  return rep;
}

}  // namespace sdtk
