#pragma once

#include <sdtk/linalg.hpp>

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdtk {

// Plant actuated through a network that delays each input v(t) by sigma(t)
// slots, sigma(t) drawn from a finite delay set. The controller may know the
// next `lookahead` delay values when emitting v(t).
template <class S>
struct Plant {
  MatX<S> A;
  MatX<S> B;
  std::vector<int> delays;  // sorted ascending, duplicate-free
  int lookahead = 0;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  int d_max() const { return delays.empty() ? 0 : delays.back(); }
  int d_min() const { return delays.empty() ? 0 : delays.front(); }
  bool has_delay(int d) const { return std::binary_search(delays.begin(), delays.end(), d); }
};

template <class S>
MatX<S> kalman_matrix(const MatX<S>& A, const MatX<S>& B) {
  const Eigen::Index n = A.rows(), m = B.cols();
  MatX<S> K(n, n * m);
  MatX<S> block = B;
  for (Eigen::Index i = 0; i < n; ++i) {
    K.middleCols(i * m, m) = block;
    if (i + 1 < n) block = A * block;
  }
  return K;
}

inline bool controllable_pair(const MatR& A, const MatR& B) {
  return rank_exact(kalman_matrix(A, B)) == A.rows();
}
inline bool controllable_pair(const Matd& A, const Matd& B) {
  return rank_svd(kalman_matrix(A, B)) == A.rows();
}

template <class S>
void validate_plant(const Plant<S>& p) {
  if (p.A.rows() == 0 || p.A.rows() != p.A.cols())
    throw std::invalid_argument("plant: A must be square and nonempty");
  if (p.B.rows() != p.A.rows() || p.B.cols() == 0)
    throw std::invalid_argument("plant: B must have as many rows as A and at least one column");
  if (p.delays.empty()) throw std::invalid_argument("plant: delay set is empty");
  for (std::size_t i = 0; i < p.delays.size(); ++i) {
    if (p.delays[i] < 0) throw std::invalid_argument("plant: negative delay");
    if (i > 0 && p.delays[i] <= p.delays[i - 1])
      throw std::invalid_argument("plant: delays must be strictly increasing");
  }
  if (p.lookahead < 0) throw std::invalid_argument("plant: negative lookahead");
  if (!controllable_pair(p.A, p.B))
    throw std::invalid_argument("plant: the pair (A, B) must be controllable");
}

// Plant state plus the inputs currently in flight: pending[s-1] holds u_s(t),
// the accumulated input that will reach the actuator at time t+s-1.
template <class S>
struct ExtendedState {
  VecX<S> x;
  std::vector<VecX<S>> pending;  // u_1 .. u_{d_max}

  static ExtendedState zero(Eigen::Index n, Eigen::Index m, int d_max) {
    ExtendedState s;
    s.x = VecX<S>::Zero(n);
    s.pending.assign(static_cast<std::size_t>(d_max), VecX<S>::Zero(m));
    return s;
  }

  Eigen::Index dim() const {
    Eigen::Index d = x.size();
    for (const auto& u : pending) d += u.size();
    return d;
  }

  VecX<S> flat() const {
    VecX<S> out(dim());
    out.head(x.size()) = x;
    Eigen::Index at = x.size();
    for (const auto& u : pending) {
      out.segment(at, u.size()) = u;
      at += u.size();
    }
    return out;
  }
};

// Controller-side memory for delay-independent laws: the current state and the
// last d_max emitted inputs v(t-d_max) .. v(t-1).
template <class S>
struct ControllerMemoryState {
  VecX<S> x;
  std::vector<VecX<S>> past_v;

  VecX<S> flat() const {
    Eigen::Index d = x.size();
    for (const auto& v : past_v) d += v.size();
    VecX<S> out(d);
    out.head(x.size()) = x;
    Eigen::Index at = x.size();
    for (const auto& v : past_v) {
      out.segment(at, v.size()) = v;
      at += v.size();
    }
    return out;
  }
};

// One exact transition: arrivals are summed, no arrival means zero actuation,
// and the in-flight queue shifts with v(t) inserted at slot sigma(t).
template <class S>
ExtendedState<S> step(const Plant<S>& p, const ExtendedState<S>& s, int sigma_t,
                      const VecX<S>& v_t) {
  if (!p.has_delay(sigma_t)) throw std::invalid_argument("step: delay outside the delay set");
  if (v_t.size() != p.m()) throw std::invalid_argument("step: input dimension mismatch");
  const int dmax = p.d_max();
  if (static_cast<int>(s.pending.size()) != dmax)
    throw std::invalid_argument("step: pending queue has wrong length");
  ExtendedState<S> out;
  VecX<S> arriving = dmax > 0 ? s.pending[0] : VecX<S>::Zero(p.m());
  if (sigma_t == 0) arriving += v_t;
  out.x = p.A * s.x + p.B * arriving;
  out.pending.resize(dmax);
  for (int slot = 1; slot <= dmax; ++slot) {
    VecX<S> u = slot < dmax ? s.pending[slot] : VecX<S>::Zero(p.m());
    if (sigma_t == slot) u += v_t;
    out.pending[slot - 1] = u;
  }
  return out;
}

// Finite set of equally sized square matrices, switched arbitrarily.
template <class S>
struct MatrixSet {
  Eigen::Index dim = 0;
  std::vector<MatX<S>> members;
  std::vector<std::string> labels;
};
using MatrixSetD = MatrixSet<double>;
using MatrixSetR = MatrixSet<Rational>;

template <class S>
void validate_matrix_set(const MatrixSet<S>& set) {
  if (set.members.empty()) throw std::invalid_argument("matrix set: no members");
  if (set.labels.size() != set.members.size())
    throw std::invalid_argument("matrix set: one label per member required");
  for (const auto& M : set.members)
    if (M.rows() != set.dim || M.cols() != set.dim)
      throw std::invalid_argument("matrix set: members must be square of the stated dimension");
  auto sorted = set.labels;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("matrix set: duplicate labels");
}

inline MatrixSetD to_double(const MatrixSetR& set) {
  MatrixSetD out;
  out.dim = set.dim;
  out.labels = set.labels;
  out.members.reserve(set.members.size());
  for (const auto& M : set.members) out.members.push_back(to_double(M));
  return out;
}
inline const MatrixSetD& to_double(const MatrixSetD& set) { return set; }

// Switching-system form of the plant: state (x, u_1..u_{d_max}) with
// z(t+1) = A_e z(t) + B_e(sigma(t)) v(t).
template <class S>
struct ExtendedSystem {
  MatX<S> A_e;
  std::vector<MatX<S>> B_e;  // aligned with delays
  std::vector<int> delays;

  const MatX<S>& B_for(int d) const {
    auto it = std::lower_bound(delays.begin(), delays.end(), d);
    if (it == delays.end() || *it != d)
      throw std::invalid_argument("extended system: delay outside the delay set");
    return B_e[static_cast<std::size_t>(it - delays.begin())];
  }
};

template <class S>
ExtendedSystem<S> build_extended(const Plant<S>& p) {
  const Eigen::Index n = p.n(), m = p.m();
  const int dmax = p.d_max();
  const Eigen::Index dim = n + m * dmax;
  ExtendedSystem<S> sys;
  sys.delays = p.delays;
  sys.A_e = MatX<S>::Zero(dim, dim);
  sys.A_e.topLeftCorner(n, n) = p.A;
  if (dmax > 0) {
    sys.A_e.block(0, n, n, m) = p.B;  // u_1 reaches the plant
    for (int s = 1; s < dmax; ++s)     // u_s(t+1) = u_{s+1}(t)
      sys.A_e.block(n + (s - 1) * m, n + s * m, m, m) = MatX<S>::Identity(m, m);
  }
  for (int d : p.delays) {
    MatX<S> Bd = MatX<S>::Zero(dim, m);
    if (d == 0)
      Bd.topRows(n) = p.B;
    else
      Bd.block(n + (d - 1) * m, 0, m, m) = MatX<S>::Identity(m, m);
    sys.B_e.push_back(Bd);
  }
  return sys;
}

namespace detail {
inline std::string tuple_label(const std::vector<int>& tuple) {
  std::ostringstream os;
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    if (i) os << ',';
    os << tuple[i];
  }
  return os.str();
}

inline std::vector<std::vector<int>> delay_tuples(const std::vector<int>& delays, int length) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(length), 0);
  std::vector<std::size_t> idx(static_cast<std::size_t>(length), 0);
  while (true) {
    for (int i = 0; i < length; ++i) cur[i] = delays[idx[i]];
    out.push_back(cur);
    int pos = length - 1;
    while (pos >= 0) {
      if (++idx[pos] < delays.size()) break;
      idx[pos--] = 0;
    }
    if (pos < 0) break;
  }
  return out;
}
}  // namespace detail

// Closed loop of a delay-dependent law v(t) = K(sigma(t..t+N-1)) x_e(t): one
// member per delay tuple, switched arbitrarily.
template <class S>
MatrixSet<S> build_dd_closed_loop(const Plant<S>& p,
                                  const std::map<std::vector<int>, MatX<S>>& controller) {
  const int N = p.lookahead;
  if (N < 1) throw std::invalid_argument("delay-dependent closed loop needs lookahead >= 1");
  auto sys = build_extended(p);
  const Eigen::Index dim = sys.A_e.rows();
  MatrixSet<S> set;
  set.dim = dim;
  for (const auto& tuple : detail::delay_tuples(p.delays, N)) {
    auto it = controller.find(tuple);
    if (it == controller.end())
      throw std::invalid_argument("delay-dependent controller misses gain for tuple " +
                                  detail::tuple_label(tuple));
    const MatX<S>& K = it->second;
    if (K.rows() != p.m() || K.cols() != dim)
      throw std::invalid_argument("delay-dependent gain has wrong shape");
    set.members.push_back(sys.A_e + sys.B_for(tuple[0]) * K);
    set.labels.push_back(detail::tuple_label(tuple));
  }
  return set;
}

// Closed loop of a delay-independent law v(t) = K (x(t), v(t-d_max..t-1)) on
// the state w = (x, u_1..u_{d_max}, v(t-d_max)..v(t-1)): |D| members switched
// arbitrarily.
template <class S>
MatrixSet<S> build_di_reduction(const Plant<S>& p, const MatX<S>& K) {
  if (p.lookahead != 0)
    throw std::invalid_argument("delay-independent reduction needs lookahead = 0");
  const Eigen::Index n = p.n(), m = p.m();
  const int dmax = p.d_max();
  if (K.rows() != m || K.cols() != n + m * dmax)
    throw std::invalid_argument("delay-independent gain has wrong shape");
  const Eigen::Index dim = n + 2 * m * dmax;
  // row of K acting on w: K_x on x, K_v(j) on v(t-d_max+j-1)
  MatX<S> Kw = MatX<S>::Zero(m, dim);
  Kw.leftCols(n) = K.leftCols(n);
  if (dmax > 0) Kw.rightCols(m * dmax) = K.rightCols(m * dmax);
  MatrixSet<S> set;
  set.dim = dim;
  for (int d : p.delays) {
    MatX<S> M = MatX<S>::Zero(dim, dim);
    M.block(0, 0, n, n) = p.A;
    if (dmax > 0) {
      M.block(0, n, n, m) = p.B;  // u_1 actuates
      for (int s = 1; s < dmax; ++s)
        M.block(n + (s - 1) * m, n + s * m, m, m) = MatX<S>::Identity(m, m);
      for (int j = 1; j < dmax; ++j)  // shift the input history
        M.block(n + m * dmax + (j - 1) * m, n + m * dmax + j * m, m, m) =
            MatX<S>::Identity(m, m);
      M.bottomRows(m) += Kw;  // v(t) enters the history
    }
    // v(t) = Kw w reaches the plant after d slots
    if (d == 0)
      M.topRows(n) += p.B * Kw;
    else
      M.middleRows(n + (d - 1) * m, m) += Kw;
    set.members.push_back(M);
    set.labels.push_back(std::to_string(d));
  }
  return set;
}

// Scalar plant with delays {0,1} fed back through a one-step state memory; the
// two switched closed-loop matrices in companion coordinates.
inline MatrixSetD build_example3_matrices(double a, double b, double k1, double k2) {
  MatrixSetD set;
  set.dim = 3;
  Matd M0(3, 3), M1(3, 3);
  M0 << 0, 1, 0,
        b * k1, a + b * k2, 1,
        0, 0, 0;
  M1 << 0, 1, 0,
        0, a, 1,
        b * k1, b * k2, 0;
  set.members = {M0, M1};
  set.labels = {"0", "1"};
  return set;
}

// Two-block switching pair whose stability encodes an arbitrary two-matrix
// stability question; used to exercise the analysis on hard instances.
inline MatrixSetD build_np_gadget(const Matd& A1, const Matd& A2) {
  if (A1.rows() != A1.cols() || A2.rows() != A2.cols() || A1.rows() != A2.rows())
    throw std::invalid_argument("gadget blocks must be square of equal dimension");
  const Eigen::Index n = A1.rows();
  MatrixSetD set;
  set.dim = 2 * n;
  Matd M1 = Matd::Zero(2 * n, 2 * n), M2 = Matd::Zero(2 * n, 2 * n);
  M1.topLeftCorner(n, n) = A1;
  M1.topRightCorner(n, n) = Matd::Identity(n, n);
  M2.topRightCorner(n, n) = Matd::Identity(n, n);
  M2.bottomLeftCorner(n, n) = A2;
  set.members = {M1, M2};
  set.labels = {"A1", "A2"};
  return set;
}

}  // namespace sdtk
