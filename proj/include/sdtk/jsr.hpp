#pragma once

#include <sdtk/model.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdtk {

struct JsrBudget {
  int max_depth = 20;
  long long max_nodes = 1000000;
};

struct JsrBounds {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  double epsilon = 0.0;
  int explored_depth = 0;
  long long nodes = 0;
  std::vector<std::string> witness;  // labels of the product achieving lower
  bool budget_exhausted = false;     // gap > epsilon*max(1, lower) at the end
  bool certified_by_polytope = false;

  double gap() const { return upper - lower; }
  bool converged() const { return !budget_exhausted; }
};

enum class StabilityOutcome { Stable, Unstable, Undetermined };

struct StabilityVerdict {
  StabilityOutcome outcome = StabilityOutcome::Undetermined;
  JsrBounds bounds;
};

inline const char* to_string(StabilityOutcome o) {
  switch (o) {
    case StabilityOutcome::Stable: return "Stable";
    case StabilityOutcome::Unstable: return "Unstable";
    case StabilityOutcome::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

namespace detail {

// Beam search for a high-spectral-radius product. Deterministic: candidates
// ranked by score, ties broken by shorter then lexicographically smaller word.
struct BeamHit {
  double score = 0.0;
  std::vector<std::uint16_t> word;
  Matd product;
};

inline BeamHit beam_witness(const std::vector<Matd>& members, int depth = 8, std::size_t width = 40) {
  BeamHit best;
  std::vector<BeamHit> beam;
  for (std::size_t i = 0; i < members.size(); ++i) {
    BeamHit h;
    h.word = {static_cast<std::uint16_t>(i)};
    h.product = members[i];
    h.score = spectral_radius(members[i]);
    beam.push_back(h);
  }
  auto better = [](const BeamHit& a, const BeamHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.word.size() != b.word.size()) return a.word.size() < b.word.size();
    return a.word < b.word;
  };
  std::sort(beam.begin(), beam.end(), better);
  best = beam.front();
  for (int level = 2; level <= depth; ++level) {
    std::vector<BeamHit> next;
    for (const auto& h : beam) {
      for (std::size_t i = 0; i < members.size(); ++i) {
        BeamHit c;
        c.word = h.word;
        c.word.push_back(static_cast<std::uint16_t>(i));
        c.product = h.product * members[i];
        c.score = std::pow(spectral_radius(c.product), 1.0 / static_cast<double>(level));
        next.push_back(std::move(c));
      }
    }
    std::sort(next.begin(), next.end(), better);
    if (next.size() > width) next.resize(width);
    beam = std::move(next);
    if (better(beam.front(), best)) best = beam.front();
  }
  return best;
}

// Similarity transform from the (real-ified) eigenbasis of W. Norm bounds
// computed after any invertible change of basis are still joint-spectral-radius
// bounds, so this only has to be invertible, not special.
inline bool eigenbasis_transform(const Matd& W, Matd& T, Matd& Tinv) {
  const Eigen::Index n = W.rows();
  Eigen::EigenSolver<Matd> es(W);
  if (es.info() != Eigen::Success) return false;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    double ma = std::abs(es.eigenvalues()(a)), mb = std::abs(es.eigenvalues()(b));
    if (ma != mb) return ma > mb;
    return a < b;
  });
  T.resize(n, n);
  Eigen::Index col = 0;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<bool> pair_start(static_cast<std::size_t>(n), false);
  for (Eigen::Index oi = 0; oi < n && col < n; ++oi) {
    Eigen::Index i = order[static_cast<std::size_t>(oi)];
    if (used[static_cast<std::size_t>(i)]) continue;
    used[static_cast<std::size_t>(i)] = true;
    const auto lam = es.eigenvalues()(i);
    if (std::abs(lam.imag()) <= 1e-12 * std::max(1.0, std::abs(lam.real()))) {
      T.col(col++) = es.eigenvectors().col(i).real();
    } else {
      // Mark the conjugate partner as consumed and emit (Re v, Im v).
      for (Eigen::Index j = 0; j < n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        if (std::abs(es.eigenvalues()(j) - std::conj(lam)) <=
            1e-9 * std::max(1.0, std::abs(lam))) {
          used[static_cast<std::size_t>(j)] = true;
          break;
        }
      }
      pair_start[static_cast<std::size_t>(col)] = true;
      T.col(col++) = es.eigenvectors().col(i).real();
      if (col < n) T.col(col++) = es.eigenvectors().col(i).imag();
    }
  }
  if (col != n) return false;
  // Real columns get unit norm. A conjugate pair is scaled by one common
  // factor: W acts on span(Re v, Im v) as a rotation-scaling whose 2-norm is
  // exactly |lambda|, and only a uniform scaling of the pair preserves that.
  for (Eigen::Index j = 0; j < n;) {
    if (pair_start[static_cast<std::size_t>(j)] && j + 1 < n) {
      double s = std::max(T.col(j).norm(), T.col(j + 1).norm());
      if (!(s > 0)) return false;
      T.col(j) /= s;
      T.col(j + 1) /= s;
      j += 2;
    } else {
      double s = T.col(j).norm();
      if (!(s > 0)) return false;
      T.col(j) /= s;
      ++j;
    }
  }
  if (cond2(T) > 1e8) return false;
  Eigen::FullPivLU<Matd> lu(T);
  if (!lu.isInvertible()) return false;
  Tinv = lu.inverse();
  return true;
}

// l1-minimal representation y = V c, via two-phase simplex on
// min sum(c+ + c-) s.t. [V, -V] [c+; c-] = y, c >= 0.
// Returns the optimum, or +inf when y is outside span(V).
inline double l1_membership(const Matd& V, const Vecd& y) {
  const Eigen::Index nr = V.rows();
  const Eigen::Index nv = V.cols();
  const Eigen::Index ncols = 2 * nv + nr;  // +- columns plus artificials
  // Phase 1 tableau: rows are equality constraints with artificial basis.
  Matd A(nr, ncols);
  A.leftCols(nv) = V;
  A.middleCols(nv, nv) = -V;
  A.rightCols(nr) = Matd::Identity(nr, nr);
  Vecd b = y;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(nr));
  for (Eigen::Index i = 0; i < nr; ++i) {
    if (b(i) < 0) {
      A.row(i) = -A.row(i);
      b(i) = -b(i);
    }
    basis[static_cast<std::size_t>(i)] = 2 * nv + i;
  }
  Vecd cost1 = Vecd::Zero(ncols);
  cost1.tail(nr).setOnes();
  Vecd cost2 = Vecd::Zero(ncols);
  cost2.head(2 * nv).setOnes();
  cost2.tail(nr).setConstant(1e6);  // artificials never re-enter in phase 2

  auto run_simplex = [&](const Vecd& cost) {
    const int max_iter = 20000;
    for (int it = 0; it < max_iter; ++it) {
      // Reduced costs via basis multipliers.
      Matd Bm(nr, nr);
      for (Eigen::Index i = 0; i < nr; ++i) Bm.col(i) = A.col(basis[static_cast<std::size_t>(i)]);
      Eigen::FullPivLU<Matd> lu(Bm);
      if (!lu.isInvertible()) return false;
      Vecd cb(nr);
      for (Eigen::Index i = 0; i < nr; ++i) cb(i) = cost(basis[static_cast<std::size_t>(i)]);
      Vecd piv = lu.transpose().solve(cb);  // y: B^T y = c_B
      // Bland's rule: smallest index with negative reduced cost.
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < ncols; ++j) {
        bool in_basis = false;
        for (Eigen::Index i = 0; i < nr; ++i)
          if (basis[static_cast<std::size_t>(i)] == j) in_basis = true;
        if (in_basis) continue;
        double rc = cost(j) - piv.dot(A.col(j));
        if (rc < -1e-11) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;  // optimal
      Vecd dir = lu.solve(A.col(enter));
      Vecd xb = lu.solve(b);
      Eigen::Index leave = -1;
      double best_ratio = 0;
      for (Eigen::Index i = 0; i < nr; ++i) {
        if (dir(i) > 1e-11) {
          double ratio = xb(i) / dir(i);
          if (leave < 0 || ratio < best_ratio - 1e-14 ||
              (std::abs(ratio - best_ratio) <= 1e-14 &&
               basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return true;  // unbounded direction: treat as done
      basis[static_cast<std::size_t>(leave)] = enter;
    }
    return false;
  };

  if (!run_simplex(cost1)) return std::numeric_limits<double>::infinity();
  {
    Matd Bm(nr, nr);
    for (Eigen::Index i = 0; i < nr; ++i) Bm.col(i) = A.col(basis[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Matd> lu(Bm);
    if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
    Vecd xb = lu.solve(b);
    double art = 0;
    for (Eigen::Index i = 0; i < nr; ++i)
      if (basis[static_cast<std::size_t>(i)] >= 2 * nv) art += std::abs(xb(i));
    if (art > 1e-9) return std::numeric_limits<double>::infinity();  // infeasible
  }
  if (!run_simplex(cost2)) return std::numeric_limits<double>::infinity();
  Matd Bm(nr, nr);
  for (Eigen::Index i = 0; i < nr; ++i) Bm.col(i) = A.col(basis[static_cast<std::size_t>(i)]);
  Eigen::FullPivLU<Matd> lu(Bm);
  Vecd xb = lu.solve(b);
  double val = 0;
  for (Eigen::Index i = 0; i < nr; ++i) {
    if (basis[static_cast<std::size_t>(i)] >= 2 * nv) {
      // A re-entered artificial would silently fake feasibility.
      if (std::abs(xb(i)) > 1e-9) return std::numeric_limits<double>::infinity();
      continue;
    }
    val += std::max(xb(i), 0.0);
  }
  return val;
}

// Tries to certify JSR <= lambda by growing a symmetric polytope invariant
// under members/lambda, seeded with the leading eigenvector of the witness
// product. Soundness needs the final vertex set to span R^n; otherwise the
// dynamics quotiented by span(V) are unconstrained and we reject.
inline bool polytope_certificate(const std::vector<Matd>& members, const Matd& witness_product,
                                 double lambda, std::size_t vertex_cap = 2000) {
  const Eigen::Index n = witness_product.rows();
  Eigen::EigenSolver<Matd> es(witness_product);
  if (es.info() != Eigen::Success) return false;
  Eigen::Index lead = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    if (std::abs(es.eigenvalues()(i)) > std::abs(es.eigenvalues()(lead))) lead = i;
  const auto lam = es.eigenvalues()(lead);
  if (std::abs(lam.imag()) > 1e-9 * std::max(1.0, std::abs(lam.real()))) return false;
  Vecd v0 = es.eigenvectors().col(lead).real();
  if (!(v0.norm() > 0)) return false;
  v0 /= v0.norm();

  std::vector<Matd> scaled;
  for (const auto& M : members) scaled.push_back(M / lambda);

  std::vector<Vecd> verts = {v0};
  std::size_t next = 0;
  while (next < verts.size()) {
    if (verts.size() > vertex_cap) return false;
    Vecd v = verts[next++];
    for (const auto& B : scaled) {
      Vecd y = B * v;
      Matd V(n, static_cast<Eigen::Index>(verts.size()));
      for (std::size_t k = 0; k < verts.size(); ++k)
        V.col(static_cast<Eigen::Index>(k)) = verts[k];
      double opt = l1_membership(V, y);
      if (!(opt <= 1.0 + 1e-9)) verts.push_back(y);
    }
  }
  Matd V(n, static_cast<Eigen::Index>(verts.size()));
  for (std::size_t k = 0; k < verts.size(); ++k) V.col(static_cast<Eigen::Index>(k)) = verts[k];
  return rank_svd(V) == n;
}

}  // namespace detail

// Branch-and-bound bounds on the joint spectral radius. Level-synchronous and
// serial, so results are bit-reproducible. Norms are evaluated in a similarity
// basis adapted to the best product found by a short beam search, which makes
// diagonalizable single matrices exact at depth 1 and tightens most sets.
inline JsrBounds jsr_bounds(const MatrixSet<double>& set, double epsilon,
                            const JsrBudget& budget = {}) {
  validate_matrix_set(set);
  if (!(epsilon > 0)) throw std::invalid_argument("jsr: epsilon must be positive");
  if (set.members.size() > 65535) throw std::invalid_argument("jsr: too many members");
  const std::size_t k = set.members.size();

  JsrBounds out;
  out.epsilon = epsilon;

  auto hit = detail::beam_witness(set.members);
  out.lower = hit.score;
  for (auto wi : hit.word) out.witness.push_back(set.labels[wi]);

  Matd T, Tinv;
  std::vector<Matd> pre;
  if (detail::eigenbasis_transform(hit.product, T, Tinv)) {
    for (const auto& M : set.members) pre.push_back(Tinv * M * T);
  } else {
    pre = set.members;
  }

  const auto theta = [&]() { return out.lower + epsilon * std::max(1.0, out.lower); };
  const auto gap_ok = [&]() {
    return out.upper - out.lower <= epsilon * std::max(1.0, out.lower);
  };

  double max_pruned = 0.0;
  // Current frontier: product matrices, prefix-min norm scores, flat words.
  std::vector<Matd> mats;
  std::vector<double> pvals;
  std::vector<std::uint16_t> words;

  // Level 1 seeds.
  {
    double level_max = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      ++out.nodes;
      double nrm = op_norm2(pre[i]);
      double rho = spectral_radius(set.members[i]);
      if (rho > out.lower) {
        out.lower = rho;
        out.witness = {set.labels[i]};
      }
      double p = nrm;
      if (p > theta()) {
        mats.push_back(pre[i]);
        pvals.push_back(p);
        words.push_back(static_cast<std::uint16_t>(i));
        level_max = std::max(level_max, p);
      } else {
        max_pruned = std::max(max_pruned, p);
      }
    }
    out.upper = std::max(max_pruned, level_max);
    out.explored_depth = 1;
  }

  for (int level = 2; level <= budget.max_depth; ++level) {
    if (mats.empty() || gap_ok()) break;
    if (out.nodes + static_cast<long long>(mats.size()) * static_cast<long long>(k) >
        budget.max_nodes) {
      out.budget_exhausted = true;
      break;
    }
    std::vector<Matd> nmats;
    std::vector<double> npvals;
    std::vector<std::uint16_t> nwords;
    double level_max = 0.0;
    const double inv_len = 1.0 / static_cast<double>(level);
    for (std::size_t pi = 0; pi < mats.size(); ++pi) {
      for (std::size_t i = 0; i < k; ++i) {
        ++out.nodes;
        Matd child = mats[pi] * pre[i];
        double p = std::min(pvals[pi], std::pow(op_norm2(child), inv_len));
        double rho = std::pow(spectral_radius(child), inv_len);
        if (rho > out.lower) {
          out.lower = rho;
          out.witness.clear();
          for (int j = 0; j < level - 1; ++j)
            out.witness.push_back(set.labels[words[pi * static_cast<std::size_t>(level - 1) +
                                                    static_cast<std::size_t>(j)]]);
          out.witness.push_back(set.labels[i]);
        }
        if (p > theta()) {
          nmats.push_back(std::move(child));
          npvals.push_back(p);
          for (int j = 0; j < level - 1; ++j)
            nwords.push_back(words[pi * static_cast<std::size_t>(level - 1) +
                                   static_cast<std::size_t>(j)]);
          nwords.push_back(static_cast<std::uint16_t>(i));
          level_max = std::max(level_max, p);
        } else {
          max_pruned = std::max(max_pruned, p);
        }
      }
    }
    mats = std::move(nmats);
    pvals = std::move(npvals);
    words = std::move(nwords);
    out.explored_depth = level;
    out.upper = std::min(out.upper, std::max(max_pruned, level_max));
  }
  if (!mats.empty() && !gap_ok() && !out.budget_exhausted) out.budget_exhausted = true;
  if (mats.empty()) out.budget_exhausted = false;

  // Norm bounding stalls on sets whose extremal product is dominated by a
  // defective or mixing structure. When the verdict-relevant question
  // (above or below 1) is still open, try an invariant polytope around the
  // witness product before giving up.
  if (out.budget_exhausted && out.lower < 1.0 && out.upper >= 1.0 && !out.witness.empty()) {
    Matd W = Matd::Identity(set.dim, set.dim);
    for (const auto& lbl : out.witness) {
      std::size_t idx = 0;
      while (set.labels[idx] != lbl) ++idx;
      W = W * set.members[idx];
    }
    for (double mult : {1e-4, 1e-3, 1e-2}) {
      double lambda = out.lower * (1.0 + mult);
      if (detail::polytope_certificate(set.members, W, lambda)) {
        out.upper = std::min(out.upper, lambda * (1.0 + 1e-8));
        out.certified_by_polytope = true;
        out.budget_exhausted = !gap_ok();
        break;
      }
    }
  }
  return out;
}

inline JsrBounds jsr_bounds(const MatrixSet<Rational>& set, double epsilon,
                            const JsrBudget& budget = {}) {
  return jsr_bounds(to_double(set), epsilon, budget);
}

// Stability of the arbitrary-switching system x(t+1) = M(sigma(t)) x(t):
// stable iff JSR < 1. A single member with spectral radius at (or numerically
// indistinguishable from) 1 settles the question without any product search.
inline StabilityVerdict is_stable(const MatrixSet<double>& set, double epsilon = 1e-2,
                                  const JsrBudget& budget = {}) {
  validate_matrix_set(set);
  constexpr double kSlack = 1e-7;  // covers defective eigenvalues computed near 1
  StabilityVerdict v;
  double worst_rho = 0.0, worst_norm = 0.0;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    double r = spectral_radius(set.members[i]);
    if (r > worst_rho) {
      worst_rho = r;
      worst = i;
    }
    worst_norm = std::max(worst_norm, op_norm2(set.members[i]));
  }
  if (worst_rho >= 1.0 - kSlack) {
    v.outcome = StabilityOutcome::Unstable;
    v.bounds.lower = worst_rho;
    v.bounds.upper = worst_norm;
    v.bounds.epsilon = epsilon;
    v.bounds.explored_depth = 1;
    v.bounds.witness = {set.labels[worst]};
    return v;
  }
  v.bounds = jsr_bounds(set, epsilon, budget);
  if (v.bounds.upper < 1.0)
    v.outcome = StabilityOutcome::Stable;
  else if (v.bounds.lower >= 1.0 - kSlack)
    v.outcome = StabilityOutcome::Unstable;
  else
    v.outcome = StabilityOutcome::Undetermined;
  return v;
}

inline StabilityVerdict is_stable(const MatrixSet<Rational>& set, double epsilon = 1e-2,
                                  const JsrBudget& budget = {}) {
  return is_stable(to_double(set), epsilon, budget);
}

// Unique real root of r^3 + r^2 - 1 = 0: the floor on the decay rate any
// linear memoryless controller can achieve in the two-delay rotation setting.
inline double linear_rate_floor() {
  double lo = 0.5, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double f = mid * mid * mid + mid * mid - 1.0;
    if (f < 0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace sdtk
