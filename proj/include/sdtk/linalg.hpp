#pragma once

#include <sdtk/rational.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdtk {

template <class S> using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S> using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
using Matd = MatX<double>;
using Vecd = VecX<double>;
using MatR = MatX<Rational>;
using VecR = VecX<Rational>;

inline Matd to_double(const MatR& A) {
  Matd out(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) out(i, j) = A(i, j).to_double();
  return out;
}
inline const Matd& to_double(const Matd& A) { return A; }

template <class S>
MatX<S> mat_pow(MatX<S> base, long long e) {
  if (base.rows() != base.cols()) throw std::invalid_argument("mat_pow needs a square matrix");
  if (e < 0) throw std::invalid_argument("mat_pow needs a nonnegative exponent");
  MatX<S> out = MatX<S>::Identity(base.rows(), base.cols());
  while (e > 0) {
    if (e & 1) out = out * base;
    base = base * base;
    e >>= 1;
  }
  return out;
}

// Reduced row echelon form over an exact scalar. Returns rank; optionally
// reports pivot columns in order.
inline Eigen::Index rref_inplace(MatR& M, std::vector<Eigen::Index>* pivots = nullptr) {
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < M.cols() && r < M.rows(); ++c) {
    Eigen::Index p = -1;
    for (Eigen::Index i = r; i < M.rows(); ++i)
      if (!M(i, c).is_zero()) { p = i; break; }
    if (p < 0) continue;
    if (p != r) M.row(p).swap(M.row(r));
    Rational inv = Rational(1) / M(r, c);
    for (Eigen::Index j = c; j < M.cols(); ++j) M(r, j) *= inv;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      if (i == r || M(i, c).is_zero()) continue;
      Rational f = M(i, c);
      for (Eigen::Index j = c; j < M.cols(); ++j) M(i, j) -= f * M(r, j);
    }
    if (pivots) pivots->push_back(c);
    ++r;
  }
  return r;
}

inline Eigen::Index rank_exact(MatR M) { return rref_inplace(M); }

// Columns span ker(M).
inline MatR nullspace_exact(const MatR& M) {
  MatR R = M;
  std::vector<Eigen::Index> piv;
  Eigen::Index r = rref_inplace(R, &piv);
  std::vector<bool> is_piv(M.cols(), false);
  for (auto c : piv) is_piv[c] = true;
  MatR out(M.cols(), M.cols() - r);
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    if (is_piv[c]) continue;
    VecR v = VecR::Zero(M.cols());
    v(c) = Rational(1);
    for (Eigen::Index i = 0; i < r; ++i) v(piv[i]) = -R(i, c);
    out.col(k++) = v;
  }
  return out;
}

// Pivot columns of M: a basis of the column space.
inline MatR column_space_exact(const MatR& M) {
  MatR R = M;
  std::vector<Eigen::Index> piv;
  rref_inplace(R, &piv);
  MatR out(M.rows(), static_cast<Eigen::Index>(piv.size()));
  for (std::size_t j = 0; j < piv.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = M.col(piv[j]);
  return out;
}

// Particular solution of A x = b with free variables set to zero.
inline std::optional<VecR> solve_exact(const MatR& A, const VecR& b) {
  if (A.rows() != b.size()) throw std::invalid_argument("solve_exact: shape mismatch");
  MatR aug(A.rows(), A.cols() + 1);
  aug.leftCols(A.cols()) = A;
  aug.col(A.cols()) = b;
  std::vector<Eigen::Index> piv;
  Eigen::Index r = rref_inplace(aug, &piv);
  if (!piv.empty() && piv.back() == A.cols()) return std::nullopt;  // inconsistent
  VecR x = VecR::Zero(A.cols());
  for (Eigen::Index i = 0; i < r; ++i) x(piv[i]) = aug(i, A.cols());
  return x;
}

inline MatR inverse_exact(const MatR& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("inverse_exact needs a square matrix");
  MatR aug(A.rows(), 2 * A.cols());
  aug.leftCols(A.cols()) = A;
  aug.rightCols(A.cols()) = MatR::Identity(A.rows(), A.cols());
  std::vector<Eigen::Index> piv;
  rref_inplace(aug, &piv);
  if (static_cast<Eigen::Index>(piv.size()) < A.cols() || piv[A.cols() - 1] >= A.cols())
    throw std::invalid_argument("inverse_exact: singular matrix");
  return aug.rightCols(A.cols());
}

// Singular-value rank. `rel_tol` is relative to the largest singular value;
// negative means the usual max(m,n)*eps default.
inline Eigen::Index rank_svd(const Matd& A, double rel_tol = -1.0) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::JacobiSVD<Matd> svd(A);
  const auto& sv = svd.singularValues();
  double smax = sv(0);
  if (smax == 0.0) return 0;
  if (rel_tol < 0)
    rel_tol = static_cast<double>(std::max(A.rows(), A.cols())) * std::numeric_limits<double>::epsilon();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * smax) ++r;
  return r;
}

inline Vecd singular_values(const Matd& A) {
  if (A.rows() == 0 || A.cols() == 0) return Vecd::Zero(0);
  return Eigen::JacobiSVD<Matd>(A).singularValues();
}

inline double op_norm2(const Matd& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  return Eigen::JacobiSVD<Matd>(A).singularValues()(0);
}

inline double spectral_radius(const Matd& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matd> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double cond2(const Matd& A) {
  Vecd sv = singular_values(A);
  if (sv.size() == 0 || sv(sv.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

// Span of a growing set of vectors over exact arithmetic. Rows are kept in
// reduced echelon form, so equal subspaces serialize to equal keys.
class ExactSubspace {
public:
  explicit ExactSubspace(Eigen::Index ambient) : n_(ambient) {
    if (ambient <= 0) throw std::invalid_argument("subspace needs a positive ambient dimension");
  }

  Eigen::Index ambient() const { return n_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(rows_.size()); }

  bool contains(const VecR& v) const { return leading(reduce(v)) < 0; }

  // Returns true if the vector enlarged the span.
  bool add(const VecR& v) {
    VecR r = reduce(v);
    Eigen::Index lead = leading(r);
    if (lead < 0) return false;
    r *= Rational(1) / r(lead);
    for (auto& row : rows_) {
      if (row.second(lead).is_zero()) continue;
      row.second -= row.second(lead) * r;
    }
    auto it = std::upper_bound(rows_.begin(), rows_.end(), lead,
                               [](Eigen::Index c, const auto& row) { return c < row.first; });
    rows_.insert(it, {lead, r});
    return true;
  }

  std::string key() const {
    std::ostringstream os;
    os << n_ << ';';
    for (const auto& row : rows_) {
      os << row.first << ':';
      for (Eigen::Index j = 0; j < n_; ++j) os << to_string(row.second(j)) << ',';
      os << ';';
    }
    return os.str();
  }

  MatR basis() const {
    MatR out(n_, dim());
    for (Eigen::Index j = 0; j < dim(); ++j) out.col(j) = rows_[j].second;
    return out;
  }

private:
  Eigen::Index leading(const VecR& v) const {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!v(i).is_zero()) return i;
    return -1;
  }

  VecR reduce(VecR v) const {
    if (v.size() != n_) throw std::invalid_argument("subspace vector has wrong dimension");
    for (const auto& row : rows_) {
      if (v(row.first).is_zero()) continue;
      v -= v(row.first) * row.second;
    }
    return v;
  }

  Eigen::Index n_;
  std::vector<std::pair<Eigen::Index, VecR>> rows_;  // (pivot, reduced row)
};

// Floating-point analogue keeping an orthonormal basis. Membership is a
// residual test; keys come from the rounded orthogonal projector, which is
// basis-independent.
class FloatSubspace {
public:
  explicit FloatSubspace(Eigen::Index ambient, double tol = 1e-9) : q_(ambient, 0), tol_(tol) {
    if (ambient <= 0) throw std::invalid_argument("subspace needs a positive ambient dimension");
  }

  Eigen::Index ambient() const { return q_.rows(); }
  Eigen::Index dim() const { return q_.cols(); }

  bool contains(const Vecd& v) const {
    return residual(v).norm() <= tol_ * std::max(1.0, v.norm());
  }

  bool add(const Vecd& v) {
    Vecd r = residual(v);
    if (r.norm() <= tol_ * std::max(1.0, v.norm())) return false;
    r = residual(r);  // second pass for orthogonality
    q_.conservativeResize(Eigen::NoChange, q_.cols() + 1);
    q_.col(q_.cols() - 1) = r / r.norm();
    return true;
  }

  std::string key(double grid = 1e-6) const {
    Matd P = q_ * q_.transpose();
    std::ostringstream os;
    os << q_.rows() << ';' << q_.cols() << ';';
    for (Eigen::Index i = 0; i < P.rows(); ++i)
      for (Eigen::Index j = i; j < P.cols(); ++j)
        os << std::llround(P(i, j) / grid) << ',';
    return os.str();
  }

  const Matd& basis() const { return q_; }

private:
  Vecd residual(const Vecd& v) const {
    if (v.size() != q_.rows()) throw std::invalid_argument("subspace vector has wrong dimension");
    if (q_.cols() == 0) return v;
    return v - q_ * (q_.transpose() * v);
  }

  Matd q_;
  double tol_;
};

template <class S> struct subspace_for;
template <> struct subspace_for<Rational> { using type = ExactSubspace; };
template <> struct subspace_for<double> { using type = FloatSubspace; };

}  // namespace sdtk
