// Copyright 2026 The bqec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Truncated Fock-space linear algebra: spaces, states, operators, matrix
// exponentials, partial traces, fidelities and Wigner functions.
//
// Conventions used throughout the library:
//   * qubit index 0 = |g>, index 1 = |e>; sigma_z|g> = +|g>, sigma_z|e> = -|e>
//   * composite ordering is qubit (x) cavity, i.e. index = q * n_fock + n
//   * all matrices are dense

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bqec/errors.hpp"

namespace bqec {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Ordered list of subsystem dimensions. Two factors at most are used by the
/// library (qubit, cavity), but the descriptor itself is general.
class Space {
 public:
  Space() = default;

  explicit Space(std::vector<int> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw InvalidDimension("space needs at least one factor");
    dim_ = 1;
    for (int f : factors_) {
      if (f < 1) throw InvalidDimension("space factor must be >= 1");
      dim_ *= f;
    }
  }

  static Space single(int dim) { return Space({dim}); }
  static Space qubit_cavity(int n_fock) { return Space({2, n_fock}); }

  const std::vector<int>& factors() const { return factors_; }
  int factor(int i) const { return factors_.at(static_cast<std::size_t>(i)); }
  int n_factors() const { return static_cast<int>(factors_.size()); }
  int dim() const { return dim_; }

  bool is_qubit_cavity() const { return factors_.size() == 2 && factors_[0] == 2; }
  int n_fock() const {
    if (!is_qubit_cavity()) throw InvalidDimension("space is not qubit (x) cavity");
    return factors_[1];
  }

  bool operator==(const Space&) const = default;

 private:
  std::vector<int> factors_;
  int dim_ = 0;
};

struct StateVector {
  Space space;
  Vector amplitudes;

  StateVector() = default;
  StateVector(Space s, Vector amp) : space(std::move(s)), amplitudes(std::move(amp)) {
    if (amplitudes.size() != space.dim()) throw InvalidDimension("state length does not match space");
  }

  static StateVector basis(const Space& s, int index) {
    if (index < 0 || index >= s.dim()) throw InvalidDimension("basis index out of range");
    Vector v = Vector::Zero(s.dim());
    v(index) = 1.0;
    return {s, std::move(v)};
  }

  double norm() const { return amplitudes.norm(); }

  StateVector normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw NumericError("cannot normalize a zero state");
    return {space, amplitudes / n};
  }
};

struct DensityMatrix {
  Space space;
  Matrix matrix;

  DensityMatrix() = default;
  DensityMatrix(Space s, Matrix m) : space(std::move(s)), matrix(std::move(m)) {
    if (matrix.rows() != space.dim() || matrix.cols() != space.dim()) {
      throw InvalidDimension("density matrix shape does not match space");
    }
  }

  static DensityMatrix from_pure(const StateVector& psi) {
    return {psi.space, psi.amplitudes * psi.amplitudes.adjoint()};
  }

  double trace() const { return matrix.trace().real(); }

  double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (matrix + matrix.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
};

struct LinearOperator {
  Space space;
  Matrix matrix;
  std::string label;

  LinearOperator() = default;
  LinearOperator(Space s, Matrix m, std::string l = {})
      : space(std::move(s)), matrix(std::move(m)), label(std::move(l)) {
    if (matrix.rows() != space.dim() || matrix.cols() != space.dim()) {
      throw InvalidDimension("operator shape does not match space");
    }
  }

  StateVector apply(const StateVector& psi) const {
    if (!(psi.space == space)) throw InvalidDimension("operator/state space mismatch");
    return {space, matrix * psi.amplitudes};
  }

  LinearOperator adjoint() const { return {space, matrix.adjoint(), label + "^dag"}; }
};

// ---------------------------------------------------------------------------
// Elementary operators

inline LinearOperator annihilation(int dim) {
  if (dim < 2) throw InvalidDimension("annihilation operator needs dim >= 2");
  Matrix m = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
  return {Space::single(dim), std::move(m), "a"};
}

inline LinearOperator creation(int dim) {
  auto a = annihilation(dim);
  return {a.space, a.matrix.adjoint(), "a^dag"};
}

inline LinearOperator number_operator(int dim) {
  Matrix m = Matrix::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) m(n, n) = static_cast<double>(n);
  return {Space::single(dim), std::move(m), "n"};
}

inline LinearOperator identity(const Space& s) { return {s, Matrix::Identity(s.dim(), s.dim()), "I"}; }

namespace qubit {

inline Matrix sx() { Matrix m(2, 2); m << 0, 1, 1, 0; return m; }
inline Matrix sy() { Matrix m(2, 2); m << 0, -kI, kI, 0; return m; }
inline Matrix sz() { Matrix m(2, 2); m << 1, 0, 0, -1; return m; }
/// |g><e|
inline Matrix lower() { Matrix m = Matrix::Zero(2, 2); m(0, 1) = 1.0; return m; }
/// |e><g|
inline Matrix raise() { Matrix m = Matrix::Zero(2, 2); m(1, 0) = 1.0; return m; }
/// |e><e|
inline Matrix proj_e() { Matrix m = Matrix::Zero(2, 2); m(1, 1) = 1.0; return m; }
inline Matrix proj_g() { Matrix m = Matrix::Zero(2, 2); m(0, 0) = 1.0; return m; }

}  // namespace qubit

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline LinearOperator tensor(const LinearOperator& a, const LinearOperator& b) {
  std::vector<int> f = a.space.factors();
  f.insert(f.end(), b.space.factors().begin(), b.space.factors().end());
  std::string label = a.label.empty() || b.label.empty() ? std::string{} : a.label + "(x)" + b.label;
  return {Space(std::move(f)), kron(a.matrix, b.matrix), std::move(label)};
}

/// Qubit operator lifted to qubit (x) cavity.
inline Matrix on_qubit(const Matrix& q, int n_fock) { return kron(q, Matrix::Identity(n_fock, n_fock)); }
/// Cavity operator lifted to qubit (x) cavity.
inline Matrix on_cavity(const Matrix& c) { return kron(Matrix::Identity(2, 2), c); }

inline Vector fock_vector(int dim, int n) {
  if (n < 0 || n >= dim) throw InvalidDimension("Fock index out of range");
  Vector v = Vector::Zero(dim);
  v(n) = 1.0;
  return v;
}

/// Truncated coherent state, renormalized after truncation.
inline Vector coherent_vector(int dim, cplx alpha) {
  Vector v(dim);
  cplx c = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n < dim; ++n) {
    v(n) = c;
    c *= alpha / std::sqrt(static_cast<double>(n + 1));
  }
  return v / v.norm();
}

/// |q> (x) |cavity>
inline StateVector product_state(const Vector& q, const Vector& cav) {
  Vector v(q.size() * cav.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) v.segment(i * cav.size(), cav.size()) = q(i) * cav;
  return {Space({static_cast<int>(q.size()), static_cast<int>(cav.size())}), std::move(v)};
}

inline Vector ground_qubit() { Vector v(2); v << 1.0, 0.0; return v; }
inline Vector excited_qubit() { Vector v(2); v << 0.0, 1.0; return v; }

// ---------------------------------------------------------------------------
// Matrix exponential

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// exp(m) by Pade scaling-and-squaring.
inline Matrix expm(const Matrix& m) {
  if (!m.allFinite()) throw NumericError("matrix exponential of non-finite matrix");
  Matrix out = m.exp();
  if (!out.allFinite()) throw NumericError("matrix exponential overflowed");
  return out;
}

inline LinearOperator matrix_exponential(const LinearOperator& h, cplx scale) {
  if (!std::isfinite(scale.real()) || !std::isfinite(scale.imag())) {
    throw NumericError("non-finite exponential scale");
  }
  return {h.space, expm(scale * h.matrix), "exp(" + h.label + ")"};
}

/// exp(-i h t) for Hermitian h, through the eigendecomposition.
inline Matrix unitary_propagator(const Matrix& h, double t) {
  if (!h.allFinite() || !std::isfinite(t)) throw NumericError("non-finite Hamiltonian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  const Eigen::VectorXd& w = es.eigenvalues();
  Vector ph(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) ph(k) = std::exp(-kI * (w(k) * t));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// ---------------------------------------------------------------------------
// Reductions and figures of merit

inline DensityMatrix partial_trace(const DensityMatrix& rho, int keep) {
  if (rho.space.n_factors() != 2) throw InvalidDimension("partial_trace expects a two-factor space");
  if (keep != 0 && keep != 1) throw std::invalid_argument("partial_trace: keep must be 0 or 1");
  const int d0 = rho.space.factor(0);
  const int d1 = rho.space.factor(1);
  if (keep == 0) {
    Matrix out = Matrix::Zero(d0, d0);
    for (int i = 0; i < d0; ++i)
      for (int j = 0; j < d0; ++j)
        for (int k = 0; k < d1; ++k) out(i, j) += rho.matrix(i * d1 + k, j * d1 + k);
    return {Space::single(d0), std::move(out)};
  }
  Matrix out = Matrix::Zero(d1, d1);
  for (int k = 0; k < d0; ++k) out += rho.matrix.block(k * d1, k * d1, d1, d1);
  return {Space::single(d1), std::move(out)};
}

inline Matrix hermitian_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

inline double state_fidelity(const StateVector& a, const StateVector& b) {
  if (!(a.space == b.space)) throw InvalidDimension("fidelity: space mismatch");
  return std::norm(a.amplitudes.dot(b.amplitudes));
}

inline double state_fidelity(const StateVector& a, const DensityMatrix& b) {
  if (!(a.space == b.space)) throw InvalidDimension("fidelity: space mismatch");
  return (a.amplitudes.adjoint() * b.matrix * a.amplitudes)(0, 0).real();
}

/// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2.
inline double state_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.space == b.space)) throw InvalidDimension("fidelity: space mismatch");
  const Matrix sa = hermitian_sqrt(a.matrix);
  const Matrix m = sa * b.matrix * sa;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  const double s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::min(1.0, s * s);
}

inline double trace_distance(const Matrix& a, const Matrix& b) {
  const Matrix d = a - b;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline cplx expectation(const Matrix& op, const DensityMatrix& rho) { return (op * rho.matrix).trace(); }

// ---------------------------------------------------------------------------
// Wigner function

namespace detail {

/// Generalized Laguerre polynomial L_n^{(k)}(x) by upward recurrence.
inline double laguerre(int n, int k, double x) {
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 + k - x;
  for (int j = 1; j < n; ++j) {
    const double next = ((2.0 * j + 1.0 + k - x) * cur - (j + k) * prev) / (j + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace detail

/// Population in the two highest Fock levels of a single-mode state.
inline double truncation_tail(const DensityMatrix& rho) {
  const int d = rho.space.dim();
  double tail = 0.0;
  for (int n = std::max(0, d - 2); n < d; ++n) tail += rho.matrix(n, n).real();
  return tail;
}

inline constexpr double kTruncationTailThreshold = 1e-6;

/// W(alpha) = (2/pi) tr[D(alpha) rho D(alpha)^dag P] via the Laguerre expansion
/// of displaced parity, evaluated exactly for the truncated rho.
inline std::vector<double> wigner(const DensityMatrix& rho, std::span<const cplx> points,
                                  Warnings* sink = nullptr) {
  if (rho.space.n_factors() != 1) throw InvalidDimension("wigner expects a single-mode density matrix");
  const int d = rho.space.dim();
  if (truncation_tail(rho) > kTruncationTailThreshold) {
    warn(sink, "wigner: population in top two Fock levels exceeds 1e-6; truncation may distort W");
  }
  // sqrt(m!/n!) for n >= m
  Eigen::MatrixXd fact_ratio = Eigen::MatrixXd::Zero(d, d);
  for (int m = 0; m < d; ++m) {
    double r = 1.0;
    fact_ratio(m, m) = 1.0;
    for (int n = m + 1; n < d; ++n) {
      r /= std::sqrt(static_cast<double>(n));
      fact_ratio(m, n) = r;
    }
  }
  std::vector<double> out;
  out.reserve(points.size());
  for (cplx alpha : points) {
    const double x = 4.0 * std::norm(alpha);
    double acc = 0.0;
    for (int m = 0; m < d; ++m) {
      const double sign = (m % 2 == 0) ? 1.0 : -1.0;
      acc += sign * rho.matrix(m, m).real() * detail::laguerre(m, 0, x);
      cplx pw = 1.0;
      for (int n = m + 1; n < d; ++n) {
        pw *= 2.0 * alpha;
        const cplx rmn = rho.matrix(m, n);
        if (rmn == cplx{0.0, 0.0}) continue;
        acc += 2.0 * sign * (rmn * pw).real() * fact_ratio(m, n) * detail::laguerre(m, n - m, x);
      }
    }
    out.push_back(2.0 / kPi * std::exp(-0.5 * x) * acc);
  }
  return out;
}

/// Wigner function on a rectangular grid; rows follow im_axis, columns re_axis.
inline Eigen::MatrixXd wigner_grid(const DensityMatrix& rho, std::span<const double> re_axis,
                                   std::span<const double> im_axis, Warnings* sink = nullptr) {
  std::vector<cplx> pts;
  pts.reserve(re_axis.size() * im_axis.size());
  for (double y : im_axis)
    for (double x : re_axis) pts.emplace_back(x, y);
  const auto w = wigner(rho, pts, sink);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(im_axis.size()), static_cast<Eigen::Index>(re_axis.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = w[k++];
  return out;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(std::max(n, 0)));
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace bqec
