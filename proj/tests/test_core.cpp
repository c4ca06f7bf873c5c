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

#include <catch_amalgamated.hpp>

#include <random>

#include "bqec/core.hpp"

using namespace bqec;
using Catch::Approx;

namespace {

Matrix random_hermitian(int d, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = cplx(n(g), n(g));
  return 0.5 * (m + m.adjoint());
}

DensityMatrix random_density(const Space& s, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Matrix a(s.dim(), s.dim());
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j < s.dim(); ++j) a(i, j) = cplx(n(g), n(g));
  Matrix r = a * a.adjoint();
  r /= r.trace().real();
  return {s, r};
}

}  // namespace

TEST_CASE("space descriptor") {
  Space s({2, 12});
  CHECK(s.dim() == 24);
  CHECK(s.n_fock() == 12);
  CHECK_THROWS_AS(Space({2, 0}), InvalidDimension);
  CHECK_THROWS_AS(Space(std::vector<int>{}), InvalidDimension);
}

TEST_CASE("annihilation operator ladder action") {
  const auto a = annihilation(5);
  const Vector r = a.matrix * fock_vector(5, 2);
  CHECK((r - std::sqrt(2.0) * fock_vector(5, 1)).norm() < 1e-15);
  CHECK((a.matrix * fock_vector(5, 0)).norm() == 0.0);
  const Matrix n = a.matrix.adjoint() * a.matrix;
  CHECK((n * fock_vector(5, 3) - 3.0 * fock_vector(5, 3)).norm() < 1e-14);
  CHECK_THROWS_AS(annihilation(1), InvalidDimension);
}

TEST_CASE("ladder commutator away from truncation corner") {
  const int d = 12;
  const Matrix a = annihilation(d).matrix;
  const Matrix c = a * a.adjoint() - a.adjoint() * a;
  CHECK((c.topLeftCorner(d - 1, d - 1) - Matrix::Identity(d - 1, d - 1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tensor products") {
  const LinearOperator i2 = identity(Space::single(2));
  const LinearOperator i3 = identity(Space::single(3));
  const auto t = tensor(i2, i3);
  CHECK(t.space.dim() == 6);
  CHECK((t.matrix - Matrix::Identity(6, 6)).norm() == 0.0);

  const LinearOperator sz(Space::single(2), qubit::sz(), "sz");
  const auto zn = tensor(sz, number_operator(4));
  const StateVector e2 = product_state(excited_qubit(), fock_vector(4, 2));
  const Vector r = zn.matrix * e2.amplitudes;
  CHECK((r + 2.0 * e2.amplitudes).norm() < 1e-15);

  const LinearOperator m2(Space::single(2), Matrix::Random(2, 2));
  const LinearOperator m4(Space::single(4), Matrix::Random(4, 4));
  CHECK(tensor(m2, m4).matrix.rows() == 8);

  // associativity up to reshaping
  const LinearOperator m3(Space::single(3), Matrix::Random(3, 3));
  const auto left = tensor(tensor(m2, m3), m4);
  const auto right = tensor(m2, tensor(m3, m4));
  CHECK((left.matrix - right.matrix).norm() < 1e-12);
}

TEST_CASE("matrix exponential") {
  const Space q = Space::single(2);
  const auto e0 = matrix_exponential(LinearOperator(q, Matrix::Zero(2, 2)), 1.0);
  CHECK((e0.matrix - Matrix::Identity(2, 2)).norm() < 1e-15);

  const auto ex = matrix_exponential(LinearOperator(q, qubit::sx()), -kI * kPi / 2.0);
  CHECK((ex.matrix - (-kI) * qubit::sx()).norm() < 1e-12);

  const double chi = kTwoPi * 2.59e6, t = 1.7e-6;
  Matrix d = Matrix::Zero(2, 2);
  d(1, 1) = chi;
  const auto u = matrix_exponential(LinearOperator(q, d), -kI * t);
  CHECK(std::abs(u.matrix(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(u.matrix(1, 1) - std::exp(-kI * chi * t)) < 1e-12);

  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(matrix_exponential(LinearOperator(q, bad), 1.0), NumericError);
}

TEST_CASE("matrix exponential inverse property") {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix h = random_hermitian(10, g);
    const LinearOperator op(Space::single(10), h);
    const auto f = matrix_exponential(op, -kI * 3.0);
    const auto b = matrix_exponential(op, kI * 3.0);
    CHECK((f.matrix * b.matrix - Matrix::Identity(10, 10)).norm() < 1e-9);
    CHECK((f.matrix - unitary_propagator(h, 3.0)).norm() < 1e-10);
  }
}

TEST_CASE("partial trace") {
  std::mt19937_64 g(3);
  const DensityMatrix rq = random_density(Space::single(2), g);
  const DensityMatrix rc = random_density(Space::single(5), g);
  const DensityMatrix joint(Space({2, 5}), kron(rq.matrix, rc.matrix));
  CHECK((partial_trace(joint, 1).matrix - rc.matrix).norm() < 1e-12);
  CHECK((partial_trace(joint, 0).matrix - rq.matrix).norm() < 1e-12);

  Vector bell = Vector::Zero(24);
  bell(0) = bell(12 + 1) = 1.0 / std::sqrt(2.0);
  const auto rb = DensityMatrix::from_pure(StateVector(Space::qubit_cavity(12), bell));
  CHECK((partial_trace(rb, 0).matrix - 0.5 * Matrix::Identity(2, 2)).norm() < 1e-12);

  const DensityMatrix r = random_density(Space({2, 6}), g);
  CHECK(partial_trace(r, 1).trace() == Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(partial_trace(r, 2), std::invalid_argument);
}

TEST_CASE("state fidelity") {
  const Space s = Space::single(4);
  const StateVector a(s, fock_vector(4, 1));
  const StateVector b(s, fock_vector(4, 2));
  CHECK(state_fidelity(a, a) == Approx(1.0));
  CHECK(state_fidelity(a, b) == 0.0);

  const auto r0 = DensityMatrix::from_pure(StateVector(Space::single(2), ground_qubit()));
  const DensityMatrix mixed(Space::single(2), 0.5 * Matrix::Identity(2, 2));
  CHECK(state_fidelity(r0, mixed) == Approx(0.5).margin(1e-12));
  CHECK(state_fidelity(r0, r0) == Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(state_fidelity(a, StateVector(Space::single(3), fock_vector(3, 0))), InvalidDimension);
}

TEST_CASE("wigner function values") {
  const Space s = Space::single(12);
  const std::vector<cplx> origin{cplx(0.0, 0.0)};
  const auto vac = DensityMatrix::from_pure(StateVector(s, fock_vector(12, 0)));
  CHECK(wigner(vac, origin)[0] == Approx(2.0 / kPi).epsilon(1e-12));
  const auto one = DensityMatrix::from_pure(StateVector(s, fock_vector(12, 1)));
  CHECK(wigner(one, origin)[0] == Approx(-2.0 / kPi).epsilon(1e-12));
}

TEST_CASE("wigner of coherent state matches displaced gaussian") {
  const int d = 30;
  const cplx beta(0.7, -0.4);
  const auto rho = DensityMatrix::from_pure(StateVector(Space::single(d), coherent_vector(d, beta)));
  std::vector<cplx> pts{{0.0, 0.0}, {0.7, -0.4}, {1.1, 0.3}, {-0.5, -0.9}};
  const auto w = wigner(rho, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double ref = 2.0 / kPi * std::exp(-2.0 * std::norm(pts[i] - beta));
    CHECK(w[i] == Approx(ref).margin(1e-10));
  }
}

TEST_CASE("wigner normalization by quadrature") {
  const auto vac = DensityMatrix::from_pure(StateVector(Space::single(12), fock_vector(12, 0)));
  const int n = 201;
  const auto axis = linspace(-5.0, 5.0, n);
  const double h = axis[1] - axis[0];
  const Eigen::MatrixXd w = wigner_grid(vac, axis, axis);
  double integral = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (axis[r] * axis[r] + axis[c] * axis[c] <= 25.0) integral += w(r, c) * h * h;
  CHECK(integral == Approx(1.0).margin(1e-3));
}

TEST_CASE("wigner bounds for random states and truncation warning") {
  std::mt19937_64 g(11);
  const auto rho = random_density(Space::single(8), g);
  const auto axis = linspace(-2.0, 2.0, 9);
  Warnings sink;
  const Eigen::MatrixXd w = wigner_grid(rho, axis, axis, &sink);
  CHECK(w.cwiseAbs().maxCoeff() <= 2.0 / kPi + 1e-9);
  CHECK_FALSE(sink.empty());  // random state fills the top levels

  Warnings quiet;
  const auto vac = DensityMatrix::from_pure(StateVector(Space::single(12), fock_vector(12, 0)));
  wigner_grid(vac, axis, axis, &quiet);
  CHECK(quiet.empty());
}
