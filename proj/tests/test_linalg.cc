#include <doctest.h>

#include <random>

#include "tsb/linalg.hpp"

using namespace tsb;

namespace {

MatrixXcd random_hermitian(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

}  // namespace

TEST_SUITE_BEGIN("linalg");

TEST_CASE("real symmetric 2x2 with known spectrum") {
  MatrixXd a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  const EighReal r = eigh(a);
  CHECK(r.values[0] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(r.values[1] == doctest::Approx(3.0).epsilon(1e-13));
  CHECK((a * r.vectors - r.vectors * r.values.asDiagonal().toDenseMatrix())
            .norm() < 1e-12);
}

TEST_CASE("hermitian eigensolver satisfies residual and orthonormality") {
  const MatrixXcd a = random_hermitian(24, 7);
  const EighComplex r = eigh(a);
  REQUIRE(r.values.size() == 24);
  for (int i = 1; i < 24; ++i) CHECK(r.values[i] >= r.values[i - 1]);
  CHECK((a * r.vectors - r.vectors * r.values.asDiagonal().toDenseMatrix())
            .norm() < 1e-10);
  CHECK((r.vectors.adjoint() * r.vectors - MatrixXcd::Identity(24, 24)).norm() <
        1e-11);
}

TEST_CASE("eigh_auto matches the complex path on a real-valued input") {
  MatrixXcd a = random_hermitian(12, 3);
  a = (a + a.conjugate()).eval();      // strip imaginary part, keep hermitian
  const EighComplex full = eigh(a);
  const EighComplex fast = eigh_auto(a);
  CHECK((full.values - fast.values).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("windowed eigensolver returns the in-window subset") {
  const MatrixXcd a = random_hermitian(30, 11);
  const EighComplex full = eigh(a);
  const double lo = full.values[7] - 1e-9;
  const double hi = full.values[17] + 1e-9;
  const EighComplex sel = eigh_select(a, lo, hi);
  REQUIRE(sel.values.size() == 11);
  for (int i = 0; i < 11; ++i) {
    CHECK(sel.values[i] == doctest::Approx(full.values[7 + i]).epsilon(1e-11));
    CHECK((a * sel.vectors.col(i) - sel.values[i] * sel.vectors.col(i)).norm() <
          1e-10);
  }
  CHECK_THROWS_AS(eigh_select(a, 1.0, 1.0), InvalidParameter);
}

TEST_CASE("generalized solver honours a nontrivial metric") {
  const int n = 10;
  MatrixXcd a = random_hermitian(n, 21);
  MatrixXcd c = random_hermitian(n, 22);
  MatrixXcd b = c * c.adjoint() + MatrixXcd::Identity(n, n);  // positive definite
  EighComplex r;
  REQUIRE(eigh_gen(a, b, r) == GenEighStatus::ok);
  CHECK((a * r.vectors - b * r.vectors * r.values.asDiagonal().toDenseMatrix())
            .norm() < 1e-9);
  // b-orthonormal eigenvectors
  CHECK((r.vectors.adjoint() * b * r.vectors - MatrixXcd::Identity(n, n))
            .norm() < 1e-9);
  // a non positive definite metric is flagged, not silently accepted
  MatrixXcd bad = -MatrixXcd::Identity(n, n);
  EighComplex dummy;
  CHECK(eigh_gen(a, bad, dummy) == GenEighStatus::metric_not_pd);
}

TEST_CASE("principal angle between identical, rotated, and orthogonal spans") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXcd a(12, 3);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = cplx(g(rng), g(rng));
  // same span under an invertible column mix
  MatrixXcd mix(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) mix(i, j) = cplx(g(rng), g(rng));
  mix += 3.0 * MatrixXcd::Identity(3, 3);
  CHECK(max_principal_angle_sin(a, a * mix) < 1e-12);
  // orthogonal complement columns give angle pi/2
  MatrixXcd b = MatrixXcd::Zero(12, 3);
  // project a third random block away from span(a)
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 3; ++j) b(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<MatrixXcd> qr(a);
  MatrixXcd qa = qr.householderQ() * MatrixXcd::Identity(12, 3);
  b -= qa * (qa.adjoint() * b);
  CHECK(max_principal_angle_sin(a, b) == doctest::Approx(1.0).epsilon(1e-10));
  // mismatched column counts can never span the same space
  CHECK(max_principal_angle_sin(a, a.leftCols(2)) == doctest::Approx(1.0));
}

TEST_SUITE_END();
