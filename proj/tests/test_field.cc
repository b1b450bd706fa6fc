#include <doctest.h>

#include <complex>

#include "tsb/field.hpp"
#include "tsb/lattice.hpp"

using namespace tsb;

TEST_SUITE_BEGIN("field");

TEST_CASE("honeycomb potential carries six first-shell coefficients") {
  const Lattice lat = build_lattice(5.0);
  const double amp = 10.0;
  const FourierField v = honeycomb_potential(lat, amp, 1);
  const double expect = amp * lat.sqrt_area;
  const std::vector<Mode> sup = v.support();
  REQUIRE(sup.size() == 6);
  for (const Mode& m : sup) {
    CHECK(std::abs(v.at(m) - cplx(expect, 0.0)) < 1e-10);
  }
  CHECK(std::abs(v.at(Mode{0, 0})) == 0.0);  // zero mean
  // the six modes are the first dual shell, in opposite pairs
  const double r = lat.dual(sup[0]).norm();
  for (const Mode& m : sup) {
    CHECK(lat.dual(m).norm() == doctest::Approx(r).epsilon(1e-12));
    CHECK(std::abs(v.at(-m) - std::conj(v.at(m))) < 1e-12);
  }
}

TEST_CASE("honeycomb potential passes all symmetry checks") {
  const Lattice lat = build_lattice(5.0);
  const FourierField v = honeycomb_potential(lat, 3.0, 1);
  const SymmetryReport rep = check_field_symmetry(v);
  CHECK(rep.even);
  CHECK(rep.rotation);
  CHECK(rep.mirror);
  CHECK(rep.all());
}

TEST_CASE("second potential peaks at the origin and breaks rotation symmetry") {
  const Lattice lat = build_lattice(5.0);
  const double lam = 1.0;
  const FourierField g = ng_potential(lat, lam, 2);
  // peak value at x = 0 is the coefficient sum
  CHECK(std::abs(g.value(Vector2d::Zero()) - cplx(6.0 * lam, 0.0)) < 1e-10);
  const SymmetryReport rep = check_field_symmetry(g);
  CHECK(rep.even);
  CHECK_FALSE(rep.rotation);
  // real valued: conjugate-even coefficients
  for (const Mode& m : g.support()) {
    CHECK(std::abs(g.at(-m) - std::conj(g.at(m))) < 1e-12);
  }
  CHECK_THROWS_AS(ng_potential(lat, lam, 1), InvalidParameter);
}

TEST_CASE("real-space evaluation is periodic over the lattice cell") {
  const Lattice lat = build_lattice(5.0);
  const FourierField g = ng_potential(lat, 0.8, 2);
  for (const Vector2d x : {Vector2d(0.3, -1.2), Vector2d(2.0, 0.7)}) {
    const cplx base = g.value(x);
    CHECK(std::abs(g.value(x + lat.a1) - base) < 1e-12);
    CHECK(std::abs(g.value(x + lat.a2) - base) < 1e-12);
    // real field evaluates real
    CHECK(std::abs(base.imag()) < 1e-12);
  }
}

TEST_CASE("coefficient products match a real-space quadrature oracle") {
  const Lattice lat = build_lattice(5.0);
  const FourierField a = honeycomb_potential(lat, 2.0, 1);
  const FourierField b = ng_potential(lat, 0.7, 2);
  const FourierField p = multiply(a, b);
  CHECK(p.cutoff() == 3);

  // quadrature over one unit cell on a 64x64 grid; the grid integrates
  // trigonometric polynomials of this degree exactly
  const int n = 64;
  for (const Mode probe : {Mode{0, 0}, Mode{1, 0}, Mode{-1, 2}, Mode{2, 1}}) {
    cplx acc = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Vector2d x = (double(i) / n) * lat.a1 + (double(j) / n) * lat.a2;
        const Vector2d bp = lat.dual(probe);
        acc += a.value(x) * b.value(x) * std::exp(cplx(0.0, -bp.dot(x)));
      }
    }
    acc /= double(n) * double(n);
    CHECK(std::abs(p.at(probe) - acc) < 1e-10);
  }
}

TEST_CASE("strict product truncation rejects an insufficient cutoff") {
  const Lattice lat = build_lattice(5.0);
  const FourierField a = honeycomb_potential(lat, 1.0, 1);
  CHECK_THROWS_AS(multiply(a, a, 1), ResolutionError);
  CHECK_NOTHROW(multiply(a, a, 2));
  // a sufficient explicit cutoff matches the exact product
  const FourierField exact = multiply(a, a);
  const FourierField trunc = multiply(a, a, 2);
  for (const Mode& m : exact.support()) {
    CHECK(std::abs(exact.at(m) - trunc.at(m)) < 1e-12);
  }
}

TEST_CASE("out-of-box coefficient lookups return zero") {
  const Lattice lat = build_lattice(5.0);
  const FourierField a = honeycomb_potential(lat, 1.0, 1);
  CHECK(a.at(Mode{5, 5}) == cplx(0.0, 0.0));
  CHECK(a.cutoff() == 1);
  const FourierField g = ng_potential(lat, 1.0, 2);
  CHECK(g.cutoff() == 2);
  const FourierField zero(lat, 0);
  CHECK(zero.cutoff() == 0);
  CHECK(zero.support().empty());
}

TEST_SUITE_END();
