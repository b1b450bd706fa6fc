#include <doctest.h>

#include "tsb/effective.hpp"

using namespace tsb;

namespace {

struct Setup {
  Lattice lat = build_lattice(5.0);
  FourierField v;
  DiracData d;
  ClosedFormConstants cc;
  Setup()
      : v(honeycomb_potential(lat, 10.0, 1)),
        d(detect_dirac(lat, v, 12)),
        cc(closed_form_constants(d)) {}
};

const Setup& setup() {
  static Setup s;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("effective");

TEST_CASE("frozen closed-form constants at the production cutoff") {
  const ClosedFormConstants& c = setup().cc;
  CHECK(c.t == doctest::Approx(0.0978159511129).epsilon(1e-8));
  CHECK(c.s == doctest::Approx(1.68807861703e-05).epsilon(1e-6));
  CHECK(c.r == doctest::Approx(-0.00163547011787).epsilon(1e-7));
  CHECK(c.tp == doctest::Approx(-0.499967760552).epsilon(1e-9));
  CHECK(c.sp == doctest::Approx(-3.33907329348e-05).epsilon(1e-6));
  CHECK(c.rp == doctest::Approx(0.00493549531392).epsilon(1e-7));
  CHECK(c.chi == doctest::Approx(3.534894935e-05).epsilon(1e-6));
  CHECK(c.gamma1 == doctest::Approx(-0.002293764271).epsilon(1e-7));
  CHECK(c.gamma2 == doctest::Approx(-0.001867059435).epsilon(1e-7));
  CHECK(c.vtilde_F == doctest::Approx(0.7606651494886054).epsilon(1e-9));
  CHECK(c.max_imag_residual <= 1e-8);
}

TEST_CASE("measured blocks match the closed forms for the directional family") {
  const Setup& s = setup();
  for (int j = 0; j < 8; ++j) {
    const double th = 2.0 * kPi * j / 8.0;
    const Vector2d dir(std::cos(th), std::sin(th));
    const ReducedFamily fam = build_family(FamilyKind::F1k, s.d, &dir);
    const EffectiveBlocks direct = compute_blocks(fam, s.d);
    const EffectiveBlocks pred = predicted_blocks(FamilyKind::F1k, s.cc, th);
    const ValidationReport rep = validate_structure(direct, pred);
    CAPTURE(th);
    CHECK(rep.max_dev() <= 1e-8);
  }
}

TEST_CASE("measured blocks match the closed forms for the full first-order family") {
  const Setup& s = setup();
  const ReducedFamily fam = build_family(FamilyKind::F1, s.d);
  const EffectiveBlocks direct = compute_blocks(fam, s.d);
  const EffectiveBlocks pred = predicted_blocks(FamilyKind::F1, s.cc);
  CHECK(validate_structure(direct, pred).max_dev() <= 1e-8);
}

TEST_CASE("measured blocks match the closed forms for the three-eigenvector family") {
  const Setup& s = setup();
  const ReducedFamily fam = build_family(FamilyKind::Fn, s.d, nullptr, 3);
  const EffectiveBlocks direct = compute_blocks(fam, s.d);
  const double gap = s.d.E[s.d.pair_index + 2] - s.d.EF;
  const EffectiveBlocks pred = predicted_blocks(FamilyKind::Fn, s.cc, 0.0, gap);
  CHECK(validate_structure(direct, pred).max_dev() <= 1e-8);
}

TEST_CASE("symmetry lemma relations hold at the production cutoff") {
  const LemmaReport rep = symmetry_lemma_checks(setup().d);
  CHECK(rep.dev_two_der <= 1e-8);
  CHECK(rep.dev_two_der_mix <= 1e-8);
  CHECK(rep.dev_three_der <= 1e-8);
  CHECK(rep.chi2_abs <= 1e-8);
  CHECK(rep.gamma13_abs <= 1e-8);
}

TEST_CASE("pair-only model with zero potential has the explicit cone bands") {
  const Setup& s = setup();
  const ReducedFamily fam = build_family(FamilyKind::F0, s.d);
  const double eps = 1.0 / 3.0;
  const int nu = 2;
  const FourierField zero(s.lat, 0.0);
  const EffectiveModel model = make_effective_model(fam, s.d, eps, nu, zero);
  for (const Vector2d k : {Vector2d(0.05, -0.02), Vector2d(0.0, 0.0)}) {
    const EighComplex sol = solve_effective(model, k);
    // expected spectrum: plus/minus vF |k+b| plus half eps |k+b|^2 per macro mode
    std::vector<double> expect;
    for (int n0 = -nu; n0 <= nu; ++n0) {
      for (int n1 = -nu; n1 <= nu; ++n1) {
        const Vector2d p = k + s.lat.dual({n0, n1});
        const double kin = 0.5 * eps * p.squaredNorm();
        expect.push_back(kin + s.d.vF * p.norm());
        expect.push_back(kin - s.d.vF * p.norm());
      }
    }
    std::sort(expect.begin(), expect.end());
    REQUIRE(sol.values.size() == int(expect.size()));
    for (int i = 0; i < sol.values.size(); ++i) {
      CHECK(std::abs(sol.values[i] - expect[size_t(i)]) < 1e-10);
    }
  }
}

TEST_CASE("assembled matrices are hermitian with positive definite mass") {
  const Setup& s = setup();
  const FourierField V = ng_potential(s.lat, 1.0, 2);
  const ReducedFamily fam = build_family(FamilyKind::F1, s.d);
  const EffectiveModel model = make_effective_model(fam, s.d, 1.0 / 7.0, 2, V);
  const Vector2d k(0.1, 0.07);
  const auto [h, b] = assemble_effective(model, k);
  CHECK((h - h.adjoint()).norm() < 1e-12 * std::max(1.0, h.norm()));
  CHECK((b - b.adjoint()).norm() < 1e-12 * std::max(1.0, b.norm()));
  const EighComplex bs = eigh(b);
  CHECK(bs.values[0] > 0.0);
  // residual of the generalized eigenproblem
  const EighComplex sol = solve_effective(model, k);
  const int mid = int(sol.values.size()) / 2;
  const VectorXcd x = sol.vectors.col(mid);
  CHECK((h * x - sol.values[mid] * (b * x)).norm() < 1e-9 * h.norm());
}

TEST_CASE("window count matches the dense solve") {
  const Setup& s = setup();
  const FourierField zero(s.lat, 0.0);
  const ReducedFamily fam = build_family(FamilyKind::F0, s.d);
  const EffectiveModel model = make_effective_model(fam, s.d, 0.5, 1, zero);
  const Vector2d k(0.04, 0.01);
  const EighComplex sol = solve_effective(model, k);
  const double lo = -0.3, hi = 0.3;
  int expect = 0;
  for (int i = 0; i < sol.values.size(); ++i) {
    if (sol.values[i] >= lo && sol.values[i] <= hi) ++expect;
  }
  CHECK(count_eigenvalues_in_window(model, k, lo, hi) == expect);
}

TEST_CASE("schur reduction agrees with the pair model when no correctors exist") {
  const Setup& s = setup();
  const FourierField V = ng_potential(s.lat, 0.8, 2);
  const ReducedFamily fam = build_family(FamilyKind::F0, s.d);
  const EffectiveModel model = make_effective_model(fam, s.d, 1.0 / 7.0, 2, V);
  const Vector2d k(0.03, -0.06);
  const SchurOperator op = schur_operator(model, k);
  const auto [h, b] = assemble_effective(model, k);
  CHECK((op.h - h).norm() < 1e-12 * std::max(1.0, h.norm()));
  // no correctors: lifting a two-component envelope is the identity
  const auto dim = op.h.rows();
  CHECK(op.reconstruction.rows() == dim);
  CHECK((op.reconstruction - MatrixXcd::Identity(dim, dim)).norm() < 1e-14);
  const EighComplex hs = eigh(op.h);
  const EighComplex sol = solve_effective(model, k);
  CHECK((hs.values - sol.values).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("schur reduction against the full family model at first order in eps") {
  // with correctors present the reduced operator matches the full solve up to
  // higher-order terms; at small eps the nearest-zero branches agree closely
  const Setup& s = setup();
  const FourierField zero(s.lat, 0.0);
  const ReducedFamily fam = build_family(FamilyKind::F1, s.d);
  const double eps = 1.0 / 64.0;
  const EffectiveModel model = make_effective_model(fam, s.d, eps, 1, zero);
  const Vector2d k(0.02, 0.05);
  const SchurOperator op = schur_operator(model, k);
  const EighComplex hs = eigh(op.h);
  const EighComplex sol = solve_effective(model, k, int(hs.values.size()));
  // compare the two nearest-zero eigenvalues
  std::vector<double> a(hs.values.data(), hs.values.data() + hs.values.size());
  std::vector<double> b(sol.values.data(), sol.values.data() + sol.values.size());
  auto absless = [](double x, double y) { return std::abs(x) < std::abs(y); };
  std::sort(a.begin(), a.end(), absless);
  std::sort(b.begin(), b.end(), absless);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(a[size_t(i)] - b[size_t(i)]) < 50.0 * eps * eps);
  }
}

TEST_CASE("model construction rejects invalid scale separation") {
  const Setup& s = setup();
  const ReducedFamily fam = build_family(FamilyKind::F0, s.d);
  const FourierField zero(s.lat, 0);
  CHECK_THROWS_AS(make_effective_model(fam, s.d, -0.25, 2, zero), InvalidParameter);
  CHECK_THROWS_AS(make_effective_model(fam, s.d, 0.5, 0, zero), InvalidParameter);
}

TEST_CASE("zero scale ratio keeps the schur limit but not the assembly") {
  const Setup& s = setup();
  const ReducedFamily fam = build_family(FamilyKind::F0, s.d);
  const FourierField zero(s.lat, 0);
  const EffectiveModel model = make_effective_model(fam, s.d, 0.0, 1, zero);
  const Vector2d k(0.07, -0.02);
  CHECK_THROWS_AS(assemble_effective(model, k), InvalidParameter);
  // the reduced operator degenerates to the bare cone at every dual shift
  const SchurOperator op = schur_operator(model, k);
  const EighComplex sol = eigh(op.h);
  const MicroBasis mac{s.lat, 1};
  std::vector<double> expect;
  for (int i = 0; i < mac.dim(); ++i) {
    const double r = (k + s.lat.dual(mac.mode(i))).norm();
    expect.push_back(-s.d.vF * r);
    expect.push_back(s.d.vF * r);
  }
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < sol.values.size(); ++i) {
    CHECK(std::abs(sol.values[i] - expect[size_t(i)]) < 1e-12);
  }
}

TEST_SUITE_END();
