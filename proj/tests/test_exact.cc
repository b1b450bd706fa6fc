#include <doctest.h>

#include <algorithm>

#include "tsb/exact.hpp"

using namespace tsb;

namespace {

struct Base {
  Lattice lat = build_lattice(5.0);
  FourierField vm, vM;
  double EF;
  Base()
      : vm(honeycomb_potential(lat, 10.0, 1)),
        vM(ng_potential(lat, 1.0, 2)),
        EF(detect_dirac(lat, vm, 12).EF) {}
};

const Base& base() {
  static Base b;
  return b;
}

ExactOperatorSpec make_spec(int inv_eps, const Vector2d& k, int fine_cutoff,
                            bool with_macro = true) {
  const Base& b = base();
  ExactOperatorSpec spec;
  spec.lat = b.lat;
  spec.inv_epsilon = inv_eps;
  spec.k = k;
  spec.v_micro = b.vm;
  spec.v_macro = with_macro ? b.vM : FourierField(b.lat, 0);
  spec.fine_cutoff = fine_cutoff;
  spec.E_F = b.EF;
  return spec;
}

}  // namespace

TEST_SUITE_BEGIN("exact");

TEST_CASE("scale ratio one reduces to the single-scale operator") {
  const Base& b = base();
  const Vector2d k(0.07, -0.02);
  const ExactOperatorSpec spec = make_spec(1, k, 6);
  const MatrixXcd h = assemble_exact(spec);
  // reference: bloch operator at K + k with the summed potential, minus E_F
  const MicroBasis mb{b.lat, 6};
  FourierField vsum(b.lat, 2);
  for (const Mode& m : b.vm.support()) vsum.set(m, vsum.at(m) + b.vm.at(m));
  for (const Mode& m : b.vM.support()) vsum.set(m, vsum.at(m) + b.vM.at(m));
  const MatrixXcd ref = assemble_h_q(mb, b.lat.K + k, vsum) -
                        b.EF * MatrixXcd::Identity(mb.dim(), mb.dim());
  CHECK((h - ref).norm() < 1e-10 * std::max(1.0, ref.norm()));
}

TEST_CASE("assembled operator is hermitian") {
  const MatrixXcd h = assemble_exact(make_spec(3, Vector2d(0.02, 0.05), 8));
  CHECK((h - h.adjoint()).norm() < 1e-12 * std::max(1.0, h.norm()));
}

TEST_CASE("window selection contract: count mode and interval mode") {
  const ExactOperatorSpec spec = make_spec(2, Vector2d(0.01, 0.03), 7);
  const MatrixXcd h = assemble_exact(spec);
  const EighComplex full = eigh(h);

  ExactWindow wc;
  wc.count = 9;
  const EighComplex sel = solve_exact(spec, wc);
  REQUIRE(sel.values.size() == 9);
  // returned values are ascending and match the 9 smallest in magnitude
  std::vector<double> mags(full.values.data(), full.values.data() + full.values.size());
  std::sort(mags.begin(), mags.end(),
            [](double a, double c) { return std::abs(a) < std::abs(c); });
  std::vector<double> expect(mags.begin(), mags.begin() + 9);
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < 9; ++i) {
    CHECK(sel.values[i] == doctest::Approx(expect[size_t(i)]).epsilon(1e-10));
    if (i > 0) CHECK(sel.values[i] >= sel.values[i - 1]);
    // residual against the assembled matrix
    CHECK((h * sel.vectors.col(i) - sel.values[i] * sel.vectors.col(i)).norm() <
          1e-9 * std::max(1.0, h.norm()));
  }

  ExactWindow wi;
  wi.lo = -1.0;
  wi.hi = 2.0;
  const EighComplex ivl = solve_exact(spec, wi);
  int manual = 0;
  for (int i = 0; i < full.values.size(); ++i) {
    if (full.values[i] >= wi.lo && full.values[i] <= wi.hi) ++manual;
  }
  CHECK(ivl.values.size() == manual);
}

TEST_CASE("parameter guards") {
  CHECK_THROWS_AS(assemble_exact(make_spec(0, Vector2d::Zero(), 6)),
                  InvalidParameter);
  // fine box too small for the scaled micro support
  CHECK_THROWS_AS(assemble_exact(make_spec(4, Vector2d::Zero(), 3)),
                  ResolutionError);
  // dense budget
  ExactWindow w;
  w.count = 4;
  CHECK_THROWS_AS(solve_exact(make_spec(2, Vector2d::Zero(), 30), w, 100),
                  ResourceError);
}

TEST_CASE("zero macro potential: spectrum equals the folding oracle") {
  const Vector2d k(0.03, -0.04);
  for (int ie : {2, 3}) {
    ExactOperatorSpec spec = make_spec(ie, k, ie * 6 + 2, false);
    ExactWindow w;
    w.count = 12;
    const EighComplex direct = solve_exact(spec, w, 4100);
    const std::vector<double> folded = folded_reference(spec, 6);
    // the folding oracle returns all shifted energies; take the 12 nearest zero
    std::vector<double> ref = folded;
    std::sort(ref.begin(), ref.end(),
              [](double a, double c) { return std::abs(a) < std::abs(c); });
    ref.resize(12);
    std::sort(ref.begin(), ref.end());
    for (int i = 0; i < 12; ++i) {
      CHECK(std::abs(direct.values[i] - ref[size_t(i)]) <
            2e-6 * (1.0 + std::abs(ref[size_t(i)])));
    }
  }
}

TEST_CASE("folding oracle rejects a nonzero macro potential") {
  const ExactOperatorSpec spec = make_spec(2, Vector2d::Zero(), 14, true);
  CHECK_THROWS_AS(folded_reference(spec, 6), InvalidInput);
}

TEST_CASE("spectrum is invariant under a dual-lattice momentum shift") {
  const Vector2d k(0.02, 0.01);
  ExactOperatorSpec a = make_spec(2, k, 9);
  ExactOperatorSpec b = a;
  b.k = k + b.lat.a1s;
  ExactWindow w;
  w.count = 8;
  const EighComplex ea = solve_exact(a, w);
  const EighComplex eb = solve_exact(b, w);
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(ea.values[i] - eb.values[i]) < 1e-6 * (1.0 + std::abs(ea.values[i])));
  }
}

TEST_CASE("spectrum moves continuously with the macro amplitude") {
  const Vector2d k(0.05, 0.0);
  ExactOperatorSpec spec = make_spec(2, k, 9);
  ExactWindow w;
  w.count = 6;
  const EighComplex e1 = solve_exact(spec, w);
  spec.v_macro = ng_potential(spec.lat, 1.0 + 1e-6, 2);
  const EighComplex e2 = solve_exact(spec, w);
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(e1.values[i] - e2.values[i]) < 1e-4);
  }
}

TEST_CASE("folded classes partition the balanced residue set") {
  const Base& b = base();
  const int ie = 3;
  const auto classes = folded_classes(b.lat, b.vm, 5, ie, Vector2d(0.01, 0.02), 2);
  CHECK(int(classes.size()) == ie * ie);
  const int h = ie / 2;
  for (const FoldedClass& c : classes) {
    CHECK(c.residue[0] >= -h);
    CHECK(c.residue[0] <= ie - 1 - h);
    CHECK(c.residue[1] >= -h);
    CHECK(c.residue[1] <= ie - 1 - h);
    CHECK(c.E.size() == 2);
    CHECK(c.U.cols() == 2);
    // kept eigenvectors are orthonormal
    CHECK((c.U.adjoint() * c.U - MatrixXcd::Identity(2, 2)).norm() < 1e-10);
  }
  // residue filter keeps only the requested classes
  const std::vector<Mode> only = {Mode{0, 0}, Mode{1, 0}};
  const auto filtered =
      folded_classes(b.lat, b.vm, 5, ie, Vector2d(0.01, 0.02), 2, -1, &only);
  REQUIRE(filtered.size() == 2);
  CHECK(filtered[0].residue == Mode{0, 0});
  CHECK(filtered[1].residue == Mode{1, 0});
}

TEST_CASE("folded galerkin with all bands reproduces the dense fine solve") {
  // with a clip matching the fine box and every band kept, the galerkin
  // representation is an exact change of basis
  const Base& b = base();
  const int ie = 2, mcut = 3;
  // with this clip every fine mode |n| <= 6 decomposes uniquely into a kept
  // class mode, so the two bases are related by a unitary change of basis
  const int fine = ie * mcut;
  const Vector2d k(0.02, -0.01);

  std::vector<Mode> macro_modes = b.vM.support();
  const int keep = (2 * mcut + 1) * (2 * mcut + 1);
  const FoldedGalerkin g =
      build_folded_galerkin(b.lat, b.vm, mcut, ie, k, keep, macro_modes, fine);
  const MatrixXcd hf = assemble_folded(g, b.vM, b.EF);

  ExactOperatorSpec spec = make_spec(ie, k, fine);
  const MatrixXcd hd = assemble_exact(spec);

  const EighComplex ef_ = eigh(hf);
  const EighComplex ed = eigh(hd);
  REQUIRE(ef_.values.size() == ed.values.size());
  for (int i = 0; i < ed.values.size(); ++i) {
    CHECK(std::abs(ef_.values[i] - ed.values[i]) < 1e-10 * (1.0 + std::abs(ed.values[i])));
  }
}

TEST_CASE("folded state lifts to a unit fine-basis vector") {
  const Base& b = base();
  const int ie = 2, mcut = 3;
  std::vector<Mode> macro_modes = b.vM.support();
  const FoldedGalerkin g =
      build_folded_galerkin(b.lat, b.vm, mcut, ie, Vector2d(0.01, 0.0), 3, macro_modes);
  const MatrixXcd hf = assemble_folded(g, b.vM, b.EF);
  const EighComplex es = eigh(hf);
  VectorXcd c = es.vectors.col(0);
  const SparseVec fine = folded_state_to_fine(g, c);
  double nrm2 = 0.0;
  for (const auto& [m, a] : fine) nrm2 += std::norm(a);
  CHECK(std::sqrt(nrm2) == doctest::Approx(1.0).epsilon(1e-10));
  // single-class column lift is a unit vector too
  const SparseVec one = class_state_to_fine(g.classes[0], 0, ie);
  double n1 = 0.0;
  for (const auto& [m, a] : one) n1 += std::norm(a);
  CHECK(std::sqrt(n1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("convergence mode reports a small drift for a settled cutoff") {
  ExactOperatorSpec spec = make_spec(2, Vector2d(0.01, 0.02), 10);
  ExactWindow w;
  w.count = 4;
  const DriftReport rep = solve_exact_convergence(spec, w, 4100);
  REQUIRE(rep.base.values.size() == 4);
  REQUIRE(rep.refined.values.size() == 4);
  CHECK(rep.drift < 1e-8);
  CHECK(rep.drift ==
        doctest::Approx((rep.base.values - rep.refined.values).cwiseAbs().maxCoeff())
            .epsilon(1e-12));
}

TEST_SUITE_END();
