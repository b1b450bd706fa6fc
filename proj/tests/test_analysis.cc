#include <doctest.h>

#include "tsb/analysis.hpp"

using namespace tsb;

namespace {

struct Setup {
  Lattice lat = build_lattice(5.0);
  FourierField vm;
  DiracData d;
  Setup() : vm(honeycomb_potential(lat, 10.0, 1)), d(detect_dirac(lat, vm, 8)) {}
};

const Setup& setup() {
  static Setup s;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("analysis");

TEST_CASE("reconstruction places a single envelope mode at shifted indices") {
  const Setup& s = setup();
  const ReducedFamily fam = build_family(FamilyKind::F0, s.d);
  const int nu = 1, ie = 4, fine = 40;
  const MicroBasis mac{s.lat, nu};
  VectorXcd env = VectorXcd::Zero(mac.dim() * 2);
  const Mode probe{1, -1};
  env[mac.index(probe) * 2 + 0] = 1.0;  // family slot 0 = first pair member
  const SparseVec out = reconstruct(fam, env, ie, nu, fine);
  // every fine coefficient must equal w1[p] / sqrt_area at index probe + ie p
  const double inv_sq = 1.0 / s.lat.sqrt_area;
  double checked = 0.0;
  for (const auto& [m, c] : out) {
    const Mode p = {(m[0] - probe[0]) / ie, (m[1] - probe[1]) / ie};
    REQUIRE((m[0] - probe[0]) % ie == 0);
    REQUIRE((m[1] - probe[1]) % ie == 0);
    CHECK(std::abs(c - s.d.w1[s.d.basis.index(p)] * inv_sq) < 1e-14);
    checked += std::norm(c);
  }
  CHECK(std::sqrt(checked) == doctest::Approx(inv_sq).epsilon(1e-10));
  // normalized mode rescales to a unit vector
  const SparseVec unit = reconstruct(fam, env, ie, nu, fine, true);
  CHECK(sparse_norm(unit) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reconstruction rejects an insufficient fine cutoff") {
  const Setup& s = setup();
  const ReducedFamily fam = build_family(FamilyKind::F0, s.d);
  const MicroBasis mac{s.lat, 1};
  VectorXcd env = VectorXcd::Zero(mac.dim() * 2);
  env[0] = 1.0;
  // need fine >= nu + ie * support radius = 1 + 4 * 8
  CHECK_THROWS_AS(reconstruct(fam, env, 4, 1, 30), ResolutionError);
  CHECK_NOTHROW(reconstruct(fam, env, 4, 1, 33));
  // wrong envelope length
  VectorXcd bad = VectorXcd::Zero(5);
  CHECK_THROWS_AS(reconstruct(fam, bad, 4, 1, 40), InvalidInput);
}

TEST_CASE("eigenvector distance is a phase-invariant ray metric") {
  VectorXcd a(3), b(3);
  a << cplx(1, 0), cplx(0, 2), cplx(-1, 1);
  b = a * std::polar(1.0, 0.77);
  CHECK(eigvec_distance(a, b) < 1e-12);
  CHECK(eigvec_distance(a, a) < 1e-15);
  // orthogonal rays are sqrt(2) apart after normalization
  VectorXcd c(3);
  c << cplx(0, 0), cplx(0, 0), cplx(0, 0);
  CHECK_THROWS_AS(eigvec_distance(a, c), InvalidInput);
  VectorXcd e1(2), e2(2);
  e1 << 1.0, 0.0;
  e2 << 0.0, 1.0;
  CHECK(eigvec_distance(e1, e2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // sparse overload agrees
  SparseVec sa, sb;
  sa[{0, 0}] = cplx(1, 0);
  sa[{1, 2}] = cplx(0, 2);
  sb[{0, 0}] = cplx(1, 0) * std::polar(1.0, -1.2);
  sb[{1, 2}] = cplx(0, 2) * std::polar(1.0, -1.2);
  CHECK(eigvec_distance(sa, sb) < 1e-12);
}

TEST_CASE("pair distance vanishes for a unitary remix of the same pair") {
  SparseVec u1, u2;
  u1[{0, 0}] = 1.0;
  u1[{2, 1}] = cplx(0.0, 1.0);
  u2[{1, 1}] = 2.0;
  auto normalize = [](SparseVec v) {
    double n = 0.0;
    for (auto& [m, c] : v) n += std::norm(c);
    n = std::sqrt(n);
    for (auto& [m, c] : v) c /= n;
    return v;
  };
  u1 = normalize(u1);
  u2 = normalize(u2);
  // model pair is a rotation of the exact pair inside the same 2d space
  const double th = 0.63;
  SparseVec m1, m2;
  for (const auto& [m, c] : u1) {
    m1[m] += std::cos(th) * c;
    m2[m] += -std::sin(th) * c;
  }
  for (const auto& [m, c] : u2) {
    m1[m] += std::sin(th) * std::polar(1.0, 0.2) * c;
    m2[m] += std::cos(th) * std::polar(1.0, 0.2) * c;
  }
  const PairDistance pd = pair_distance({u1, u2}, {m1, m2});
  CHECK(pd.mean() < 1e-10);
  CHECK(pd.smin > 0.9);
  // disjoint supports are maximally distant
  SparseVec o1, o2;
  o1[{9, 9}] = 1.0;
  o2[{9, 8}] = 1.0;
  const PairDistance far = pair_distance({u1, u2}, {o1, o2});
  CHECK(far.smin < 1e-12);
}

TEST_CASE("log-log slope fit recovers exact power laws") {
  std::vector<double> grid, cubic, linear;
  for (int i = 0; i < 9; ++i) {
    const double mu = 1e-2 * std::pow(10.0, i / 8.0);
    grid.push_back(mu);
    cubic.push_back(2.5 * mu * mu * mu);
    linear.push_back(0.3 * mu);
  }
  CHECK(fit_loglog_slope(grid, cubic, 1e-2, 1e-1) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(fit_loglog_slope(grid, linear, 1e-2, 1e-1) == doctest::Approx(1.0).epsilon(1e-10));
  // window restriction uses only interior points
  cubic[0] = 1e6;
  CHECK(fit_loglog_slope(grid, cubic, grid[1], 1e-1) == doctest::Approx(3.0).epsilon(1e-9));
  const auto [lo, hi] = default_fit_window(grid);
  CHECK(lo >= grid[2]);
  CHECK(hi == doctest::Approx(grid.back()));
}

TEST_CASE("oscillating sums cancel once the scale ratio clears the field cutoff") {
  const Setup& s = setup();
  const FourierField g = ng_potential(s.lat, 1.0, 2);
  const std::vector<int> list = {1, 2, 3, 5, 8};
  const std::vector<double> dev = oscillation_check(g, s.vm, list);
  REQUIRE(dev.size() == list.size());
  // once 1/eps exceeds the slow field cutoff no resonance survives
  for (size_t i = 0; i < list.size(); ++i) {
    if (list[i] > g.cutoff()) CHECK(dev[i] == 0.0);
  }
  // at 1/eps = 1 the fields share support, so the sum is nonzero
  CHECK(dev[0] > 1e-6);
}

TEST_CASE("weak formulation discrepancy is tiny for band-limited envelopes") {
  const Setup& s = setup();
  const ReducedFamily fam = build_family(FamilyKind::F0, s.d);
  const int nu_env = 2;
  const MicroBasis mac{s.lat, nu_env};
  VectorXcd alpha = VectorXcd::Zero(mac.dim() * 2);
  VectorXcd beta = VectorXcd::Zero(mac.dim() * 2);
  // smooth gaussian-profile envelopes on the first pair slot
  for (int i = 0; i < mac.dim(); ++i) {
    const Vector2d p = s.lat.dual(mac.mode(i));
    alpha[i * 2 + 0] = std::exp(-0.8 * p.squaredNorm());
    beta[i * 2 + 1] = std::exp(-0.5 * p.squaredNorm()) * cplx(0.3, 0.1);
  }
  const FourierField V = ng_potential(s.lat, 0.6, 2);
  const Vector2d k(0.02, -0.01);
  const std::vector<int> list = {8, 16};
  const std::vector<double> dev =
      weak_convergence_check(fam, s.d, s.vm, alpha, beta, nu_env, list, k, V);
  REQUIRE(dev.size() == 2);
  CHECK(dev[0] <= 1e-10);
  CHECK(dev[1] <= 1e-10);
}

TEST_CASE("family labels") {
  CHECK(family_label(FamilyKind::F0) == "F0");
  CHECK(family_label(FamilyKind::F1k) == "F1k");
  CHECK(family_label(FamilyKind::F1) == "F1");
  CHECK(family_label(FamilyKind::F2k) == "F2k");
  CHECK(family_label(FamilyKind::F2) == "F2");
  CHECK(family_label(FamilyKind::Fn, 6) == "F6");
}

TEST_SUITE_END();
