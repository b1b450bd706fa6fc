#include "tsb/micro.hpp"

#include <cmath>

#include "tsb/linalg.hpp"

namespace tsb {

MatrixXcd assemble_h_q(const MicroBasis& basis, const Vector2d& q, const FourierField& v) {
  const int n = basis.dim();
  MatrixXcd h = MatrixXcd::Zero(n, n);
  const double inv_sq = 1.0 / basis.lat.sqrt_area;
  const auto support = v.support();
  for (int i = 0; i < n; ++i) {
    const Mode mi = basis.mode(i);
    h(i, i) = 0.5 * (q + basis.lat.dual(mi)).squaredNorm();
  }
  for (const Mode& off : support) {
    const cplx c = v.at(off) * inv_sq;
    for (int j = 0; j < n; ++j) {
      const Mode mi = basis.mode(j) + off;
      if (!basis.contains(mi)) continue;
      h(basis.index(mi), j) += c;
    }
  }
  return h;
}

VectorXcd apply_grad(const MicroBasis& basis, const Vector2d& q, int j, const VectorXcd& psi) {
  VectorXcd out(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    out[i] = (q + basis.lat.dual(basis.mode(i)))[j] * psi[i];
  }
  return out;
}

VectorXcd apply_rot(const MicroBasis& basis, const VectorXcd& psi, double* leak_mass) {
  VectorXcd out = VectorXcd::Zero(basis.dim());
  double leak = 0.0;
  for (int i = 0; i < basis.dim(); ++i) {
    const Mode t = rot_index(basis.mode(i)) + rot_offset();
    if (basis.contains(t)) {
      out[basis.index(t)] = psi[i];
    } else {
      leak += std::norm(psi[i]);
    }
  }
  if (leak_mass) *leak_mass = leak;
  return out;
}

VectorXcd apply_mirror(const MicroBasis& basis, const VectorXcd& psi) {
  VectorXcd out = VectorXcd::Zero(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    out[basis.index(mirror_index(basis.mode(i)))] = psi[i];
  }
  return out;
}

namespace {

// eigenpairs of a 2x2 matrix, closed form
void eig2(const Eigen::Matrix2cd& a, std::array<cplx, 2>& vals,
          std::array<Eigen::Vector2cd, 2>& vecs) {
  const cplx tr = a(0, 0) + a(1, 1);
  const cplx det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const cplx disc = std::sqrt(tr * tr - 4.0 * det);
  vals[0] = 0.5 * (tr + disc);
  vals[1] = 0.5 * (tr - disc);
  for (int s = 0; s < 2; ++s) {
    Eigen::Vector2cd v1(a(0, 1), vals[s] - a(0, 0));
    Eigen::Vector2cd v2(vals[s] - a(1, 1), a(1, 0));
    Eigen::Vector2cd v = (v1.norm() >= v2.norm()) ? v1 : v2;
    const double nn = v.norm();
    if (nn == 0.0) v = Eigen::Vector2cd(1.0, 0.0);
    else v /= nn;
    vecs[s] = v;
  }
}

}  // namespace

DiracData detect_dirac(const Lattice& lat, const FourierField& v, int cutoff,
                       int m_f, const DiracTolerances& tol) {
  if (m_f < 1) throw InvalidParameter("band pair index must be >= 1");
  MicroBasis basis{lat, cutoff};
  const int p = 2 * (m_f - 1);
  if (p + 1 >= basis.dim()) throw InvalidParameter("band pair index beyond basis size");

  DiracData d;
  d.basis = basis;
  d.q = lat.K;
  const MatrixXcd h = assemble_h_q(basis, lat.K, v);
  EighComplex es = eigh_auto(h);
  d.E = es.values;
  d.U = std::move(es.vectors);
  d.pair_index = p;

  d.EF = 0.5 * (d.E[p] + d.E[p + 1]);
  if (std::abs(d.E[p + 1] - d.E[p]) > tol.degeneracy * (1.0 + std::abs(d.EF))) {
    throw NoDiracPoint("selected bands are not degenerate at the vertex");
  }
  if (p > 0 && d.EF - d.E[p - 1] < tol.margin) {
    throw NoDiracPoint("selected pair is not isolated from below");
  }
  if (p + 2 < basis.dim() && d.E[p + 2] - d.EF < tol.margin) {
    throw NoDiracPoint("selected pair is not isolated from above");
  }

  // rotation restricted to the degenerate pair must be unitary with the two
  // primitive cube roots as spectrum; anything else means the protecting
  // symmetry is absent
  const VectorXcd u1 = d.U.col(p);
  const VectorXcd u2 = d.U.col(p + 1);
  double leak1 = 0.0, leak2 = 0.0;
  const VectorXcd ru1 = apply_rot(basis, u1, &leak1);
  const VectorXcd ru2 = apply_rot(basis, u2, &leak2);
  d.leakage = std::max(leak1, leak2);
  if (d.leakage > tol.leakage) {
    throw ResolutionError("rotation leakage exceeds tolerance, increase the cutoff");
  }
  Eigen::Matrix2cd urot;
  urot(0, 0) = u1.dot(ru1);
  urot(0, 1) = u1.dot(ru2);
  urot(1, 0) = u2.dot(ru1);
  urot(1, 1) = u2.dot(ru2);
  const double unit_dev = (urot.adjoint() * urot - Eigen::Matrix2cd::Identity()).norm();
  if (unit_dev > tol.symmetry) {
    throw SymmetryViolation("rotation does not act unitarily on the pair");
  }
  std::array<cplx, 2> vals;
  std::array<Eigen::Vector2cd, 2> vecs;
  eig2(urot, vals, vecs);
  const cplx omega = std::polar(1.0, 2.0 * kPi / 3.0);
  int i_omega = -1;
  for (int s = 0; s < 2; ++s) {
    if (std::abs(vals[s] - omega) <= tol.symmetry) i_omega = s;
  }
  int i_conj = 1 - i_omega;
  if (i_omega < 0 || std::abs(vals[i_conj] - std::conj(omega)) > tol.symmetry) {
    throw SymmetryViolation("rotation eigenvalues are not the primitive cube roots");
  }

  VectorXcd phi1 = vecs[i_omega][0] * u1 + vecs[i_omega][1] * u2;
  phi1 /= phi1.norm();
  VectorXcd phi2 = phi1.conjugate();

  // conjugation must stay inside the degenerate span
  const cplx c1 = u1.dot(phi2);
  const cplx c2 = u2.dot(phi2);
  const double span_dev = (phi2 - c1 * u1 - c2 * u2).norm();
  if (span_dev > tol.symmetry) {
    throw SymmetryViolation("conjugate partner leaves the degenerate span");
  }

  // pairwise loewdin orthonormalization keeps the conjugate structure
  const cplx delta = phi1.dot(phi2);
  if (std::abs(delta) > 0.99) throw NumericalFailure("pair overlap close to collinear");
  const double ad = std::abs(delta);
  const double pp = 1.0 / std::sqrt(1.0 + ad);
  const double qq = 1.0 / std::sqrt(1.0 - ad);
  const double diag = 0.5 * (pp + qq);
  const cplx phase_d = (ad > 0.0) ? delta / ad : cplx(1.0, 0.0);
  const cplx offd = phase_d * 0.5 * (pp - qq);
  const VectorXcd w1o = diag * phi1 + std::conj(offd) * phi2;
  const VectorXcd w2o = offd * phi1 + diag * phi2;

  // fix the global phase so the velocity row is real positive times (1, -i)
  const cplx v_raw = w1o.dot(apply_grad(basis, lat.K, 0, w2o));
  const cplx phase = std::polar(1.0, 0.5 * std::arg(v_raw));
  d.w1 = phase * w1o;
  d.w2 = d.w1.conjugate();
  (void)w2o;

  const cplx g0 = d.w1.dot(apply_grad(basis, lat.K, 0, d.w2));
  const cplx g1 = d.w1.dot(apply_grad(basis, lat.K, 1, d.w2));
  d.vF = g0.real();
  if (d.vF < tol.cone) throw DegenerateCone("cone slope below tolerance");
  d.structure_residual = std::hypot(std::abs(g0 - cplx(d.vF, 0.0)),
                                    std::abs(g1 - cplx(0.0, -d.vF)));
  if (d.structure_residual > tol.symmetry) {
    throw SymmetryViolation("velocity row deviates from the cone structure");
  }

  // mirror exchanges the pair up to a sign
  const VectorXcd mw1 = apply_mirror(basis, d.w1);
  const cplx mr = d.w2.dot(mw1);
  const double sign = (mr.real() >= 0.0) ? 1.0 : -1.0;
  if (std::abs(mr - cplx(sign, 0.0)) > tol.symmetry ||
      (mw1 - cplx(sign, 0.0) * d.w2).norm() > tol.symmetry) {
    throw SymmetryViolation("mirror does not exchange the gauged pair");
  }
  d.mirror_parity = sign;
  return d;
}

VectorXcd apply_resolvent(const DiracData& d, const VectorXcd& b, int power) {
  if (power != 1 && power != 2) {
    throw InvalidParameter("resolvent power must be 1 or 2");
  }
  const int n = int(d.E.size());
  VectorXcd coef = d.U.adjoint() * b;
  for (int m = 0; m < n; ++m) {
    if (m == d.pair_index || m == d.pair_index + 1) {
      coef[m] = cplx(0.0, 0.0);
      continue;
    }
    const double den = d.EF - d.E[m];
    coef[m] /= (power == 1) ? den : den * den;
  }
  return d.U * coef;
}

VectorXcd apply_h(const DiracData& d, const VectorXcd& b) {
  VectorXcd coef = d.U.adjoint() * b;
  for (int m = 0; m < int(d.E.size()); ++m) coef[m] *= d.E[m];
  return d.U * coef;
}

}  // namespace tsb
