#include "tsb/perturbation.hpp"

#include <cmath>

#include "tsb/linalg.hpp"

namespace tsb {

VectorXcd apply_dirk(const DiracData& d, const Vector2d& direction, const VectorXcd& v) {
  const double nn = direction.norm();
  if (nn == 0.0) throw InvalidParameter("direction must be nonzero");
  const Vector2d kh = direction / nn;
  VectorXcd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const Vector2d q = d.q + d.basis.lat.dual(d.basis.mode(i));
    out[i] = (kh[0] * q[0] + kh[1] * q[1]) * v[i];
  }
  return out;
}

VectorXcd project_pair(const DiracData& d, const VectorXcd& v) {
  return d.w1 * d.w1.dot(v) + d.w2 * d.w2.dot(v);
}

VectorXcd canonical_phase(const VectorXcd& u) {
  int imax = 0;
  double best = -1.0;
  for (int i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]);
    if (a > best) {
      best = a;
      imax = i;
    }
  }
  if (best == 0.0) return u;
  return u * std::polar(1.0, -std::arg(u[imax]));
}

namespace {

void check_gram(const ReducedFamily& fam) {
  const int m = fam.size();
  if (m <= 2) return;
  const int nc = m - 2;
  MatrixXcd g(nc, nc);
  for (int i = 0; i < nc; ++i) {
    for (int j = 0; j < nc; ++j) {
      g(i, j) = fam.vectors[2 + i].dot(fam.vectors[2 + j]);
    }
  }
  const EighComplex es = eigh(MatrixXcd((g + g.adjoint()) / 2.0));
  const double lo = es.values[0];
  const double hi = es.values[nc - 1];
  if (!(lo >= 1e-10 * hi)) {
    throw DependentFamily("corrector gram matrix nearly singular, smallest eigenvalue " +
                          std::to_string(lo));
  }
}

}  // namespace

ReducedFamily build_family(FamilyKind kind, const DiracData& d,
                           const Vector2d* direction, int n) {
  ReducedFamily fam;
  fam.kind = kind;
  fam.basis = d.basis;
  fam.vectors = {d.w1, d.w2};
  const auto grad = [&](const VectorXcd& v, int j) {
    return apply_grad(d.basis, d.q, j, v);
  };
  const auto res = [&](const VectorXcd& v, int power = 1) {
    return apply_resolvent(d, v, power);
  };

  switch (kind) {
    case FamilyKind::F0:
      break;
    case FamilyKind::F1k:
    case FamilyKind::F2k: {
      if (!direction || direction->norm() == 0.0) {
        throw InvalidParameter("directional family needs a nonzero direction");
      }
      fam.direction = direction->normalized();
      const auto dk = [&](const VectorXcd& v) { return apply_dirk(d, fam.direction, v); };
      for (const VectorXcd* w : {&d.w1, &d.w2}) fam.vectors.push_back(res(dk(*w)));
      if (kind == FamilyKind::F2k) {
        for (const VectorXcd* w : {&d.w1, &d.w2}) {
          const VectorXcd x1 = res(dk(res(dk(*w))));
          const VectorXcd x2 = res(dk(project_pair(d, dk(*w))), 2);
          fam.vectors.push_back(x1 - x2);
        }
      }
      break;
    }
    case FamilyKind::F1:
      for (const VectorXcd* w : {&d.w1, &d.w2}) {
        for (int b = 0; b < 2; ++b) fam.vectors.push_back(res(grad(*w, b)));
      }
      break;
    case FamilyKind::F2: {
      for (const VectorXcd* w : {&d.w1, &d.w2}) {
        for (int b = 0; b < 2; ++b) fam.vectors.push_back(res(grad(*w, b)));
      }
      for (const VectorXcd* w : {&d.w1, &d.w2}) {
        for (int b = 0; b < 2; ++b) fam.vectors.push_back(res(grad(*w, b), 2));
      }
      for (const VectorXcd* w : {&d.w1, &d.w2}) {
        for (int b = 0; b < 2; ++b) {
          for (int c = 0; c < 2; ++c) {
            fam.vectors.push_back(res(grad(res(grad(*w, c)), b)));
          }
        }
      }
      break;
    }
    case FamilyKind::Fn: {
      if (n < 2) throw InvalidParameter("eigenvector family needs n >= 2");
      if (d.pair_index + n > d.E.size()) {
        throw InvalidParameter("eigenvector family exceeds available bands");
      }
      if (n >= 3 && d.E[d.pair_index + 2] - d.EF < 1e-3) {
        throw SpectralGap("insufficient gap above the pair for the eigenvector family");
      }
      fam.n = n;
      for (int i = 2; i < n; ++i) {
        fam.vectors.push_back(canonical_phase(d.U.col(d.pair_index + i)));
      }
      break;
    }
  }
  check_gram(fam);
  return fam;
}

RSExpansion rs_expansion(const DiracData& d, const Vector2d& direction) {
  if (direction.norm() == 0.0) throw InvalidParameter("direction must be nonzero");
  RSExpansion rs;
  rs.direction = direction.normalized();
  const double theta = std::atan2(rs.direction[1], rs.direction[0]);
  const cplx kbar = std::polar(1.0, -theta);
  const auto dk = [&](const VectorXcd& v) { return apply_dirk(d, rs.direction, v); };

  const double inv_s2 = 1.0 / std::sqrt(2.0);
  const VectorXcd u0p = inv_s2 * (kbar * d.w1 + d.w2);
  const VectorXcd u0m = inv_s2 * (-kbar * d.w1 + d.w2);
  rs.U0_plus = u0p;
  rs.U0_minus = u0m;
  rs.E1_plus = d.vF;
  rs.E1_minus = -d.vF;

  const VectorXcd rdp = apply_resolvent(d, dk(u0p));
  const VectorXcd rdm = apply_resolvent(d, dk(u0m));
  rs.E2_plus = 0.5 + u0p.dot(dk(rdp)).real();
  rs.E2_minus = 0.5 + u0m.dot(dk(rdm)).real();

  const cplx cp = u0m.dot(dk(rdp)) / (2.0 * d.vF);
  const cplx cm = u0p.dot(dk(rdm)) / (-2.0 * d.vF);
  rs.U1_plus = rdp + cp * u0m;
  rs.U1_minus = rdm + cm * u0p;
  return rs;
}

VectorXcd dm_gamma(const DiracData& d, const Vector2d& direction, int order, int a) {
  if (order != 1 && order != 2) throw InvalidParameter("corrector order must be 1 or 2");
  if (a != 1 && a != 2) throw InvalidParameter("pair member must be 1 or 2");
  const double kn = direction.norm();
  if (kn == 0.0) throw InvalidParameter("direction must be nonzero");
  const VectorXcd& w = (a == 1) ? d.w1 : d.w2;
  const auto dk = [&](const VectorXcd& v) { return apply_dirk(d, direction, v); };
  if (order == 1) {
    return kn * apply_resolvent(d, dk(w));
  }
  const VectorXcd t1 = -project_pair(d, dk(apply_resolvent(d, dk(w), 2)));
  const VectorXcd t2 = apply_resolvent(d, dk(apply_resolvent(d, dk(w))));
  const VectorXcd t3 = apply_resolvent(d, dk(project_pair(d, dk(w))), 2);
  return (kn * kn) * (t1 + t2 - t3);
}

}  // namespace tsb
