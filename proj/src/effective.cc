#include "tsb/effective.hpp"

#include <cmath>

namespace tsb {

namespace {

using Eigen::Matrix2cd;

const cplx I(0.0, 1.0);

Matrix2cd sigma1() {
  Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}

Matrix2cd sigma2() {
  Matrix2cd m;
  m << 0, -I, I, 0;
  return m;
}

// structure matrix entering the off-diagonal closed forms
Matrix2cd dmat() {
  Matrix2cd m;
  m << 1, I, I, -1;
  return m;
}

struct ConstantTables {
  Matrix2cd mrr[2][2];  // <R grad_n w_a, R grad_m w_b>
  Matrix2cd m1r[2][2];  // <grad_n w_a, R grad_m w_b>
  cplx f[2][2][2][2][2];  // <R grad_q w_a, grad_j R grad_m w_b>
};

ConstantTables bilinear_tables(const DiracData& d) {
  ConstantTables tab;
  std::array<std::array<VectorXcd, 2>, 2> gd, rd;
  const std::array<const VectorXcd*, 2> ws = {&d.w1, &d.w2};
  for (int a = 0; a < 2; ++a) {
    for (int n = 0; n < 2; ++n) {
      gd[a][n] = apply_grad(d.basis, d.q, n, *ws[a]);
      rd[a][n] = apply_resolvent(d, gd[a][n]);
    }
  }
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int n = 0; n < 2; ++n) {
        for (int m = 0; m < 2; ++m) {
          tab.mrr[a][b](n, m) = rd[a][n].dot(rd[b][m]);
          tab.m1r[a][b](n, m) = gd[a][n].dot(rd[b][m]);
        }
      }
    }
  }
  for (int b = 0; b < 2; ++b) {
    for (int m = 0; m < 2; ++m) {
      for (int j = 0; j < 2; ++j) {
        const VectorXcd mid = apply_grad(d.basis, d.q, j, rd[b][m]);
        for (int a = 0; a < 2; ++a) {
          for (int q = 0; q < 2; ++q) {
            tab.f[a][b][q][j][m] = rd[a][q].dot(mid);
          }
        }
      }
    }
  }
  return tab;
}

// closed form of the third-order table from the two constants gamma1, gamma2
// and chi; indices are zero-based
cplx expected_f(int a, int b, int q, int j, int m, double chi, double g1, double g2) {
  if (a == b) {
    if ((q + j + m) % 2 == 0) {
      return (q == 0 && j == 0 && m == 0) ? cplx(chi, 0.0) : cplx(-chi, 0.0);
    }
    return cplx(0.0, 0.0);
  }
  const int key = (q + 1) * 100 + (j + 1) * 10 + (m + 1);
  cplx v;
  switch (key) {
    case 111: v = cplx(2.0 * g1 + g2, 0.0); break;
    case 122: v = cplx(g1, 0.0); break;
    case 212: v = cplx(g2, 0.0); break;
    case 221: v = cplx(g1, 0.0); break;
    case 112: v = -I * g1; break;
    case 121: v = -I * g2; break;
    case 211: v = -I * g1; break;
    case 222: v = -I * (2.0 * g1 + g2); break;
    default: v = cplx(0.0, 0.0); break;
  }
  return (a == 0) ? v : std::conj(v);
}

void extract_trs(const Matrix2cd pat[2][2], cplx& t, cplx& s, cplx& r) {
  t = pat[0][0](0, 0);
  s = 0.5 * (sigma2() * pat[0][0]).trace();
  r = 0.25 * (dmat().adjoint() * pat[0][1]).trace();
}

double pattern_deviation(const Matrix2cd pat[2][2], double t, double s, double r) {
  const Matrix2cd eye = Matrix2cd::Identity();
  Matrix2cd pred[2][2];
  pred[0][0] = t * eye + s * sigma2();
  pred[1][1] = t * eye - s * sigma2();
  pred[0][1] = r * dmat();
  pred[1][0] = r * dmat().conjugate();
  double dev = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      dev = std::max(dev, (pat[a][b] - pred[a][b]).cwiseAbs().maxCoeff());
    }
  }
  return dev;
}

}  // namespace

EffectiveBlocks compute_blocks(const ReducedFamily& fam, const DiracData& d) {
  EffectiveBlocks blk;
  blk.kind = fam.kind;
  blk.m = fam.size();
  blk.v_F = d.vF;
  const int m = blk.m;

  std::vector<VectorXcd> hm(m);
  std::array<std::vector<VectorXcd>, 2> gr;
  gr[0].resize(m);
  gr[1].resize(m);
  for (int j = 0; j < m; ++j) {
    hm[j] = apply_h(d, fam.vectors[j]) - d.EF * fam.vectors[j];
    for (int dir = 0; dir < 2; ++dir) {
      gr[dir][j] = apply_grad(d.basis, d.q, dir, fam.vectors[j]);
    }
  }
  blk.full_S.resize(m, m);
  blk.full_M.resize(m, m);
  blk.full_L[0].resize(m, m);
  blk.full_L[1].resize(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      blk.full_S(i, j) = fam.vectors[i].dot(fam.vectors[j]);
      blk.full_M(i, j) = fam.vectors[i].dot(hm[j]);
      blk.full_L[0](i, j) = fam.vectors[i].dot(gr[0][j]);
      blk.full_L[1](i, j) = fam.vectors[i].dot(gr[1][j]);
    }
  }
  blk.full_S = 0.5 * (blk.full_S + blk.full_S.adjoint()).eval();
  blk.full_M = 0.5 * (blk.full_M + blk.full_M.adjoint()).eval();
  blk.full_L[0] = 0.5 * (blk.full_L[0] + blk.full_L[0].adjoint()).eval();
  blk.full_L[1] = 0.5 * (blk.full_L[1] + blk.full_L[1].adjoint()).eval();

  const int nc = m - 2;
  blk.gram_S = blk.full_S.block(2, 2, nc, nc);
  blk.energy_M = blk.full_M.block(2, 2, nc, nc);
  blk.coupling_T[0] = blk.full_L[0].block(0, 2, 2, nc);
  blk.coupling_T[1] = blk.full_L[1].block(0, 2, 2, nc);
  blk.velocity_L[0] = blk.full_L[0].block(2, 2, nc, nc);
  blk.velocity_L[1] = blk.full_L[1].block(2, 2, nc, nc);
  return blk;
}

ClosedFormConstants closed_form_constants(const DiracData& d) {
  const ConstantTables tab = bilinear_tables(d);
  cplx t, s, r, tp, sp, rp;
  extract_trs(tab.mrr, t, s, r);
  extract_trs(tab.m1r, tp, sp, rp);
  const cplx chi = tab.f[0][0][0][0][0];
  const cplx g1 = tab.f[0][1][0][1][1];
  const cplx g2 = tab.f[0][1][1][0][1];

  ClosedFormConstants c;
  c.t = t.real();
  c.s = s.real();
  c.r = r.real();
  c.tp = tp.real();
  c.sp = sp.real();
  c.rp = rp.real();
  c.chi = chi.real();
  c.gamma1 = g1.real();
  c.gamma2 = g2.real();

  double imax = 0.0;
  for (const cplx& z : {t, s, r, tp, sp, rp, chi, g1, g2}) {
    imax = std::max(imax, std::abs(z.imag()));
  }
  if (d.pair_index + 2 < int(d.E.size())) {
    const VectorXcd w3 = canonical_phase(d.U.col(d.pair_index + 2));
    const cplx vt = -I * d.w1.dot(apply_grad(d.basis, d.q, 0, w3));
    c.vtilde_F = vt.real();
    imax = std::max(imax, std::abs(vt.imag()));
  }
  c.max_imag_residual = imax;
  if (imax > 1e-6) {
    throw SymmetryViolation("closed-form constants carry an imaginary residue");
  }
  return c;
}

EffectiveBlocks predicted_blocks(FamilyKind kind, const ClosedFormConstants& c,
                                 double theta_k, double e3_minus_ef) {
  EffectiveBlocks blk;
  blk.kind = kind;
  const Matrix2cd eye = Matrix2cd::Identity();
  Matrix2cd m1rp[2][2];
  m1rp[0][0] = c.tp * eye + c.sp * sigma2();
  m1rp[1][1] = c.tp * eye - c.sp * sigma2();
  m1rp[0][1] = c.rp * dmat();
  m1rp[1][0] = c.rp * dmat().conjugate();

  if (kind == FamilyKind::F1k) {
    blk.m = 4;
    const cplx e2t = std::polar(1.0, 2.0 * theta_k);
    const cplx e1t = std::polar(1.0, theta_k);
    const Vector2d kh(std::cos(theta_k), std::sin(theta_k));
    blk.gram_S.resize(2, 2);
    blk.gram_S << c.t, c.r * e2t, c.r * std::conj(e2t), c.t;
    blk.energy_M.resize(2, 2);
    blk.energy_M << c.tp, c.rp * e2t, c.rp * std::conj(e2t), c.tp;
    blk.energy_M = -blk.energy_M;
    for (int j = 0; j < 2; ++j) {
      blk.coupling_T[j].resize(2, 2);
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          blk.coupling_T[j](a, b) = m1rp[a][b](j, 0) * kh[0] + m1rp[a][b](j, 1) * kh[1];
        }
      }
      blk.velocity_L[j].resize(2, 2);
      const double diag = (j == 0) ? c.chi * std::cos(2.0 * theta_k)
                                   : -c.chi * std::sin(2.0 * theta_k);
      blk.velocity_L[j](0, 0) = diag;
      blk.velocity_L[j](1, 1) = diag;
      const cplx base01 = 2.0 * c.gamma1 * std::conj(e1t) * kh[j];
      const cplx base10 = 2.0 * c.gamma1 * e1t * kh[j];
      const cplx g2term = (j == 0) ? cplx(c.gamma2, 0.0)
                                   : cplx(0.0, -c.gamma2);
      blk.velocity_L[j](0, 1) = base01 + g2term;
      blk.velocity_L[j](1, 0) = base10 + std::conj(g2term);
    }
    return blk;
  }

  if (kind == FamilyKind::F1) {
    blk.m = 6;
    blk.gram_S.resize(4, 4);
    blk.energy_M.resize(4, 4);
    Matrix2cd sblk[2][2];
    sblk[0][0] = c.t * eye + c.s * sigma2();
    sblk[1][1] = c.t * eye - c.s * sigma2();
    sblk[0][1] = c.r * dmat();
    sblk[1][0] = c.r * dmat().conjugate();
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        blk.gram_S.block(2 * a, 2 * b, 2, 2) = sblk[a][b];
        blk.energy_M.block(2 * a, 2 * b, 2, 2) = -m1rp[a][b];
      }
    }
    for (int j = 0; j < 2; ++j) {
      blk.coupling_T[j].resize(2, 4);
      blk.velocity_L[j].resize(4, 4);
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          for (int m = 0; m < 2; ++m) {
            blk.coupling_T[j](a, 2 * b + m) = m1rp[a][b](j, m);
            for (int n = 0; n < 2; ++n) {
              blk.velocity_L[j](2 * a + n, 2 * b + m) =
                  expected_f(a, b, n, j, m, c.chi, c.gamma1, c.gamma2);
            }
          }
        }
      }
    }
    return blk;
  }

  if (kind == FamilyKind::Fn) {
    blk.m = 3;
    blk.gram_S = MatrixXcd::Identity(1, 1);
    blk.energy_M = MatrixXcd::Constant(1, 1, e3_minus_ef);
    for (int j = 0; j < 2; ++j) {
      blk.coupling_T[j].resize(2, 1);
      blk.velocity_L[j] = MatrixXcd::Zero(1, 1);
    }
    blk.coupling_T[0](0, 0) = -c.vtilde_F * (-I);
    blk.coupling_T[1](0, 0) = -c.vtilde_F;
    blk.coupling_T[0](1, 0) = -c.vtilde_F * I;
    blk.coupling_T[1](1, 0) = -c.vtilde_F;
    return blk;
  }

  throw InvalidParameter("no closed form for the requested family kind");
}

ValidationReport validate_structure(const EffectiveBlocks& direct,
                                    const EffectiveBlocks& predicted) {
  if (direct.gram_S.rows() != predicted.gram_S.rows() ||
      direct.coupling_T[0].cols() != predicted.coupling_T[0].cols()) {
    throw InvalidInput("block shapes do not match");
  }
  ValidationReport rep;
  rep.dev_s = (direct.gram_S - predicted.gram_S).cwiseAbs().maxCoeff();
  rep.dev_m = (direct.energy_M - predicted.energy_M).cwiseAbs().maxCoeff();
  for (int j = 0; j < 2; ++j) {
    rep.dev_t = std::max(rep.dev_t,
                         (direct.coupling_T[j] - predicted.coupling_T[j]).cwiseAbs().maxCoeff());
    rep.dev_l = std::max(rep.dev_l,
                         (direct.velocity_L[j] - predicted.velocity_L[j]).cwiseAbs().maxCoeff());
  }
  return rep;
}

LemmaReport symmetry_lemma_checks(const DiracData& d) {
  const ConstantTables tab = bilinear_tables(d);
  cplx t, s, r, tp, sp, rp;
  extract_trs(tab.mrr, t, s, r);
  extract_trs(tab.m1r, tp, sp, rp);
  LemmaReport rep;
  rep.dev_two_der = pattern_deviation(tab.mrr, t.real(), s.real(), r.real());
  rep.dev_two_der_mix = pattern_deviation(tab.m1r, tp.real(), sp.real(), rp.real());
  const double chi = tab.f[0][0][0][0][0].real();
  const double g1 = tab.f[0][1][0][1][1].real();
  const double g2 = tab.f[0][1][1][0][1].real();
  const double g3 = tab.f[0][1][1][1][0].real();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int q = 0; q < 2; ++q) {
        for (int j = 0; j < 2; ++j) {
          for (int m = 0; m < 2; ++m) {
            const cplx dev = tab.f[a][b][q][j][m] - expected_f(a, b, q, j, m, chi, g1, g2);
            rep.dev_three_der = std::max(rep.dev_three_der, std::abs(dev));
          }
        }
      }
    }
  }
  rep.chi2_abs = std::abs((-I * tab.f[0][0][1][1][1]).real());
  rep.gamma13_abs = std::abs(g1 - g3);
  return rep;
}

EffectiveModel make_effective_model(const ReducedFamily& fam, const DiracData& d,
                                    double epsilon, int nu, const FourierField& V) {
  // epsilon 0 stays legal: the schur reduction has a well-defined limit there,
  // while the generalized assembly rejects it on its own
  if (epsilon < 0.0) throw InvalidParameter("scale ratio must be nonnegative");
  if (nu < 1) throw InvalidParameter("envelope cutoff must be at least 1");
  EffectiveModel model{compute_blocks(fam, d), fam, epsilon, nu, V, d.basis.lat};
  return model;
}

std::pair<MatrixXcd, MatrixXcd> assemble_effective(const EffectiveModel& model,
                                                   const Vector2d& k) {
  if (!(model.epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
  const MicroBasis mac{model.lat, model.nu};
  const int m = model.blocks.m;
  const int dim = mac.dim() * m;
  MatrixXcd a = MatrixXcd::Zero(dim, dim);
  MatrixXcd b = MatrixXcd::Zero(dim, dim);
  const double eps = model.epsilon;
  for (int im = 0; im < mac.dim(); ++im) {
    const Vector2d p = k + model.lat.dual(mac.mode(im));
    MatrixXcd blockA = model.blocks.full_M / eps + model.blocks.full_L[0] * p[0] +
                       model.blocks.full_L[1] * p[1] +
                       model.blocks.full_S * (0.5 * eps * p.squaredNorm());
    a.block(im * m, im * m, m, m) = blockA;
    b.block(im * m, im * m, m, m) = model.blocks.full_S;
  }
  const double inv_sq = 1.0 / model.lat.sqrt_area;
  for (const Mode& off : model.V.support()) {
    const cplx coupling = model.V.at(off) * inv_sq;
    for (int im = 0; im < mac.dim(); ++im) {
      const Mode tm = mac.mode(im) + off;
      if (!mac.contains(tm)) continue;
      a.block(mac.index(tm) * m, im * m, m, m) += model.blocks.full_S * coupling;
    }
  }
  return {std::move(a), std::move(b)};
}

EighComplex solve_effective(const EffectiveModel& model, const Vector2d& k, int n_bands) {
  auto [a, b] = assemble_effective(model, k);
  EighComplex out;
  const GenEighStatus st = eigh_gen(a, b, out);
  if (st == GenEighStatus::metric_not_pd) {
    throw DependentFamily("effective mass matrix is not positive definite");
  }
  if (st == GenEighStatus::no_convergence) {
    throw NumericalFailure("generalized eigensolver did not converge");
  }
  if (n_bands > 0 && n_bands < out.values.size()) {
    std::vector<int> idx(out.values.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
    std::sort(idx.begin(), idx.end(), [&](int i, int j) {
      const double ai = std::abs(out.values[i]);
      const double aj = std::abs(out.values[j]);
      return ai != aj ? ai < aj : i < j;
    });
    idx.resize(n_bands);
    std::sort(idx.begin(), idx.end(),
              [&](int i, int j) { return out.values[i] < out.values[j]; });
    VectorXd vals(n_bands);
    MatrixXcd vecs(out.vectors.rows(), n_bands);
    for (int i = 0; i < n_bands; ++i) {
      vals[i] = out.values[idx[i]];
      vecs.col(i) = out.vectors.col(idx[i]);
    }
    out.values = vals;
    out.vectors = vecs;
  }
  return out;
}

int count_eigenvalues_in_window(const EffectiveModel& model, const Vector2d& k,
                                double lo, double hi) {
  const EighComplex es = solve_effective(model, k);
  int count = 0;
  for (int i = 0; i < es.values.size(); ++i) {
    if (es.values[i] >= lo && es.values[i] <= hi) ++count;
  }
  return count;
}

SchurOperator schur_operator(const EffectiveModel& model, const Vector2d& k) {
  if (model.epsilon < 0.0) throw InvalidParameter("epsilon must be nonnegative");
  const MicroBasis mac{model.lat, model.nu};
  const int m = model.blocks.m;
  const int nc = m - 2;
  const double eps = model.epsilon;

  MatrixXcd minv;
  if (nc > 0) {
    const EighComplex es = eigh(MatrixXcd(model.blocks.energy_M));
    double amin = std::abs(es.values[0]);
    for (int i = 0; i < nc; ++i) amin = std::min(amin, std::abs(es.values[i]));
    if (amin < 1e-10) {
      throw ReductionUndefined("family energy block is numerically singular");
    }
    minv = es.vectors * es.values.cwiseInverse().asDiagonal() * es.vectors.adjoint();
  }

  SchurOperator op;
  op.h = MatrixXcd::Zero(2 * mac.dim(), 2 * mac.dim());
  op.reconstruction = MatrixXcd::Zero(m * mac.dim(), 2 * mac.dim());
  const Matrix2cd s1 = sigma1();
  const Matrix2cd s2 = sigma2();
  for (int im = 0; im < mac.dim(); ++im) {
    const Vector2d p = k + model.lat.dual(mac.mode(im));
    Matrix2cd blockH = model.blocks.v_F * (s1 * p[0] + s2 * p[1]) +
                       0.5 * eps * p.squaredNorm() * Matrix2cd::Identity();
    op.reconstruction.block(im * m, 2 * im, 2, 2) = Matrix2cd::Identity();
    if (nc > 0) {
      const MatrixXcd tp = model.blocks.coupling_T[0] * p[0] + model.blocks.coupling_T[1] * p[1];
      blockH -= eps * (tp * minv * tp.adjoint());
      op.reconstruction.block(im * m + 2, 2 * im, nc, 2) = -eps * (minv * tp.adjoint());
    }
    op.h.block(2 * im, 2 * im, 2, 2) = blockH;
  }
  const double inv_sq = 1.0 / model.lat.sqrt_area;
  for (const Mode& off : model.V.support()) {
    const cplx coupling = model.V.at(off) * inv_sq;
    for (int im = 0; im < mac.dim(); ++im) {
      const Mode tm = mac.mode(im) + off;
      if (!mac.contains(tm)) continue;
      op.h.block(2 * mac.index(tm), 2 * im, 2, 2) +=
          coupling * Matrix2cd::Identity();
    }
  }
  return op;
}

}  // namespace tsb
