#include "tsb/exact.hpp"

#include <algorithm>
#include <cmath>

namespace tsb {

namespace {

int support_radius(const FourierField& f) {
  int r = 0;
  for (const Mode& m : f.support()) {
    r = std::max({r, std::abs(m[0]), std::abs(m[1])});
  }
  return r;
}

EighComplex select_window(EighComplex es, const ExactWindow& window) {
  std::vector<int> idx;
  const int n = int(es.values.size());
  if (window.count > 0) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      const double ai = std::abs(es.values[i]);
      const double aj = std::abs(es.values[j]);
      return ai != aj ? ai < aj : i < j;
    });
    order.resize(std::min(window.count, n));
    idx = order;
    std::sort(idx.begin(), idx.end(),
              [&](int i, int j) { return es.values[i] < es.values[j]; });
  } else {
    for (int i = 0; i < n; ++i) {
      if (es.values[i] >= window.lo && es.values[i] <= window.hi) idx.push_back(i);
    }
  }
  EighComplex out;
  out.values.resize(idx.size());
  out.vectors.resize(es.vectors.rows(), idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    out.values[int(i)] = es.values[idx[i]];
    out.vectors.col(int(i)) = es.vectors.col(idx[i]);
  }
  return out;
}

}  // namespace

MatrixXcd assemble_exact(const ExactOperatorSpec& spec) {
  if (spec.inv_epsilon < 1) {
    throw InvalidParameter("inverse epsilon must be a positive integer");
  }
  const int r_mic = support_radius(spec.v_micro);
  if (spec.fine_cutoff < spec.inv_epsilon * r_mic) {
    throw ResolutionError("fine cutoff cannot hold the scaled micro support");
  }
  const MicroBasis fine{spec.lat, spec.fine_cutoff};
  const double eps = 1.0 / double(spec.inv_epsilon);
  const double inv_sq = 1.0 / spec.lat.sqrt_area;
  const int n = fine.dim();
  MatrixXcd h = MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Vector2d q = spec.lat.K + eps * (spec.k + spec.lat.dual(fine.mode(i)));
    h(i, i) = 0.5 * q.squaredNorm() - spec.E_F;
  }
  for (const Mode& m : spec.v_micro.support()) {
    const cplx c = spec.v_micro.at(m) * inv_sq;
    const Mode off = spec.inv_epsilon * m;
    for (int j = 0; j < n; ++j) {
      const Mode t = fine.mode(j) + off;
      if (!fine.contains(t)) continue;
      h(fine.index(t), j) += c;
    }
  }
  for (const Mode& m : spec.v_macro.support()) {
    const cplx c = eps * spec.v_macro.at(m) * inv_sq;
    for (int j = 0; j < n; ++j) {
      const Mode t = fine.mode(j) + m;
      if (!fine.contains(t)) continue;
      h(fine.index(t), j) += c;
    }
  }
  return h;
}

EighComplex solve_exact(const ExactOperatorSpec& spec, const ExactWindow& window,
                        int max_dim) {
  const int width = 2 * spec.fine_cutoff + 1;
  if (width * width > max_dim) {
    throw ResourceError("dense solve budget exceeded, reduce the fine cutoff");
  }
  return select_window(eigh_auto(assemble_exact(spec)), window);
}

DriftReport solve_exact_convergence(const ExactOperatorSpec& spec,
                                    const ExactWindow& window, int max_dim) {
  DriftReport rep;
  rep.base = solve_exact(spec, window, max_dim);
  ExactOperatorSpec refined = spec;
  refined.fine_cutoff = 2 * spec.fine_cutoff;
  rep.refined = solve_exact(refined, window, max_dim);
  const int n = int(std::min(rep.base.values.size(), rep.refined.values.size()));
  for (int i = 0; i < n; ++i) {
    rep.drift = std::max(rep.drift, std::abs(rep.base.values[i] - rep.refined.values[i]));
  }
  return rep;
}

std::vector<double> folded_reference(const ExactOperatorSpec& spec, int micro_cutoff) {
  if (spec.inv_epsilon < 1) {
    throw InvalidParameter("inverse epsilon must be a positive integer");
  }
  if (!spec.v_macro.support().empty()) {
    throw InvalidInput("folding oracle requires a vanishing macro potential");
  }
  const MicroBasis basis{spec.lat, micro_cutoff};
  const double eps = 1.0 / double(spec.inv_epsilon);
  std::vector<double> out;
  out.reserve(size_t(spec.inv_epsilon) * spec.inv_epsilon * basis.dim());
  for (int m0 = 0; m0 < spec.inv_epsilon; ++m0) {
    for (int m1 = 0; m1 < spec.inv_epsilon; ++m1) {
      const Vector2d q = spec.lat.K + eps * (spec.k + spec.lat.dual({m0, m1}));
      const EighComplex es = eigh_auto(assemble_h_q(basis, q, spec.v_micro));
      for (int i = 0; i < es.values.size(); ++i) out.push_back(es.values[i] - spec.E_F);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<FoldedClass> folded_classes(const Lattice& lat, const FourierField& v,
                                        int micro_cutoff, int inv_eps,
                                        const Vector2d& k, int keep_bands,
                                        int mode_clip,
                                        const std::vector<Mode>* residue_filter) {
  if (inv_eps < 1) throw InvalidParameter("inverse epsilon must be a positive integer");
  const MicroBasis basis{lat, micro_cutoff};
  const double eps = 1.0 / double(inv_eps);
  const int h = inv_eps / 2;
  std::vector<FoldedClass> out;
  for (int r0 = -h; r0 < inv_eps - h; ++r0) {
    for (int r1 = -h; r1 < inv_eps - h; ++r1) {
      if (residue_filter != nullptr) {
        const Mode r{r0, r1};
        bool wanted = false;
        for (const Mode& f : *residue_filter) wanted = wanted || (f == r);
        if (!wanted) continue;
      }
      FoldedClass cls;
      cls.residue = {r0, r1};
      cls.q = lat.K + eps * (k + lat.dual(cls.residue));
      std::vector<int> keep_idx;
      for (int i = 0; i < basis.dim(); ++i) {
        const Mode p = basis.mode(i);
        if (mode_clip >= 0) {
          const int n0 = r0 + inv_eps * p[0];
          const int n1 = r1 + inv_eps * p[1];
          if (std::max(std::abs(n0), std::abs(n1)) > mode_clip) continue;
        }
        keep_idx.push_back(i);
        cls.modes.push_back(p);
      }
      const MatrixXcd hq = assemble_h_q(basis, cls.q, v);
      MatrixXcd sub(keep_idx.size(), keep_idx.size());
      for (size_t i = 0; i < keep_idx.size(); ++i) {
        for (size_t j = 0; j < keep_idx.size(); ++j) {
          sub(int(i), int(j)) = hq(keep_idx[i], keep_idx[j]);
        }
      }
      const EighComplex es = eigh_auto(sub);
      const int nb = std::min<int>(keep_bands, int(es.values.size()));
      cls.E = es.values.head(nb);
      cls.U = es.vectors.leftCols(nb);
      out.push_back(std::move(cls));
    }
  }
  return out;
}

FoldedGalerkin build_folded_galerkin(const Lattice& lat, const FourierField& v_micro,
                                     int micro_cutoff, int inv_eps, const Vector2d& k,
                                     int keep_bands, const std::vector<Mode>& macro_modes,
                                     int mode_clip) {
  FoldedGalerkin g;
  g.lat = lat;
  g.inv_eps = inv_eps;
  g.micro_cutoff = micro_cutoff;
  g.classes = folded_classes(lat, v_micro, micro_cutoff, inv_eps, k, keep_bands, mode_clip);
  g.offset.assign(1, 0);
  for (const FoldedClass& c : g.classes) {
    g.offset.push_back(g.offset.back() + int(c.E.size()));
  }
  g.dim = g.offset.back();

  const int h = inv_eps / 2;
  std::map<Mode, int> residue_index;
  for (size_t i = 0; i < g.classes.size(); ++i) {
    residue_index[g.classes[i].residue] = int(i);
  }
  const auto wrap = [&](int x) { return ((x + h) % inv_eps + inv_eps) % inv_eps - h; };
  for (const Mode& m : macro_modes) {
    std::vector<std::tuple<int, int, MatrixXcd>> blocks;
    for (size_t si = 0; si < g.classes.size(); ++si) {
      const FoldedClass& src = g.classes[si];
      const Mode t = src.residue + m;
      const Mode tt = {wrap(t[0]), wrap(t[1])};
      const Mode carry = {(t[0] - tt[0]) / inv_eps, (t[1] - tt[1]) / inv_eps};
      const FoldedClass& tgt = g.classes[residue_index.at(tt)];
      std::map<Mode, int> tgt_idx;
      for (size_t i = 0; i < tgt.modes.size(); ++i) tgt_idx[tgt.modes[i]] = int(i);
      MatrixXcd shifted = MatrixXcd::Zero(tgt.modes.size(), src.U.cols());
      for (size_t ip = 0; ip < src.modes.size(); ++ip) {
        const auto it = tgt_idx.find(src.modes[ip] + carry);
        if (it == tgt_idx.end()) continue;
        shifted.row(it->second) = src.U.row(int(ip));
      }
      blocks.emplace_back(residue_index.at(tt), int(si), tgt.U.adjoint() * shifted);
    }
    g.coupling[m] = std::move(blocks);
  }
  return g;
}

MatrixXcd assemble_folded(const FoldedGalerkin& g, const FourierField& v_macro,
                          double E_F) {
  MatrixXcd hf = MatrixXcd::Zero(g.dim, g.dim);
  for (size_t i = 0; i < g.classes.size(); ++i) {
    const FoldedClass& c = g.classes[i];
    for (int b = 0; b < int(c.E.size()); ++b) {
      hf(g.offset[i] + b, g.offset[i] + b) = c.E[b] - E_F;
    }
  }
  const double eps = 1.0 / double(g.inv_eps);
  const double inv_sq = 1.0 / g.lat.sqrt_area;
  for (const Mode& m : v_macro.support()) {
    const auto it = g.coupling.find(m);
    if (it == g.coupling.end()) {
      throw ResolutionError("macro mode missing from the folded coupling table");
    }
    const cplx factor = eps * v_macro.at(m) * inv_sq;
    for (const auto& [ti, si, blk] : it->second) {
      hf.block(g.offset[ti], g.offset[si], blk.rows(), blk.cols()) += factor * blk;
    }
  }
  return hf;
}

SparseVec folded_state_to_fine(const FoldedGalerkin& g, const VectorXcd& coef) {
  SparseVec out;
  for (size_t i = 0; i < g.classes.size(); ++i) {
    const FoldedClass& c = g.classes[i];
    const VectorXcd amp = c.U * coef.segment(g.offset[i], int(c.E.size()));
    for (size_t ip = 0; ip < c.modes.size(); ++ip) {
      const cplx v = amp[int(ip)];
      if (std::abs(v) < 1e-16) continue;
      const Mode p = c.modes[ip];
      out[{c.residue[0] + g.inv_eps * p[0], c.residue[1] + g.inv_eps * p[1]}] += v;
    }
  }
  return out;
}

SparseVec class_state_to_fine(const FoldedClass& cls, int col, int inv_eps) {
  SparseVec out;
  for (size_t ip = 0; ip < cls.modes.size(); ++ip) {
    const cplx v = cls.U(int(ip), col);
    if (std::abs(v) < 1e-16) continue;
    const Mode p = cls.modes[ip];
    out[{cls.residue[0] + inv_eps * p[0], cls.residue[1] + inv_eps * p[1]}] += v;
  }
  return out;
}

}  // namespace tsb
