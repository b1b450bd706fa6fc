#include "tsb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tsb {

namespace {

int linf(Mode m) { return std::max(std::abs(m[0]), std::abs(m[1])); }

// largest index max-norm carrying weight in any family vector
int family_support_radius(const ReducedFamily& fam) {
  int r = 0;
  for (const VectorXcd& w : fam.vectors) {
    for (int i = 0; i < w.size(); ++i) {
      if (std::abs(w[i]) > 0.0) r = std::max(r, linf(fam.basis.mode(i)));
    }
  }
  return r;
}

MatrixXcd family_matrix(const ReducedFamily& fam) {
  MatrixXcd w(fam.basis.dim(), fam.size());
  for (int a = 0; a < fam.size(); ++a) w.col(a) = fam.vectors[size_t(a)];
  return w;
}

FourierField zero_field(const Lattice& lat) { return FourierField(lat, 0); }

// overlap row <phi, J alpha_j> for every effective basis state of a model:
// entry l = sum_p conj(phi[m + inv_eps p]) psi_a[p] / sqrt_area, so the value
// for an envelope alpha is the plain dot of this row with alpha
VectorXcd overlap_row(const ReducedFamily& fam, int nu, int inv_eps,
                      const SparseVec& phi) {
  const MicroBasis mac{fam.basis.lat, nu};
  const int m_fam = fam.size();
  const double sq = fam.basis.lat.sqrt_area;
  VectorXcd t = VectorXcd::Zero(mac.dim() * m_fam);
  for (int im = 0; im < mac.dim(); ++im) {
    const Mode m = mac.mode(im);
    for (int a = 0; a < m_fam; ++a) {
      const VectorXcd& w = fam.vectors[size_t(a)];
      cplx acc(0.0, 0.0);
      for (int ip = 0; ip < w.size(); ++ip) {
        if (w[ip] == cplx(0.0, 0.0)) continue;
        const auto it = phi.find(m + inv_eps * fam.basis.mode(ip));
        if (it == phi.end()) continue;
        acc += std::conj(it->second) * w[ip];
      }
      t[im * m_fam + a] = acc / sq;
    }
  }
  return t;
}

bool directional_kind(FamilyKind kind) {
  return kind == FamilyKind::F1k || kind == FamilyKind::F2k;
}

// per-sample unit directions along a path; zero-momentum samples borrow the
// nearest defined direction and are reported back as flagged
std::vector<Vector2d> path_directions(const KPath& path, std::vector<int>* flagged) {
  const int ns = int(path.k.size());
  std::vector<Vector2d> dirs(size_t(ns), Vector2d::Zero());
  std::vector<int> bad;
  for (int i = 0; i < ns; ++i) {
    const double nk = path.k[size_t(i)].norm();
    if (nk > 1e-12) {
      dirs[size_t(i)] = path.k[size_t(i)] / nk;
    } else {
      bad.push_back(i);
    }
  }
  for (int i : bad) {
    for (int off = 1; off < ns; ++off) {
      const int lo = i - off, hi = i + off;
      if (hi < ns && path.k[size_t(hi)].norm() > 1e-12) {
        dirs[size_t(i)] = path.k[size_t(hi)] / path.k[size_t(hi)].norm();
        break;
      }
      if (lo >= 0 && path.k[size_t(lo)].norm() > 1e-12) {
        dirs[size_t(i)] = path.k[size_t(lo)] / path.k[size_t(lo)].norm();
        break;
      }
    }
    if (dirs[size_t(i)].norm() < 0.5) dirs[size_t(i)] = Vector2d(1.0, 0.0);
  }
  if (flagged != nullptr) *flagged = bad;
  return dirs;
}

ReducedFamily family_for(FamilyKind kind, const DiracData& d, const Vector2d& dir,
                         int n_fn) {
  if (directional_kind(kind)) return build_family(kind, d, &dir, n_fn);
  return build_family(kind, d, nullptr, n_fn);
}

// overlap matrix between stored states expressed over two corrector bases:
// rows index columns of `prev`, columns index columns of `cur`; the cross
// gram x = w_prev^H w_cur contracts the family slots per macro block
MatrixXcd cross_overlap(const MatrixXcd& prev, const MatrixXcd& cur,
                        const MatrixXcd& x, int n_mac) {
  const int m = int(x.rows());
  MatrixXcd o = MatrixXcd::Zero(prev.cols(), cur.cols());
  for (int im = 0; im < n_mac; ++im) {
    o += prev.middleRows(im * m, m).adjoint() * x * cur.middleRows(im * m, m);
  }
  return o;
}

// greedy row-wise assignment by largest magnitude, no column reuse
std::vector<int> greedy_match(const MatrixXcd& o, double* min_abs) {
  std::vector<int> pick(size_t(o.rows()), -1);
  std::vector<bool> used(size_t(o.cols()), false);
  for (int i = 0; i < o.rows(); ++i) {
    int best = -1;
    double bv = -1.0;
    for (int j = 0; j < o.cols(); ++j) {
      if (used[size_t(j)]) continue;
      const double v = std::abs(o(i, j));
      if (v > bv) {
        bv = v;
        best = j;
      }
    }
    pick[size_t(i)] = best;
    used[size_t(best)] = true;
    if (min_abs != nullptr) *min_abs = std::min(*min_abs, bv);
  }
  return pick;
}

struct ExactCandidate {
  SparseVec state;   // unit fine coefficients
  double energy;     // direct scale, fermi level subtracted
};

}  // namespace

SparseVec reconstruct(const ReducedFamily& fam, const VectorXcd& envelope,
                      int inv_eps, int nu, int fine_cutoff, bool normalized) {
  if (inv_eps < 1) throw InvalidParameter("inverse epsilon must be a positive integer");
  if (nu < 0) throw InvalidParameter("macro cutoff must be non-negative");
  if (fam.size() < 2) throw InvalidInput("family must contain the gauged pair");
  const MicroBasis mac{fam.basis.lat, nu};
  const int m_fam = fam.size();
  if (envelope.size() != mac.dim() * m_fam) {
    throw InvalidInput("envelope length does not match the macro layout");
  }
  const int need = nu + inv_eps * family_support_radius(fam);
  if (fine_cutoff < need) {
    throw ResolutionError("fine basis cannot hold all reconstruction modes");
  }
  const double sq = fam.basis.lat.sqrt_area;
  SparseVec out;
  for (int im = 0; im < mac.dim(); ++im) {
    const Mode m = mac.mode(im);
    for (int a = 0; a < m_fam; ++a) {
      const cplx amp = envelope[im * m_fam + a];
      if (amp == cplx(0.0, 0.0)) continue;
      const VectorXcd& w = fam.vectors[size_t(a)];
      for (int ip = 0; ip < w.size(); ++ip) {
        if (w[ip] == cplx(0.0, 0.0)) continue;
        out[m + inv_eps * fam.basis.mode(ip)] += amp * w[ip] / sq;
      }
    }
  }
  if (normalized) {
    const double nn = sparse_norm(out);
    if (nn < 1e-300) throw InvalidInput("cannot normalize a zero reconstruction");
    for (auto& kv : out) kv.second /= nn;
  }
  return out;
}

double sparse_norm(const SparseVec& a) {
  double s = 0.0;
  for (const auto& kv : a) s += std::norm(kv.second);
  return std::sqrt(s);
}

cplx sparse_inner(const SparseVec& a, const SparseVec& b) {
  const SparseVec& small = (a.size() <= b.size()) ? a : b;
  const SparseVec& large = (a.size() <= b.size()) ? b : a;
  const bool small_is_a = (a.size() <= b.size());
  cplx s(0.0, 0.0);
  for (const auto& kv : small) {
    const auto it = large.find(kv.first);
    if (it == large.end()) continue;
    s += small_is_a ? std::conj(kv.second) * it->second
                    : std::conj(it->second) * kv.second;
  }
  return s;
}

double eigvec_distance(const SparseVec& psi, const SparseVec& phi) {
  const double np = sparse_norm(psi), nf = sparse_norm(phi);
  if (np < 1e-300 || nf < 1e-300) throw InvalidInput("ray distance of a zero vector");
  const double theta = std::arg(sparse_inner(phi, psi));
  const cplx rot = std::polar(1.0, theta);
  double s = 0.0;
  std::set<Mode> keys;
  for (const auto& kv : psi) keys.insert(kv.first);
  for (const auto& kv : phi) keys.insert(kv.first);
  for (const Mode& m : keys) {
    cplx va(0.0, 0.0), vb(0.0, 0.0);
    const auto ia = psi.find(m);
    if (ia != psi.end()) va = ia->second / np;
    const auto ib = phi.find(m);
    if (ib != phi.end()) vb = ib->second / nf;
    s += std::norm(va - rot * vb);
  }
  return std::sqrt(s);
}

double eigvec_distance(const VectorXcd& psi, const VectorXcd& phi) {
  const double np = psi.norm(), nf = phi.norm();
  if (np < 1e-300 || nf < 1e-300) throw InvalidInput("ray distance of a zero vector");
  const cplx ip = (phi / nf).dot(psi / np);  // <phi, psi>
  const cplx rot = std::polar(1.0, std::arg(ip));
  return (psi / np - rot * (phi / nf)).norm();
}

PairDistance pair_distance(const std::array<SparseVec, 2>& exact_states,
                           const std::array<SparseVec, 2>& model_states) {
  std::array<double, 2> ne{}, nm{};
  for (int i = 0; i < 2; ++i) {
    ne[size_t(i)] = sparse_norm(exact_states[size_t(i)]);
    nm[size_t(i)] = sparse_norm(model_states[size_t(i)]);
    if (ne[size_t(i)] < 1e-300 || nm[size_t(i)] < 1e-300) {
      throw InvalidInput("pair distance of a zero vector");
    }
  }
  Eigen::Matrix2cd o;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      o(i, j) = sparse_inner(exact_states[size_t(i)], model_states[size_t(j)]) /
                (ne[size_t(i)] * nm[size_t(j)]);
    }
  }
  // singular pairing aligns the two rays inside the near-degenerate subspaces
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(o, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix2cd u = svd.matrixU();
  const Eigen::Matrix2cd v = svd.matrixV();
  PairDistance out;
  out.smin = svd.singularValues()(1);
  std::array<double, 2> ds{};
  for (int s = 0; s < 2; ++s) {
    SparseVec pa, ja;
    for (int i = 0; i < 2; ++i) {
      const cplx cu = u(i, s);
      for (const auto& kv : exact_states[size_t(i)]) {
        pa[kv.first] += cu * kv.second / ne[size_t(i)];
      }
      const cplx cv = v(i, s);
      for (const auto& kv : model_states[size_t(i)]) {
        ja[kv.first] += cv * kv.second / nm[size_t(i)];
      }
    }
    const double theta = std::arg(sparse_inner(pa, ja));
    const cplx rot = std::polar(1.0, -theta);
    std::set<Mode> keys;
    for (const auto& kv : pa) keys.insert(kv.first);
    for (const auto& kv : ja) keys.insert(kv.first);
    double acc = 0.0;
    for (const Mode& m : keys) {
      cplx va(0.0, 0.0), vb(0.0, 0.0);
      const auto ia = pa.find(m);
      if (ia != pa.end()) va = ia->second;
      const auto ib = ja.find(m);
      if (ib != ja.end()) vb = ib->second;
      acc += std::norm(va - rot * vb);
    }
    ds[size_t(s)] = std::sqrt(acc);
  }
  out.d1 = ds[0];
  out.d2 = ds[1];
  return out;
}

BandDiagram band_diagram_effective(const DiracData& d, FamilyKind kind, int n_fn,
                                   double epsilon, int nu, const FourierField& V,
                                   const KPath& path, int n_track, bool schur) {
  if (path.k.empty()) throw InvalidInput("empty path");
  BandDiagram bd;
  bd.path = path;
  bd.source = schur ? "schur" : "effective";
  const int ns = int(path.k.size());
  const bool moving = directional_kind(kind);
  const std::vector<Vector2d> dirs = path_directions(path, &bd.flagged_samples);
  if (!moving) bd.flagged_samples.clear();

  ReducedFamily fam0 = family_for(kind, d, dirs[0], n_fn);
  const MicroBasis mac{d.basis.lat, nu};

  MatrixXcd prev_states;   // tracked columns
  MatrixXcd prev_w;        // corrector basis of the tracked columns
  std::vector<int> order;  // tracked band identities, fixed after sample 0
  bd.energies.resize(size_t(ns));

  for (int is = 0; is < ns; ++is) {
    const ReducedFamily fam = moving ? family_for(kind, d, dirs[size_t(is)], n_fn) : fam0;
    const EffectiveModel model = make_effective_model(fam, d, epsilon, nu, V);
    EighComplex es;
    if (schur) {
      es = eigh(schur_operator(model, path.k[size_t(is)]).h);
    } else {
      es = solve_effective(model, path.k[size_t(is)]);
    }
    bd.energies[size_t(is)] = es.values;
    const int nt = std::min<int>(n_track, int(es.values.size()));
    const MatrixXcd w = schur ? MatrixXcd::Identity(2, 2) : family_matrix(fam);

    if (is == 0) {
      // seed with the nt levels nearest zero, kept in ascending order
      std::vector<int> idx(size_t(es.values.size()));
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
      std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(es.values[a]) < std::abs(es.values[b]);
      });
      idx.resize(size_t(nt));
      std::sort(idx.begin(), idx.end());
      bd.tracked.assign(size_t(nt), {});
      prev_states.resize(es.vectors.rows(), nt);
      for (int b = 0; b < nt; ++b) {
        bd.tracked[size_t(b)].push_back(es.values[idx[size_t(b)]]);
        prev_states.col(b) = es.vectors.col(idx[size_t(b)]);
      }
      prev_w = w;
      continue;
    }

    const int n_mac = schur ? int(prev_states.rows() / 2)
                            : int(prev_states.rows() / prev_w.cols());
    const MatrixXcd x = schur ? MatrixXcd(MatrixXcd::Identity(2, 2))
                              : MatrixXcd(prev_w.adjoint() * w);
    const MatrixXcd o = cross_overlap(prev_states, es.vectors, x, n_mac);
    double mo = bd.min_tracking_overlap;
    const std::vector<int> pick = greedy_match(o, &mo);
    bd.min_tracking_overlap = mo;
    MatrixXcd nxt(es.vectors.rows(), nt);
    for (int b = 0; b < nt; ++b) {
      bd.tracked[size_t(b)].push_back(es.values[pick[size_t(b)]]);
      nxt.col(b) = es.vectors.col(pick[size_t(b)]);
    }
    prev_states = nxt;
    prev_w = w;
  }
  return bd;
}

BandDiagram band_diagram_exact(const ExactOperatorSpec& base, const KPath& path,
                               int n_track, int max_dim) {
  if (path.k.empty()) throw InvalidInput("empty path");
  BandDiagram bd;
  bd.path = path;
  bd.source = "exact";
  const int ns = int(path.k.size());
  bd.energies.resize(size_t(ns));
  MatrixXcd prev_states;
  for (int is = 0; is < ns; ++is) {
    ExactOperatorSpec spec = base;
    spec.k = path.k[size_t(is)];
    ExactWindow win;
    win.count = n_track;
    const EighComplex es = solve_exact(spec, win, max_dim);
    bd.energies[size_t(is)] = es.values;
    const int nt = int(es.values.size());
    if (is == 0) {
      bd.tracked.assign(size_t(nt), {});
      for (int b = 0; b < nt; ++b) bd.tracked[size_t(b)].push_back(es.values[b]);
      prev_states = es.vectors;
      continue;
    }
    const MatrixXcd o = prev_states.adjoint() * es.vectors;
    double mo = bd.min_tracking_overlap;
    const std::vector<int> pick = greedy_match(o, &mo);
    bd.min_tracking_overlap = mo;
    MatrixXcd nxt(es.vectors.rows(), pick.size());
    for (size_t b = 0; b < pick.size(); ++b) {
      bd.tracked[b].push_back(es.values[pick[b]]);
      nxt.col(int(b)) = es.vectors.col(pick[b]);
    }
    prev_states = nxt;
  }
  return bd;
}

BandDiagram band_diagram_folded(const ExactOperatorSpec& base, const KPath& path,
                                int micro_cutoff, int n_keep) {
  if (path.k.empty()) throw InvalidInput("empty path");
  BandDiagram bd;
  bd.path = path;
  bd.source = "folded";
  bd.energies.resize(path.k.size());
  for (size_t is = 0; is < path.k.size(); ++is) {
    ExactOperatorSpec spec = base;
    spec.k = path.k[is];
    std::vector<double> ev = folded_reference(spec, micro_cutoff);
    std::sort(ev.begin(), ev.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    });
    ev.resize(size_t(std::min<int>(n_keep, int(ev.size()))));
    std::sort(ev.begin(), ev.end());
    bd.energies[is] = Eigen::Map<VectorXd>(ev.data(), long(ev.size()));
  }
  return bd;
}

BranchStats compare_dirac_branch(const DiracData& d, const FourierField& v_micro,
                                 FamilyKind kind, int n_fn, int inv_eps, int nu,
                                 const FourierField& v_macro, const KPath& path,
                                 int keep_bands) {
  if (inv_eps < 1) throw InvalidParameter("inverse epsilon must be a positive integer");
  if (path.k.empty()) throw InvalidInput("empty path");
  const Lattice& lat = d.basis.lat;
  const double eps = 1.0 / double(inv_eps);
  const int ns = int(path.k.size());
  const bool moving = directional_kind(kind);
  const MicroBasis mac{lat, nu};

  BranchStats st;
  std::vector<int> flagged;
  const std::vector<Vector2d> dirs = path_directions(path, &flagged);

  // effective side: solve everywhere, then continue the pair outward from the
  // sample closest to the cone momentum
  std::vector<ReducedFamily> fams;
  std::vector<EighComplex> eff(static_cast<size_t>(ns));
  ReducedFamily fam_fixed;
  if (!moving) fam_fixed = family_for(kind, d, dirs[0], n_fn);
  for (int is = 0; is < ns; ++is) {
    const ReducedFamily& fam =
        moving ? fams.emplace_back(family_for(kind, d, dirs[size_t(is)], n_fn))
               : fam_fixed;
    const EffectiveModel model = make_effective_model(fam, d, eps, nu, v_macro);
    eff[size_t(is)] = solve_effective(model, path.k[size_t(is)]);
  }
  const auto fam_at = [&](int is) -> const ReducedFamily& {
    return moving ? fams[size_t(is)] : fam_fixed;
  };
  const int m_fam = fam_at(0).size();

  int anchor = 0;
  for (int is = 1; is < ns; ++is) {
    if (path.k[size_t(is)].norm() < path.k[size_t(anchor)].norm()) anchor = is;
  }

  std::vector<MatrixXcd> pair_states(size_t(ns));
  std::vector<std::array<double, 2>> pair_e(size_t(ns));
  {
    const EighComplex& es = eff[size_t(anchor)];
    std::vector<int> idx(size_t(es.values.size()));
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return std::abs(es.values[a]) < std::abs(es.values[b]);
    });
    idx.resize(2);
    std::sort(idx.begin(), idx.end());
    MatrixXcd p(es.vectors.rows(), 2);
    p.col(0) = es.vectors.col(idx[0]);
    p.col(1) = es.vectors.col(idx[1]);
    pair_states[size_t(anchor)] = p;
    pair_e[size_t(anchor)] = {es.values[idx[0]], es.values[idx[1]]};
  }
  const auto continue_to = [&](int from, int to) {
    const MatrixXcd x = family_matrix(fam_at(from)).adjoint() * family_matrix(fam_at(to));
    const MatrixXcd o =
        cross_overlap(pair_states[size_t(from)], eff[size_t(to)].vectors, x, mac.dim());
    double mo = 1.0;
    const std::vector<int> pick = greedy_match(o, &mo);
    MatrixXcd p(eff[size_t(to)].vectors.rows(), 2);
    for (int b = 0; b < 2; ++b) {
      p.col(b) = eff[size_t(to)].vectors.col(pick[size_t(b)]);
      pair_e[size_t(to)][size_t(b)] = eff[size_t(to)].values[pick[size_t(b)]];
    }
    pair_states[size_t(to)] = p;
  };
  for (int is = anchor + 1; is < ns; ++is) continue_to(is - 1, is);
  for (int is = anchor - 1; is >= 0; --is) continue_to(is + 1, is);

  // exact-side candidates per sample
  const bool v0 = v_macro.support().empty();
  std::vector<Mode> filter;
  if (v0) {
    const int h = inv_eps / 2;
    const auto wrap = [&](int x) { return ((x + h) % inv_eps + inv_eps) % inv_eps - h; };
    std::set<Mode> rs;
    for (int im = 0; im < mac.dim(); ++im) {
      const Mode m = mac.mode(im);
      rs.insert({wrap(m[0]), wrap(m[1])});
    }
    filter.assign(rs.begin(), rs.end());
  }

  const int fine_cut = nu + inv_eps * d.basis.cutoff;
  double sum_de = 0.0, max_de = 0.0, sum_dist = 0.0;
  for (int is = 0; is < ns; ++is) {
    std::vector<ExactCandidate> cands;
    if (v0) {
      const std::vector<FoldedClass> classes = folded_classes(
          lat, v_micro, d.basis.cutoff, inv_eps, path.k[size_t(is)], 2, -1, &filter);
      for (const FoldedClass& cls : classes) {
        for (int b = 0; b < int(cls.E.size()); ++b) {
          const double ev = cls.E[b] - d.EF;
          if (std::abs(double(inv_eps) * ev) > 0.6) continue;
          cands.push_back({class_state_to_fine(cls, b, inv_eps), ev});
        }
      }
    } else {
      const FoldedGalerkin g =
          build_folded_galerkin(lat, v_micro, d.basis.cutoff, inv_eps,
                                path.k[size_t(is)], keep_bands, v_macro.support());
      const MatrixXcd h = assemble_folded(g, v_macro, d.EF);
      double supv = 0.0;
      for (const Mode& m : v_macro.support()) {
        supv += std::abs(v_macro.at(m)) / lat.sqrt_area;
      }
      double wl = 1.5 * eps + eps * supv;
      EighComplex es;
      for (int attempt = 0; attempt < 4; ++attempt) {
        es = eigh_select(h, -wl, wl);
        if (es.values.size() >= 2) break;
        wl *= 2.0;
      }
      for (int j = 0; j < int(es.values.size()); ++j) {
        cands.push_back({folded_state_to_fine(g, es.vectors.col(j)), es.values[j]});
      }
    }
    if (cands.size() < 2) {
      st.excluded.push_back(is);
      continue;
    }

    std::array<SparseVec, 2> jrec;
    std::array<double, 2> nj{};
    for (int a = 0; a < 2; ++a) {
      VectorXcd col = pair_states[size_t(is)].col(a);
      jrec[size_t(a)] = reconstruct(fam_at(is), col, inv_eps, nu, fine_cut);
      nj[size_t(a)] = sparse_norm(jrec[size_t(a)]);
    }

    std::array<int, 2> match{-1, -1};
    std::array<double, 2> ov{};
    std::vector<bool> used(cands.size(), false);
    for (int a = 0; a < 2; ++a) {
      double best = -1.0;
      for (size_t c = 0; c < cands.size(); ++c) {
        if (used[c]) continue;
        const double val = std::abs(sparse_inner(cands[c].state, jrec[size_t(a)]));
        if (val > best) {
          best = val;
          match[size_t(a)] = int(c);
        }
      }
      used[size_t(match[size_t(a)])] = true;
      ov[size_t(a)] = best / std::max(nj[size_t(a)], 1e-300);
    }
    const double mov = std::min(ov[0], ov[1]);
    if (mov < 0.1) {
      st.excluded.push_back(is);
      continue;
    }

    const double de =
        0.5 * (std::abs(pair_e[size_t(is)][0] -
                        double(inv_eps) * cands[size_t(match[0])].energy) +
               std::abs(pair_e[size_t(is)][1] -
                        double(inv_eps) * cands[size_t(match[1])].energy));
    const PairDistance pd = pair_distance(
        {cands[size_t(match[0])].state, cands[size_t(match[1])].state},
        {jrec[0], jrec[1]});
    st.samples.push_back(is);
    st.abs_de.push_back(de);
    st.dist.push_back(pd.mean());
    st.overlap.push_back(mov);
    sum_de += de;
    max_de = std::max(max_de, de);
    sum_dist += pd.mean();
  }
  if (!st.samples.empty()) {
    st.mean_abs_de = sum_de / double(st.samples.size());
    st.max_abs_de = max_de;
    st.mean_dist = sum_dist / double(st.samples.size());
  }
  return st;
}

std::string family_label(FamilyKind kind, int n) {
  switch (kind) {
    case FamilyKind::F0: return "F0";
    case FamilyKind::F1k: return "F1k";
    case FamilyKind::F1: return "F1";
    case FamilyKind::F2k: return "F2k";
    case FamilyKind::F2: return "F2";
    case FamilyKind::Fn: return "F" + std::to_string(n);
  }
  return "F?";
}

double fit_loglog_slope(const std::vector<double>& grid, const std::vector<double>& dist,
                        double lo, double hi) {
  if (grid.size() != dist.size()) throw InvalidInput("slope fit needs matched arrays");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < lo * (1.0 - 1e-12) || grid[i] > hi * (1.0 + 1e-12)) continue;
    if (dist[i] <= 0.0) continue;
    const double x = std::log(grid[i]);
    const double y = std::log(dist[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw InvalidInput("slope fit window holds fewer than two points");
  const double det = double(n) * sxx - sx * sx;
  return (double(n) * sxy - sx * sy) / det;
}

std::pair<double, double> default_fit_window(const std::vector<double>& grid) {
  std::vector<double> g = grid;
  std::sort(g.begin(), g.end());
  if (g.size() < 4) throw InvalidInput("fit window needs at least four grid points");
  // drop the two smallest points, then keep at most the top decade
  const double hi = g.back();
  const double lo = std::max(g[2], hi / 10.0);
  return {lo, hi};
}

std::vector<ErrorCurve> asymptotics_mu(const DiracData& d, const FourierField& v_micro,
                                       const std::vector<std::pair<FamilyKind, int>>& kinds,
                                       const std::vector<double>& mu_grid, int inv_eps,
                                       int nu,
                                       std::optional<std::pair<double, double>> fit_window) {
  if (inv_eps < 1) throw InvalidParameter("inverse epsilon must be a positive integer");
  const Lattice& lat = d.basis.lat;
  const double eps = 1.0 / double(inv_eps);
  const Vector2d dir = lat.K / lat.K.norm();  // one direction for the whole sweep
  const FourierField vz = zero_field(lat);
  const int fine_cut = nu + inv_eps * d.basis.cutoff;
  const std::vector<Mode> filter{{0, 0}};

  std::vector<ErrorCurve> out;
  for (const auto& [kind, n_fn] : kinds) {
    const ReducedFamily fam = family_for(kind, d, dir, n_fn);
    const EffectiveModel model = make_effective_model(fam, d, eps, nu, vz);
    ErrorCurve curve;
    curve.sweep_name = "mu";
    curve.model_kind = family_label(kind, n_fn);
    for (const double mu : mu_grid) {
      const Vector2d k = mu * lat.K;
      const std::vector<FoldedClass> classes =
          folded_classes(lat, v_micro, d.basis.cutoff, inv_eps, k, 2, -1, &filter);
      const FoldedClass& cls = classes.at(0);
      std::array<SparseVec, 2> exact{class_state_to_fine(cls, 0, inv_eps),
                                     class_state_to_fine(cls, 1, inv_eps)};
      const EighComplex es = solve_effective(model, k);
      std::array<int, 2> match{-1, -1};
      std::array<double, 2> raw{};
      std::vector<bool> used(size_t(es.values.size()), false);
      for (int i = 0; i < 2; ++i) {
        const VectorXcd row = overlap_row(fam, nu, inv_eps, exact[size_t(i)]);
        double best = -1.0;
        for (int j = 0; j < int(es.values.size()); ++j) {
          if (used[size_t(j)]) continue;
          const double val = std::abs(row.cwiseProduct(es.vectors.col(j)).sum());
          if (val > best) {
            best = val;
            match[size_t(i)] = j;
          }
        }
        used[size_t(match[size_t(i)])] = true;
        raw[size_t(i)] = best;
      }
      std::array<SparseVec, 2> jrec;
      double mov = 1.0;
      for (int i = 0; i < 2; ++i) {
        jrec[size_t(i)] = reconstruct(fam, es.vectors.col(match[size_t(i)]), inv_eps,
                                      nu, fine_cut);
        mov = std::min(mov, raw[size_t(i)] / sparse_norm(jrec[size_t(i)]));
      }
      curve.grid.push_back(mu);
      curve.dist.push_back(pair_distance(exact, jrec).mean());
      curve.overlap.push_back(mov);
    }
    const auto [lo, hi] = fit_window ? *fit_window : default_fit_window(mu_grid);
    curve.fit_lo = lo;
    curve.fit_hi = hi;
    curve.slope = fit_loglog_slope(curve.grid, curve.dist, lo, hi);
    out.push_back(std::move(curve));
  }
  return out;
}

std::vector<ErrorCurve> asymptotics_lambda(const DiracData& d, const FourierField& v_micro,
                                           const std::vector<std::pair<FamilyKind, int>>& kinds,
                                           const std::vector<double>& lambda_grid,
                                           int inv_eps, int nu, int keep_bands) {
  if (inv_eps < 1) throw InvalidParameter("inverse epsilon must be a positive integer");
  const Lattice& lat = d.basis.lat;
  const double eps = 1.0 / double(inv_eps);
  const Vector2d k0 = Vector2d::Zero();
  const Vector2d dir = lat.K / lat.K.norm();
  const int fine_cut = nu + inv_eps * d.basis.cutoff;

  std::vector<double> targets = lambda_grid;
  std::sort(targets.begin(), targets.end());
  for (const double t : targets) {
    if (t < 0.0) throw InvalidParameter("negative potential strength");
  }

  // continuation ladder from zero coupling, geometric steps bounded by 1.35
  std::vector<double> chain;
  std::vector<bool> is_target;
  double prev = 0.0;
  for (const double t : targets) {
    if (t == 0.0) continue;
    if (prev == 0.0) {
      chain.push_back(t);
      is_target.push_back(true);
    } else {
      const double ratio = t / prev;
      const int nstep = std::max(1, int(std::ceil(std::log(ratio) / std::log(1.35))));
      for (int i = 1; i <= nstep; ++i) {
        chain.push_back(prev * std::pow(ratio, double(i) / double(nstep)));
        is_target.push_back(i == nstep);
      }
    }
    prev = t;
  }

  const FourierField unit_v = honeycomb_potential(lat, 1.0, 1);
  const FoldedGalerkin g = build_folded_galerkin(lat, v_micro, d.basis.cutoff, inv_eps,
                                                 k0, keep_bands, unit_v.support());

  // locate the cone pair in the uncoupled spectrum
  int class0 = -1;
  for (size_t c = 0; c < g.classes.size(); ++c) {
    if (g.classes[c].residue == Mode{0, 0}) class0 = int(c);
  }
  if (class0 < 0) throw NumericalFailure("missing zero residue class");
  MatrixXcd pair = MatrixXcd::Zero(g.dim, 2);
  pair(g.offset[size_t(class0)] + 0, 0) = 1.0;
  pair(g.offset[size_t(class0)] + 1, 1) = 1.0;
  std::array<double, 2> pair_e{g.classes[size_t(class0)].E[0] - d.EF,
                               g.classes[size_t(class0)].E[1] - d.EF};

  std::vector<ErrorCurve> out;
  for (const auto& [kind, n_fn] : kinds) {
    ErrorCurve c;
    c.sweep_name = "lambda";
    c.model_kind = family_label(kind, n_fn);
    out.push_back(std::move(c));
  }

  const auto record_target = [&](double lam, const MatrixXcd& px,
                                 const std::array<double, 2>&) {
    std::array<SparseVec, 2> exact{folded_state_to_fine(g, px.col(0)),
                                   folded_state_to_fine(g, px.col(1))};
    const FourierField vmac = honeycomb_potential(lat, lam, 1);
    for (size_t ik = 0; ik < kinds.size(); ++ik) {
      const auto& [kind, n_fn] = kinds[ik];
      const ReducedFamily fam = family_for(kind, d, dir, n_fn);
      const EffectiveModel model = make_effective_model(fam, d, eps, nu, vmac);
      const EighComplex es = solve_effective(model, k0);
      std::array<int, 2> match{-1, -1};
      std::array<double, 2> raw{};
      std::vector<bool> used(size_t(es.values.size()), false);
      for (int i = 0; i < 2; ++i) {
        const VectorXcd row = overlap_row(fam, nu, inv_eps, exact[size_t(i)]);
        double best = -1.0;
        for (int j = 0; j < int(es.values.size()); ++j) {
          if (used[size_t(j)]) continue;
          const double val = std::abs(row.cwiseProduct(es.vectors.col(j)).sum());
          if (val > best) {
            best = val;
            match[size_t(i)] = j;
          }
        }
        used[size_t(match[size_t(i)])] = true;
        raw[size_t(i)] = best;
      }
      std::array<SparseVec, 2> jrec;
      double mov = 1.0;
      for (int i = 0; i < 2; ++i) {
        jrec[size_t(i)] = reconstruct(fam, es.vectors.col(match[size_t(i)]), inv_eps,
                                      nu, fine_cut);
        mov = std::min(mov, raw[size_t(i)] / sparse_norm(jrec[size_t(i)]));
      }
      out[ik].grid.push_back(lam);
      out[ik].dist.push_back(pair_distance(exact, jrec).mean());
      out[ik].overlap.push_back(mov);
    }
  };

  // zero coupling: the pair itself, distances against the bare class states
  if (!targets.empty() && targets.front() == 0.0) record_target(0.0, pair, pair_e);

  double lam_prev = 0.0;
  for (size_t ic = 0; ic < chain.size(); ++ic) {
    const double lam = chain[ic];
    const FourierField vmac = honeycomb_potential(lat, lam, 1);
    const MatrixXcd h = assemble_folded(g, vmac, d.EF);
    const double step_shift = eps * 6.0 * (lam - lam_prev);
    double lo = std::min(pair_e[0], pair_e[1]) - step_shift - 0.05;
    double hi = std::max(pair_e[0], pair_e[1]) + step_shift + 0.05;
    EighComplex es;
    for (int attempt = 0; attempt < 5; ++attempt) {
      es = eigh_select(h, lo, hi);
      if (es.values.size() >= 2) break;
      const double w = hi - lo;
      lo -= w;
      hi += w;
    }
    if (es.values.size() < 2) throw NumericalFailure("pair continuation lost the branch");
    const MatrixXcd o = pair.adjoint() * es.vectors;
    const std::vector<int> pick = greedy_match(o, nullptr);
    MatrixXcd nxt(g.dim, 2);
    for (int b = 0; b < 2; ++b) {
      nxt.col(b) = es.vectors.col(pick[size_t(b)]);
      pair_e[size_t(b)] = es.values[pick[size_t(b)]];
    }
    pair = nxt;
    lam_prev = lam;
    if (is_target[ic]) record_target(lam, pair, pair_e);
  }
  return out;
}

std::vector<double> weak_convergence_check(const ReducedFamily& fam, const DiracData& d,
                                           const FourierField& v_micro,
                                           const VectorXcd& alpha, const VectorXcd& beta,
                                           int nu_env, const std::vector<int>& inv_eps_list,
                                           const Vector2d& k, const FourierField& v_macro) {
  const Lattice& lat = fam.basis.lat;
  const double sq = lat.sqrt_area;
  const MicroBasis mac_env{lat, nu_env};
  const int m_fam = fam.size();
  if (alpha.size() != mac_env.dim() * m_fam || beta.size() != mac_env.dim() * m_fam) {
    throw InvalidInput("envelope length does not match the macro layout");
  }
  int rv = 0;
  for (const Mode& o : v_macro.support()) rv = std::max(rv, linf(o));
  const int nu_rhs = nu_env + rv;
  const MicroBasis mac_rhs{lat, nu_rhs};

  std::vector<double> out;
  for (const int inv_eps : inv_eps_list) {
    if (inv_eps < 1) throw InvalidParameter("inverse epsilon must be a positive integer");
    const double eps = 1.0 / double(inv_eps);
    const int fine_cut = nu_env + inv_eps * family_support_radius(fam);
    const SparseVec ja = reconstruct(fam, alpha, inv_eps, nu_env, fine_cut);
    const SparseVec jb = reconstruct(fam, beta, inv_eps, nu_env, fine_cut);

    SparseVec hjb;
    for (const auto& [n, c] : jb) {
      const Vector2d qn = lat.K + eps * (k + lat.dual(n));
      hjb[n] += (0.5 * qn.squaredNorm() - d.EF) * c;
      for (const Mode& m : v_micro.support()) {
        hjb[n + inv_eps * m] += (v_micro.at(m) / sq) * c;
      }
      for (const Mode& o : v_macro.support()) {
        hjb[n + o] += (eps * v_macro.at(o) / sq) * c;
      }
    }
    const cplx lhs = double(inv_eps) * lat.cell_area * sparse_inner(ja, hjb);

    const EffectiveModel model = make_effective_model(fam, d, eps, nu_rhs, v_macro);
    const auto [a_mat, b_mat] = assemble_effective(model, k);
    (void)b_mat;
    VectorXcd ap = VectorXcd::Zero(mac_rhs.dim() * m_fam);
    VectorXcd bp = VectorXcd::Zero(mac_rhs.dim() * m_fam);
    for (int im = 0; im < mac_env.dim(); ++im) {
      const int ir = mac_rhs.index(mac_env.mode(im));
      ap.segment(ir * m_fam, m_fam) = alpha.segment(im * m_fam, m_fam);
      bp.segment(ir * m_fam, m_fam) = beta.segment(im * m_fam, m_fam);
    }
    const cplx rhs = (ap.adjoint() * a_mat * bp)(0);
    out.push_back(std::abs(lhs - rhs));
  }
  return out;
}

std::vector<double> oscillation_check(const FourierField& g, const FourierField& f,
                                      const std::vector<int>& inv_eps_list) {
  std::vector<double> out;
  for (const int inv_eps : inv_eps_list) {
    if (inv_eps < 1) throw InvalidParameter("inverse epsilon must be a positive integer");
    cplx acc(0.0, 0.0);
    for (const Mode& n : f.support()) {
      if (n == Mode{0, 0}) continue;
      acc += g.at(-inv_eps * n) * f.at(n);
    }
    out.push_back(std::abs(acc));
  }
  return out;
}

}  // namespace tsb
