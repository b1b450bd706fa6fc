#pragma once

#include <optional>
#include <string>

#include "tsb/effective.hpp"
#include "tsb/exact.hpp"

namespace tsb {

// two-scale reconstruction: envelope coefficients (macro-major layout over
// |m_i| <= nu) times family profiles, expressed on the fine dual lattice
SparseVec reconstruct(const ReducedFamily& fam, const VectorXcd& envelope,
                      int inv_eps, int nu, int fine_cutoff, bool normalized = false);

double sparse_norm(const SparseVec& a);
cplx sparse_inner(const SparseVec& a, const SparseVec& b);

// relative eigenvector distance on rays, in [0, 2]
double eigvec_distance(const SparseVec& psi, const SparseVec& phi);
double eigvec_distance(const VectorXcd& psi, const VectorXcd& phi);

// subspace-aligned distance for a near-degenerate pair: singular vectors of
// the 2x2 overlap matrix pair up the states before the ray distance is taken
struct PairDistance {
  double d1 = 0.0, d2 = 0.0;
  double mean() const { return 0.5 * (d1 + d2); }
  double smin = 0.0;  // smallest overlap singular value
};

PairDistance pair_distance(const std::array<SparseVec, 2>& exact_states,
                           const std::array<SparseVec, 2>& model_states);

struct BandDiagram {
  KPath path;
  std::string source;
  std::vector<VectorXd> energies;              // sorted per sample
  std::vector<std::vector<double>> tracked;    // [band][sample]
  std::vector<int> flagged_samples;            // undefined-direction samples
  double min_tracking_overlap = 1.0;
};

// effective or schur diagram; directional families rebuild per sample and
// flag the zero-momentum point
BandDiagram band_diagram_effective(const DiracData& d, FamilyKind kind, int n_fn,
                                   double epsilon, int nu, const FourierField& V,
                                   const KPath& path, int n_track,
                                   bool schur = false);

BandDiagram band_diagram_exact(const ExactOperatorSpec& base, const KPath& path,
                               int n_track, int max_dim = 4000);

// folded V=0 diagram, energies only
BandDiagram band_diagram_folded(const ExactOperatorSpec& base, const KPath& path,
                                int micro_cutoff, int n_keep);

struct BranchStats {
  std::vector<int> samples;        // included sample indices
  std::vector<double> abs_de;      // per included sample, mean of the pair
  std::vector<double> dist;        // per included sample, pair distance
  std::vector<double> overlap;     // per included sample, min matched overlap
  std::vector<int> excluded;       // samples dropped by the overlap threshold
  double mean_abs_de = 0.0, max_abs_de = 0.0, mean_dist = 0.0;
};

// tracks the effective Dirac pair along the path and matches it against the
// exact side (folded classes at V=0, folded galerkin otherwise); energy
// differences are reported on the 1/eps-normalized scale
BranchStats compare_dirac_branch(const DiracData& d, const FourierField& v_micro,
                                 FamilyKind kind, int n_fn, int inv_eps, int nu,
                                 const FourierField& v_macro, const KPath& path,
                                 int keep_bands = 30);

// short text label of a family kind, e.g. "F1k" or "F6"
std::string family_label(FamilyKind kind, int n = 0);

struct ErrorCurve {
  std::string sweep_name;
  std::string model_kind;
  std::vector<double> grid;
  std::vector<double> dist;
  std::vector<double> overlap;
  double fit_lo = 0.0, fit_hi = 0.0, slope = 0.0;
};

// least-squares log-log slope over grid points inside [lo, hi]
double fit_loglog_slope(const std::vector<double>& grid, const std::vector<double>& dist,
                        double lo, double hi);

// default fitting window: middle decade, excluding the two smallest points
std::pair<double, double> default_fit_window(const std::vector<double>& grid);

// vanishing macro potential, k = mu * K sweep; one curve per family kind
std::vector<ErrorCurve> asymptotics_mu(const DiracData& d, const FourierField& v_micro,
                                       const std::vector<std::pair<FamilyKind, int>>& kinds,
                                       const std::vector<double>& mu_grid, int inv_eps,
                                       int nu,
                                       std::optional<std::pair<double, double>> fit_window);

// k = 0, honeycomb macro potential lambda sweep with exact-side continuation
std::vector<ErrorCurve> asymptotics_lambda(const DiracData& d, const FourierField& v_micro,
                                           const std::vector<std::pair<FamilyKind, int>>& kinds,
                                           const std::vector<double>& lambda_grid,
                                           int inv_eps, int nu, int keep_bands = 30);

// both sides of the weak formulation evaluated spectrally; returns absolute
// discrepancies, one per inverse epsilon
std::vector<double> weak_convergence_check(const ReducedFamily& fam, const DiracData& d,
                                           const FourierField& v_micro,
                                           const VectorXcd& alpha, const VectorXcd& beta,
                                           int nu_env, const std::vector<int>& inv_eps_list,
                                           const Vector2d& k, const FourierField& v_macro);

// oscillating-sum discrepancy per inverse epsilon
std::vector<double> oscillation_check(const FourierField& g, const FourierField& f,
                                      const std::vector<int>& inv_eps_list);

}  // namespace tsb
