#pragma once

#include <tuple>

#include "tsb/field.hpp"
#include "tsb/linalg.hpp"
#include "tsb/micro.hpp"

namespace tsb {

// scaled superlattice operator on the fine plane-wave box
struct ExactOperatorSpec {
  Lattice lat;
  int inv_epsilon = 1;
  Vector2d k = Vector2d::Zero();
  FourierField v_micro;
  FourierField v_macro;
  int fine_cutoff = 0;
  double E_F = 0.0;
};

MatrixXcd assemble_exact(const ExactOperatorSpec& spec);

// count > 0 selects that many eigenpairs nearest zero; otherwise [lo, hi]
struct ExactWindow {
  int count = 0;
  double lo = 0.0;
  double hi = 0.0;
};

EighComplex solve_exact(const ExactOperatorSpec& spec, const ExactWindow& window,
                        int max_dim = 4000);

// convergence-check mode: doubles the fine cutoff and reports the drift of
// the windowed eigenvalues
struct DriftReport {
  EighComplex base;
  EighComplex refined;
  double drift = 0.0;
};

DriftReport solve_exact_convergence(const ExactOperatorSpec& spec,
                                    const ExactWindow& window, int max_dim = 4000);

// folding oracle: micro spectra at the folded momenta, shifted by E_F;
// residue representatives in {0..1/eps-1}^2
std::vector<double> folded_reference(const ExactOperatorSpec& spec, int micro_cutoff);

// per-residue micro eigenbasis at the folded momenta (balanced residues);
// building block of the large-scale exact solves and the overlap pipeline
struct FoldedClass {
  Mode residue;
  Vector2d q;
  std::vector<Mode> modes;  // micro modes kept for this class
  VectorXd E;               // kept band energies, ascending
  MatrixXcd U;              // kept eigenvector columns over `modes`
};

// mode_clip >= 0 drops micro modes whose fine image max-norm exceeds the clip,
// which mirrors a fine-box truncation exactly
std::vector<FoldedClass> folded_classes(const Lattice& lat, const FourierField& v,
                                        int micro_cutoff, int inv_eps,
                                        const Vector2d& k, int keep_bands,
                                        int mode_clip = -1,
                                        const std::vector<Mode>* residue_filter = nullptr);

// galerkin representation of the exact operator in the folded eigenbasis
struct FoldedGalerkin {
  Lattice lat;
  int inv_eps = 1;
  int micro_cutoff = 0;
  std::vector<FoldedClass> classes;
  std::vector<int> offset;  // block offsets, one past the end at back
  // per macro mode: (target class, source class, band-space shift block)
  std::map<Mode, std::vector<std::tuple<int, int, MatrixXcd>>> coupling;
  int dim = 0;
};

FoldedGalerkin build_folded_galerkin(const Lattice& lat, const FourierField& v_micro,
                                     int micro_cutoff, int inv_eps, const Vector2d& k,
                                     int keep_bands, const std::vector<Mode>& macro_modes,
                                     int mode_clip = -1);

// dense hermitian matrix of the folded galerkin operator with macro potential
MatrixXcd assemble_folded(const FoldedGalerkin& g, const FourierField& v_macro,
                          double E_F);

// fine-basis coefficients of a folded galerkin state
SparseVec folded_state_to_fine(const FoldedGalerkin& g, const VectorXcd& coef);

// fine-basis coefficients of a single folded-class eigenvector column
SparseVec class_state_to_fine(const FoldedClass& cls, int col, int inv_eps);

}  // namespace tsb
