#pragma once

#include "tsb/field.hpp"

namespace tsb {

// plane-wave basis on the dual lattice, square index box |m_i| <= cutoff
struct MicroBasis {
  Lattice lat;
  int cutoff = 0;

  int width() const { return 2 * cutoff + 1; }
  int dim() const { return width() * width(); }
  bool contains(Mode m) const {
    return std::abs(m[0]) <= cutoff && std::abs(m[1]) <= cutoff;
  }
  int index(Mode m) const { return (m[0] + cutoff) * width() + (m[1] + cutoff); }
  Mode mode(int i) const {
    return {i / width() - cutoff, i % width() - cutoff};
  }
};

// bloch hamiltonian at absolute momentum q: kinetic half |q+b_m|^2 plus the
// multiplication operator of the potential field
MatrixXcd assemble_h_q(const MicroBasis& basis, const Vector2d& q, const FourierField& v);

// momentum operator component j relative to expansion point q (multiplier q+b_m)
VectorXcd apply_grad(const MicroBasis& basis, const Vector2d& q, int j, const VectorXcd& psi);

// threefold rotation acting on the K-shifted basis; accumulates the squared
// mass of coefficients whose image leaves the index box
VectorXcd apply_rot(const MicroBasis& basis, const VectorXcd& psi, double* leak_mass = nullptr);

// mirror symmetry on the K-shifted basis
VectorXcd apply_mirror(const MicroBasis& basis, const VectorXcd& psi);

struct DiracTolerances {
  double degeneracy = 1e-8;  // pair split bound, relative via 1 + |EF|
  double margin = 1e-3;      // isolation gap to the neighbouring bands
  double symmetry = 1e-8;    // unitarity / gauge structure deviations
  double leakage = 1e-10;    // rotation leakage mass allowed at this cutoff
  double cone = 1e-10;       // smallest admissible slope
};

// gauged degenerate pair at the cone vertex together with the full spectrum
struct DiracData {
  MicroBasis basis;
  Vector2d q;        // expansion point
  double EF = 0.0;   // pair energy
  double vF = 0.0;   // cone slope, real positive by gauge
  int pair_index = 0;
  VectorXd E;
  MatrixXcd U;
  VectorXcd w1, w2;  // gauged pair, w2 is the conjugate partner of w1
  double leakage = 0.0;
  double mirror_parity = 0.0;
  double structure_residual = 0.0;
};

// locates the m_f-th degenerate pair at the lattice degeneracy point, fixes
// the gauge so the velocity row equals vF * (1, -i), and validates the
// protecting symmetries
DiracData detect_dirac(const Lattice& lat, const FourierField& v, int cutoff,
                       int m_f = 1, const DiracTolerances& tol = {});

// spectral pseudo-inverse off the degenerate pair; power 2 squares the
// energy denominators
VectorXcd apply_resolvent(const DiracData& d, const VectorXcd& b, int power = 1);

// spectral application of the bloch hamiltonian stored in DiracData
VectorXcd apply_h(const DiracData& d, const VectorXcd& b);

}  // namespace tsb
