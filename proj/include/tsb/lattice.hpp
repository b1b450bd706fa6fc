#pragma once

#include "tsb/common.hpp"

namespace tsb {

// hexagonal lattice geometry shared by every solver.
// direct vectors span 120 degrees; duals satisfy <a_i, a_j*> = 2*pi*delta_ij.
struct Lattice {
  double a0 = 0.0;        // direct lattice constant
  Vector2d a1, a2;        // direct basis
  Vector2d a1s, a2s;      // dual basis
  Vector2d K;             // degeneracy point, fixed chirality
  Vector2d kappa;         // dual-cell corner used as path anchor
  Vector2d M;             // edge midpoint path anchor
  double cell_area = 0.0; // direct unit cell area
  double sqrt_area = 0.0; // normalization used by fourier transforms

  // dual vector for integer mode m
  Vector2d dual(Mode m) const { return double(m[0]) * a1s + double(m[1]) * a2s; }
};

Lattice build_lattice(double a0);

// index action of the 2*pi/3 rotation on dual modes: R b(m) = b(rot_index(m))
Mode rot_index(Mode m);

// index action of the mirror symmetry on dual modes
Mode mirror_index(Mode m);

// offset entering the rotation action on the K-shifted basis
inline Mode rot_offset() { return {1, 0}; }

// first-shell modes of the degeneracy-point potential (plus their negatives)
std::vector<Mode> first_shell_modes();

// sampled path kappa -> gamma -> m -> kappa with 3n+1 points, plus arclength
struct KPath {
  std::vector<Vector2d> k;
  std::vector<double> arclength;
};

KPath standard_kpath(const Lattice& lat, int samples_per_segment);

}  // namespace tsb
