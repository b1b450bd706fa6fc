#pragma once

#include "tsb/micro.hpp"

namespace tsb {

enum class FamilyKind { F0, F1k, F1, F2k, F2, Fn };

// reduced corrector family; the gauged pair always comes first
struct ReducedFamily {
  FamilyKind kind = FamilyKind::F0;
  Vector2d direction = Vector2d::Zero();  // meaningful for F1k / F2k only
  int n = 0;                              // meaningful for Fn only
  MicroBasis basis;
  std::vector<VectorXcd> vectors;
  int size() const { return int(vectors.size()); }
};

// directional momentum operator (k/|k|) . (q + b_m) relative to the cone vertex
VectorXcd apply_dirk(const DiracData& d, const Vector2d& direction, const VectorXcd& v);

// orthogonal projection onto span(w1, w2)
VectorXcd project_pair(const DiracData& d, const VectorXcd& v);

// canonical phase: rotate the largest coefficient onto the positive real axis
VectorXcd canonical_phase(const VectorXcd& u);

ReducedFamily build_family(FamilyKind kind, const DiracData& d,
                           const Vector2d* direction = nullptr, int n = 0);

// degenerate second-order expansion of the bands at the cone along a direction
struct RSExpansion {
  Vector2d direction = Vector2d::Zero();
  VectorXcd U0_plus, U0_minus;
  VectorXcd U1_plus, U1_minus;
  double E1_plus = 0.0, E1_minus = 0.0;
  double E2_plus = 0.0, E2_minus = 0.0;
};

RSExpansion rs_expansion(const DiracData& d, const Vector2d& direction);

// density-matrix corrector of the given order applied to pair member a (1 or 2)
VectorXcd dm_gamma(const DiracData& d, const Vector2d& direction, int order, int a);

}  // namespace tsb
