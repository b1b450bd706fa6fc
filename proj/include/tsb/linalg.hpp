#pragma once

#include "tsb/common.hpp"

namespace tsb {

struct EighReal {
  VectorXd values;
  MatrixXd vectors;  // columns
};

struct EighComplex {
  VectorXd values;
  MatrixXcd vectors;  // columns
};

enum class GenEighStatus { ok, metric_not_pd, no_convergence };

// dense symmetric eigensolver, ascending eigenvalues
EighReal eigh(const MatrixXd& a);

// dense hermitian eigensolver, ascending eigenvalues
EighComplex eigh(const MatrixXcd& a);

// hermitian eigensolver that takes the faster real path when the input has
// exactly zero imaginary part; keeps spectra reproducible across assemblies
EighComplex eigh_auto(const MatrixXcd& a);

// generalized hermitian problem a x = w b x with positive definite metric b
GenEighStatus eigh_gen(const MatrixXcd& a, const MatrixXcd& b, EighComplex& out);

// hermitian eigenpairs with eigenvalues inside (lo, hi]; much cheaper than a
// full decomposition when only a narrow window is needed
EighComplex eigh_select(const MatrixXcd& a, double lo, double hi);

// sine of the largest principal angle between the column spans; with equal
// column counts this vanishes exactly when the spans coincide
double max_principal_angle_sin(const MatrixXcd& a, const MatrixXcd& b);

}  // namespace tsb
