#pragma once

#include "tsb/lattice.hpp"

namespace tsb {

// periodic scalar field stored by fourier coefficients on a square index box
// |m_i| <= cutoff; real-space values use the 1/sqrt(cell_area) convention.
class FourierField {
 public:
  FourierField(const Lattice& lat, int cutoff);

  int cutoff() const { return cutoff_; }
  const Lattice& lattice() const { return lat_; }

  bool contains(Mode m) const {
    return std::abs(m[0]) <= cutoff_ && std::abs(m[1]) <= cutoff_;
  }
  cplx at(Mode m) const;
  void set(Mode m, cplx v);

  // evaluate at a real-space point
  cplx value(const Vector2d& x) const;

  // nonzero modes in deterministic (lexicographic) order
  std::vector<Mode> support(double tol = 0.0) const;

 private:
  Lattice lat_;
  int cutoff_;
  VectorXcd coef_;
  int idx(Mode m) const {
    const int w = 2 * cutoff_ + 1;
    return (m[0] + cutoff_) * w + (m[1] + cutoff_);
  }
};

// first-shell cosine potential with sixfold star; amplitude scales all modes
FourierField honeycomb_potential(const Lattice& lat, double amplitude, int cutoff);

// asymmetric three-star test potential; needs cutoff >= 2
FourierField ng_potential(const Lattice& lat, double lambda, int cutoff);

struct SymmetryReport {
  bool even = false;
  bool rotation = false;
  bool mirror = false;
  double max_dev = 0.0;
  bool all() const { return even && rotation && mirror; }
};

// checks evenness, threefold rotation and mirror symmetry of a real field;
// throws InvalidInput when the field is not real-valued
SymmetryReport check_field_symmetry(const FourierField& f, double tol = 1e-12);

// exact product of two fields; result cutoff defaults to the sum of cutoffs
FourierField multiply(const FourierField& f, const FourierField& g);

// product truncated to a target cutoff; throws ResolutionError whenever a
// nonzero product coefficient would fall outside the target basis
FourierField multiply(const FourierField& f, const FourierField& g, int out_cutoff);

}  // namespace tsb
