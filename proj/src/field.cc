#include "tsb/field.hpp"

#include <cmath>

namespace tsb {

FourierField::FourierField(const Lattice& lat, int cutoff) : lat_(lat), cutoff_(cutoff) {
  if (cutoff < 0) throw InvalidParameter("field cutoff must be nonnegative");
  const int w = 2 * cutoff + 1;
  coef_ = VectorXcd::Zero(w * w);
}

cplx FourierField::at(Mode m) const {
  if (!contains(m)) return cplx(0.0, 0.0);
  return coef_[idx(m)];
}

void FourierField::set(Mode m, cplx v) {
  if (!contains(m)) throw InvalidParameter("mode outside field basis");
  coef_[idx(m)] = v;
}

cplx FourierField::value(const Vector2d& x) const {
  cplx acc(0.0, 0.0);
  for (int m0 = -cutoff_; m0 <= cutoff_; ++m0) {
    for (int m1 = -cutoff_; m1 <= cutoff_; ++m1) {
      const cplx c = coef_[idx({m0, m1})];
      if (c == cplx(0.0, 0.0)) continue;
      const double phase = lat_.dual({m0, m1}).dot(x);
      acc += c * std::polar(1.0, phase);
    }
  }
  return acc / lat_.sqrt_area;
}

std::vector<Mode> FourierField::support(double tol) const {
  std::vector<Mode> out;
  for (int m0 = -cutoff_; m0 <= cutoff_; ++m0) {
    for (int m1 = -cutoff_; m1 <= cutoff_; ++m1) {
      if (std::abs(coef_[idx({m0, m1})]) > tol) out.push_back({m0, m1});
    }
  }
  return out;
}

FourierField honeycomb_potential(const Lattice& lat, double amplitude, int cutoff) {
  if (cutoff < 1) throw InvalidParameter("first-shell potential needs cutoff >= 1");
  FourierField f(lat, cutoff);
  const double c = amplitude * lat.sqrt_area;
  for (const Mode& m : first_shell_modes()) f.set(m, c);
  return f;
}

FourierField ng_potential(const Lattice& lat, double lambda, int cutoff) {
  if (cutoff < 2) throw InvalidParameter("three-star potential needs cutoff >= 2");
  FourierField f(lat, cutoff);
  const double c = lambda * lat.sqrt_area;
  const std::array<Mode, 3> star = {Mode{1, 0}, Mode{0, 1}, Mode{0, 2}};
  for (const Mode& m : star) {
    f.set(m, c);
    f.set(-m, c);
  }
  return f;
}

SymmetryReport check_field_symmetry(const FourierField& f, double tol) {
  const int n = f.cutoff();
  double real_dev = 0.0;
  for (int m0 = -n; m0 <= n; ++m0) {
    for (int m1 = -n; m1 <= n; ++m1) {
      const Mode m = {m0, m1};
      real_dev = std::max(real_dev, std::abs(f.at(m) - std::conj(f.at(-m))));
    }
  }
  if (real_dev > tol) throw InvalidInput("field is not real-valued");

  SymmetryReport rep;
  double even_dev = 0.0, rot_dev = 0.0, mir_dev = 0.0;
  for (int m0 = -n; m0 <= n; ++m0) {
    for (int m1 = -n; m1 <= n; ++m1) {
      const Mode m = {m0, m1};
      const cplx c = f.at(m);
      even_dev = std::max(even_dev, std::abs(c - f.at(-m)));
      const Mode rm = rot_index(m);
      if (!f.contains(rm) && std::abs(c) > tol) {
        rot_dev = std::max(rot_dev, std::abs(c));
      } else {
        rot_dev = std::max(rot_dev, std::abs(c - f.at(rm)));
      }
      mir_dev = std::max(mir_dev, std::abs(c - f.at(mirror_index(m))));
    }
  }
  rep.even = even_dev <= tol;
  rep.rotation = rot_dev <= tol;
  rep.mirror = mir_dev <= tol;
  rep.max_dev = std::max({even_dev, rot_dev, mir_dev});
  return rep;
}

static FourierField multiply_impl(const FourierField& f, const FourierField& g,
                                  int out_cutoff, bool strict) {
  FourierField out(f.lattice(), out_cutoff);
  const double inv_sq = 1.0 / f.lattice().sqrt_area;
  const auto fs = f.support();
  const auto gs = g.support();
  std::map<Mode, cplx> acc;
  for (const Mode& mf : fs) {
    const cplx cf = f.at(mf);
    for (const Mode& mg : gs) {
      acc[mf + mg] += cf * g.at(mg) * inv_sq;
    }
  }
  for (const auto& [m, c] : acc) {
    if (!out.contains(m)) {
      if (strict && c != cplx(0.0, 0.0)) {
        throw ResolutionError("product coefficient outside target basis");
      }
      continue;
    }
    out.set(m, c);
  }
  return out;
}

FourierField multiply(const FourierField& f, const FourierField& g) {
  return multiply_impl(f, g, f.cutoff() + g.cutoff(), false);
}

FourierField multiply(const FourierField& f, const FourierField& g, int out_cutoff) {
  return multiply_impl(f, g, out_cutoff, true);
}

}  // namespace tsb
