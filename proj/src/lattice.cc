#include "tsb/lattice.hpp"

#include <cmath>

namespace tsb {

Lattice build_lattice(double a0) {
  if (!(a0 > 0.0) || !std::isfinite(a0)) {
    throw InvalidParameter("lattice constant must be positive and finite");
  }
  Lattice lat;
  lat.a0 = a0;
  const double s3 = std::sqrt(3.0);
  lat.a1 = a0 * Vector2d(0.5, -0.5 * s3);
  lat.a2 = a0 * Vector2d(0.5, 0.5 * s3);
  const double kd = 4.0 * kPi / (3.0 * a0);
  lat.a1s = kd * Vector2d(1.5, -0.5 * s3);
  lat.a2s = kd * Vector2d(1.5, 0.5 * s3);
  lat.K = -(lat.a1s + lat.a2s) / 3.0;
  lat.kappa = (-2.0 * lat.a1s + lat.a2s) / 3.0;
  lat.M = -0.5 * lat.a1s;
  lat.cell_area = std::abs(lat.a1.x() * lat.a2.y() - lat.a1.y() * lat.a2.x());
  lat.sqrt_area = std::sqrt(lat.cell_area);
  return lat;
}

Mode rot_index(Mode m) { return {-m[0] - m[1], m[0]}; }

Mode mirror_index(Mode m) { return {m[1], m[0]}; }

std::vector<Mode> first_shell_modes() {
  return {{1, 0}, {0, -1}, {-1, 1}, {-1, 0}, {0, 1}, {1, -1}};
}

KPath standard_kpath(const Lattice& lat, int samples_per_segment) {
  if (samples_per_segment < 1) {
    throw InvalidParameter("path needs at least one sample per segment");
  }
  const Vector2d gamma(0.0, 0.0);
  const std::array<Vector2d, 4> anchors = {lat.kappa, gamma, lat.M, lat.kappa};
  KPath path;
  double arc = 0.0;
  for (int seg = 0; seg < 3; ++seg) {
    const Vector2d d = anchors[seg + 1] - anchors[seg];
    const int n = samples_per_segment;
    for (int i = 0; i < n; ++i) {
      const double t = double(i) / double(n);
      path.k.push_back(anchors[seg] + t * d);
      path.arclength.push_back(arc + t * d.norm());
    }
    arc += d.norm();
  }
  path.k.push_back(anchors[3]);
  path.arclength.push_back(arc);
  return path;
}

}  // namespace tsb
