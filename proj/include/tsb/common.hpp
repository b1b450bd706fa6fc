#pragma once

#include <array>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tsb {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// dual-lattice index pair (m0, m1); lexicographic order makes map iteration deterministic
using Mode = std::array<int, 2>;

inline Mode operator+(Mode a, Mode b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Mode operator-(Mode a, Mode b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Mode operator-(Mode a) { return {-a[0], -a[1]}; }
inline Mode operator*(int s, Mode a) { return {s * a[0], s * a[1]}; }

// sparse coefficient vector over dual-lattice modes
using SparseVec = std::map<Mode, cplx>;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidParameter : Error { using Error::Error; };
struct InvalidInput : Error { using Error::Error; };
struct SymmetryViolation : Error { using Error::Error; };
struct NoDiracPoint : Error { using Error::Error; };
struct DegenerateCone : Error { using Error::Error; };
struct ResolutionError : Error { using Error::Error; };
struct ResourceError : Error { using Error::Error; };
struct DependentFamily : Error { using Error::Error; };
struct SpectralGap : Error { using Error::Error; };
struct ReductionUndefined : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };

constexpr double kPi = 3.14159265358979323846;

}  // namespace tsb
