#include "tsb/linalg.hpp"

#include <mutex>

#include <lapacke.h>

namespace tsb {

namespace {
// the backend is pinned to one blas thread; this lock additionally serializes
// factorizations issued from different worker threads
std::mutex& lapack_mutex() {
  static std::mutex m;
  return m;
}

// std::complex<double> is layout compatible with the C99 complex the lapacke
// headers use on this platform
lapack_complex_double* lp(cplx* p) { return reinterpret_cast<lapack_complex_double*>(p); }
}  // namespace

EighReal eigh(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw InvalidInput("eigh expects a square matrix");
  EighReal out;
  const lapack_int n = lapack_int(a.rows());
  out.vectors = a;
  out.values.resize(n);
  if (n == 0) return out;
  const std::lock_guard<std::mutex> lock(lapack_mutex());
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                         out.vectors.data(), n, out.values.data());
  if (info != 0) throw NumericalFailure("symmetric eigensolver failed");
  return out;
}

EighComplex eigh(const MatrixXcd& a) {
  if (a.rows() != a.cols()) throw InvalidInput("eigh expects a square matrix");
  EighComplex out;
  const lapack_int n = lapack_int(a.rows());
  out.vectors = a;
  out.values.resize(n);
  if (n == 0) return out;
  const std::lock_guard<std::mutex> lock(lapack_mutex());
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                         lp(out.vectors.data()), n, out.values.data());
  if (info != 0) throw NumericalFailure("hermitian eigensolver failed");
  return out;
}

EighComplex eigh_auto(const MatrixXcd& a) {
  if (a.imag().cwiseAbs().maxCoeff() == 0.0) {
    const EighReal re = eigh(MatrixXd(a.real()));
    EighComplex out;
    out.values = re.values;
    out.vectors = re.vectors.cast<cplx>();
    return out;
  }
  return eigh(a);
}

EighComplex eigh_select(const MatrixXcd& a, double lo, double hi) {
  if (a.rows() != a.cols()) throw InvalidInput("eigh expects a square matrix");
  if (!(lo < hi)) throw InvalidParameter("empty eigenvalue window");
  EighComplex out;
  const lapack_int n = lapack_int(a.rows());
  if (n == 0) {
    out.values.resize(0);
    out.vectors.resize(0, 0);
    return out;
  }
  MatrixXcd work = a;
  VectorXd vals(n);
  MatrixXcd vecs(n, n);
  std::vector<lapack_int> isuppz(size_t(2 * n));
  lapack_int found = 0;
  const std::lock_guard<std::mutex> lock(lapack_mutex());
  const lapack_int info = LAPACKE_zheevr(
      LAPACK_COL_MAJOR, 'V', 'V', 'L', n, lp(work.data()), n, lo, hi, 0, 0,
      LAPACKE_dlamch('S'), &found, vals.data(), lp(vecs.data()), n, isuppz.data());
  if (info != 0) throw NumericalFailure("windowed hermitian eigensolver failed");
  out.values = vals.head(found);
  out.vectors = vecs.leftCols(found);
  return out;
}

GenEighStatus eigh_gen(const MatrixXcd& a, const MatrixXcd& b, EighComplex& out) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw InvalidInput("generalized eigh expects matching square matrices");
  }
  const lapack_int n = lapack_int(a.rows());
  out.vectors = a;
  MatrixXcd bb = b;
  out.values.resize(n);
  if (n == 0) return GenEighStatus::ok;
  const std::lock_guard<std::mutex> lock(lapack_mutex());
  const lapack_int info =
      LAPACKE_zhegvd(LAPACK_COL_MAJOR, 1, 'V', 'L', n, lp(out.vectors.data()), n,
                     lp(bb.data()), n, out.values.data());
  if (info == 0) return GenEighStatus::ok;
  if (info > n) return GenEighStatus::metric_not_pd;
  return GenEighStatus::no_convergence;
}

double max_principal_angle_sin(const MatrixXcd& a, const MatrixXcd& b) {
  if (a.rows() != b.rows()) throw InvalidInput("span comparison needs a common space");
  if (a.cols() == 0 || b.cols() == 0) throw InvalidInput("span comparison of empty sets");
  const auto thin_q = [](const MatrixXcd& m) {
    Eigen::HouseholderQR<MatrixXcd> qr(m);
    return MatrixXcd(qr.householderQ() * MatrixXcd::Identity(m.rows(), m.cols()));
  };
  const MatrixXcd qa = thin_q(a);
  const MatrixXcd qb = thin_q(b);
  // residual of b's frame outside span(a); its largest singular value is the
  // sine of the largest angle, well conditioned near zero
  const MatrixXcd res = qb - qa * (qa.adjoint() * qb);
  Eigen::JacobiSVD<MatrixXcd> svd(res);
  double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  if (a.cols() != b.cols()) s = 1.0;
  return std::min(1.0, s);
}

}  // namespace tsb
