#include "bdris/linalg.hpp"

#include <cmath>
#include <sstream>

namespace bdris {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

CMatrix hermitian_part(const CMatrix& x) {
  return 0.5 * (x + x.adjoint());
}

CMatrix skew_part(const CMatrix& x) { return 0.5 * (x - x.adjoint()); }

double unitarity_residual(const CMatrix& x) {
  return (x.adjoint() * x - CMatrix::Identity(x.cols(), x.cols())).norm();
}

double logdet_hpd(const CMatrix& a) {
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("logdet_hpd: matrix is not positive definite");
  }
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i).real();
    if (!(d > 0.0)) {
      throw NumericalError("logdet_hpd: nonpositive Cholesky pivot");
    }
    acc += std::log(d);
  }
  return 2.0 * acc;
}

CMatrix nearest_unitary(const CMatrix& x) {
  if (x.rows() >= x.cols() && x.size() > 0) {
    // Polar factor X (X^H X)^{-1/2}; well conditioned inputs only.
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(x.adjoint() * x);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    if (eig.info() == Eigen::Success && lam.minCoeff() > 1e-6 * lam.maxCoeff()) {
      const CMatrix& v = eig.eigenvectors();
      return x * (v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.adjoint());
    }
  }
  Eigen::JacobiSVD<CMatrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

void require_dims(const CMatrix& m, Eigen::Index rows, Eigen::Index cols,
                  const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << what << ": expected " << rows << "x" << cols << ", got " << m.rows()
       << "x" << m.cols();
    throw DimensionError(os.str());
  }
}

}  // namespace bdris
