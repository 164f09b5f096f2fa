#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bdris {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Raised when a numerical precondition (definiteness, unitarity, monotone
/// descent) is violated beyond its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline constexpr Complex kI{0.0, 1.0};

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);

/// (X + X^H) / 2
CMatrix hermitian_part(const CMatrix& x);

/// (X - X^H) / 2
CMatrix skew_part(const CMatrix& x);

/// ||X^H X - I||_F
double unitarity_residual(const CMatrix& x);

/// Natural log-determinant of a Hermitian positive definite matrix via
/// Cholesky. Throws NumericalError if the factorization fails.
double logdet_hpd(const CMatrix& a);

/// Nearest unitary (or, for tall X, semi-unitary) matrix in Frobenius norm:
/// the polar factor U V^H of the thin SVD.
CMatrix nearest_unitary(const CMatrix& x);

void require_dims(const CMatrix& m, Eigen::Index rows, Eigen::Index cols,
                  const std::string& what);

}  // namespace bdris
