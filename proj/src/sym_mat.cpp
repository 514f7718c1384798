#include "mner/sym_mat.hpp"

#include <algorithm>
#include <cmath>

#include "mner/errors.hpp"

namespace mner {

SymMat::SymMat(const Eigen::MatrixXd& a) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    throw InvalidInput("SymMat requires a non-empty square matrix, got " +
                       std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  if (!a.allFinite()) throw InvalidInput("SymMat entries must be finite");
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryTolerance * scale) {
    throw InvalidInput("matrix is not symmetric (max |A - A'| = " + std::to_string(asym) + ")");
  }
  m_ = 0.5 * (a + a.transpose());
}

SymMat SymMat::zero(Eigen::Index k) { return SymMat(Trusted{}, Eigen::MatrixXd::Zero(k, k)); }

SymMat SymMat::identity(Eigen::Index k) {
  return SymMat(Trusted{}, Eigen::MatrixXd::Identity(k, k));
}

SymMat SymMat::symmetrize(const Eigen::MatrixXd& a) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    throw InvalidInput("SymMat requires a non-empty square matrix");
  }
  return SymMat(Trusted{}, 0.5 * (a + a.transpose()));
}

Eigen::VectorXd SymMat::eigenvalues() const {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m_, Eigen::EigenvaluesOnly).eigenvalues();
}

double SymMat::min_eigenvalue() const { return eigenvalues().minCoeff(); }

double SymMat::norm() const { return eigenvalues().cwiseAbs().maxCoeff(); }

bool SymMat::is_psd(double tol) const {
  const Eigen::VectorXd ev = eigenvalues();
  return ev.minCoeff() >= -tol * std::max(ev.cwiseAbs().maxCoeff(), 1.0);
}

SymMat SymMat::operator+(const SymMat& o) const { return SymMat(Trusted{}, m_ + o.m_); }
SymMat SymMat::operator-(const SymMat& o) const { return SymMat(Trusted{}, m_ - o.m_); }
SymMat SymMat::operator*(double c) const { return SymMat(Trusted{}, c * m_); }

}  // namespace mner
