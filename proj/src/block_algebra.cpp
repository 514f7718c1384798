#include "mner/block_algebra.hpp"

#include <string>

#include "mner/errors.hpp"

namespace mner {

SymMat inverse_checked(const Eigen::MatrixXd& a, std::string_view what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw SingularCovariance(std::string(what) + " could not be factorized");
  }
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  const double smallest = ev.cwiseAbs().minCoeff();
  if (!(largest > 0.0) || smallest < kSingularRcond * largest) {
    throw SingularCovariance(std::string(what) + " is singular (rcond " +
                             std::to_string(largest > 0.0 ? smallest / largest : 0.0) + ")");
  }
  const Eigen::MatrixXd& h = es.eigenvectors();
  return SymMat::symmetrize(h * ev.cwiseInverse().asDiagonal() * h.transpose());
}

SymMat inverse_checked(const SymMat& a, std::string_view what) {
  return inverse_checked(a.matrix(), what);
}

Eigen::MatrixXd gram_inverse(const Eigen::MatrixXd& g, std::string_view what) {
  const Eigen::VectorXd d = g.diagonal();
  if (!(d.minCoeff() > 0.0)) {
    throw RankDeficientDesign(std::string(what) + " has a zero column");
  }
  const Eigen::VectorXd scale = d.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd eq = scale.asDiagonal() * g * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (eq + eq.transpose()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (es.info() != Eigen::Success || !(ev.minCoeff() > kSingularRcond * ev.maxCoeff())) {
    throw RankDeficientDesign(std::string(what) + " is singular");
  }
  const Eigen::MatrixXd& h = es.eigenvectors();
  Eigen::MatrixXd inv = scale.asDiagonal() * (h * ev.cwiseInverse().asDiagonal() * h.transpose()) *
                        scale.asDiagonal();
  return 0.5 * (inv + inv.transpose());
}

SymMat lambda(const SymMat& psi, const SymMat& sigma, int n) {
  return psi + sigma * (1.0 / static_cast<double>(n));
}

SymMat marginal_block_correction(const SymMat& psi, const SymMat& sigma, const SymMat& sigma_inv,
                                 int n) {
  const SymMat outer = inverse_checked(sigma + psi * static_cast<double>(n), "Sigma + n*Psi");
  return SymMat::symmetrize(sigma_inv.matrix() * psi.matrix() * outer.matrix());
}

StructuredInverse marginal_block_inverse(const SymMat& psi, const SymMat& sigma, int n) {
  if (psi.dim() != sigma.dim()) throw InvalidInput("Psi and Sigma dimensions differ");
  if (n < 1) throw InvalidInput("area size must be positive");
  SymMat sigma_inv = inverse_checked(sigma, "Sigma");
  SymMat c = marginal_block_correction(psi, sigma, sigma_inv, n);
  return {std::move(sigma_inv), std::move(c)};
}

}  // namespace mner
