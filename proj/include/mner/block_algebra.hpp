#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "mner/sym_mat.hpp"

namespace mner {

/// Reciprocal condition number below which a symmetric matrix is treated as
/// singular.
inline constexpr double kSingularRcond = 1e-12;

/// Inverse of a symmetric matrix through its eigendecomposition. Throws
/// SingularCovariance naming `what` if rcond < kSingularRcond.
SymMat inverse_checked(const SymMat& a, std::string_view what);
SymMat inverse_checked(const Eigen::MatrixXd& a, std::string_view what);

/// Inverse of a positive-definite Gram matrix (X'X, X'D^{-1}X). The rcond
/// check is applied after diagonal equilibration, so badly scaled but
/// well-posed designs pass. Throws RankDeficientDesign naming `what`.
Eigen::MatrixXd gram_inverse(const Eigen::MatrixXd& g, std::string_view what);

/// Lambda_n = Psi + Sigma / n.
SymMat lambda(const SymMat& psi, const SymMat& sigma, int n);

/// Factored inverse of D_i = J_n (x) Psi + I_n (x) Sigma:
///   D_i^{-1} = I_n (x) sigma_inv - J_n (x) c.
struct StructuredInverse {
  SymMat sigma_inv;
  SymMat c;  // Sigma^{-1} Psi (Sigma + n Psi)^{-1}
};

StructuredInverse marginal_block_inverse(const SymMat& psi, const SymMat& sigma, int n);

/// Same, reusing a precomputed Sigma^{-1}.
SymMat marginal_block_correction(const SymMat& psi, const SymMat& sigma, const SymMat& sigma_inv,
                                 int n);

}  // namespace mner
