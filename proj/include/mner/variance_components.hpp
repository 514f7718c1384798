#pragma once

#include <Eigen/Dense>

#include "mner/dataset.hpp"
#include "mner/sym_mat.hpp"

namespace mner {

struct SigmaEstimate {
  SymMat sigma;
  int s0 = 0;  // rank of the within-area centred design
};

/// Covariance-component estimates and truncation diagnostics.
struct CovComponents {
  SymMat sigma_hat;
  SymMat psi0;     // moment estimator, may be indefinite
  SymMat psi1;     // psi0 minus its estimated bias
  SymMat psi_hat;  // psi1 with negative eigenvalues clipped to zero
  int s0 = 0;
  bool truncated = false;
  Eigen::VectorXd eigenvalues;  // of psi1, ascending
};

/// Everything the exact bias of psi0 depends on: the covariance parameters
/// at which it is evaluated and the design geometry.
struct BiasInputs {
  SymMat psi;
  SymMat sigma;
  const Dataset& data;
  Eigen::MatrixXd xtx_inv;  // (X'X)^{-1}
};

/// (X'X)^{-1} for the stacked design. Throws RankDeficientDesign.
Eigen::MatrixXd ols_gram_inverse(const Dataset& data);

/// Within-area residual covariance estimator. Intercept-like columns that the
/// centring annihilates are dropped; the rest go through a rank-revealing
/// minimum-norm least-squares solve, and s0 is the rank that survives.
SigmaEstimate estimate_sigma(const Dataset& data);

/// N^{-1} sum_ij e_ij e_ij' - Sigma_hat with e_ij the OLS residuals.
SymMat estimate_psi0(const Dataset& data, const SymMat& sigma_hat);

/// E[psi0] - Psi under the model at (psi, sigma), computed in closed form
/// from the OLS sampling covariance (X'X)^{-1} X'DX (X'X)^{-1} and the
/// cross-moments E[(v_i + e_ij)(beta_ols - beta)'] (X'X) = n_i Psi Rbar_i +
/// Sigma R_ij. Linear in (psi, sigma).
SymMat bias_psi0(const BiasInputs& in);

/// Eigenvalue clipping of psi1. Eigenvalues in (-1e-12 |psi1|, 0) are clipped
/// silently; anything more negative sets `truncated`.
struct Truncation {
  SymMat psi;
  bool truncated = false;
  Eigen::VectorXd eigenvalues;
};
Truncation truncate_psd(const SymMat& psi1);

/// Bias-corrected, PSD-truncated estimate of Psi given Sigma_hat.
CovComponents estimate_psi(const Dataset& data, const SigmaEstimate& sigma);

/// estimate_sigma followed by estimate_psi.
CovComponents estimate_components(const Dataset& data);

}  // namespace mner
