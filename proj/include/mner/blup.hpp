#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mner/dataset.hpp"
#include "mner/sym_mat.hpp"
#include "mner/variance_components.hpp"

namespace mner {

/// Per-area quantities reused by prediction and MSE evaluation.
struct AreaCache {
  int n = 0;
  SymMat lambda;      // Psi + Sigma / n
  SymMat lambda_inv;
  Eigen::MatrixXd shrinkage;  // B = Psi Lambda^{-1}
  Eigen::VectorXd y_bar;
  Eigen::MatrixXd r_bar;
};

struct FitResult {
  Eigen::VectorXd beta;      // GLS coefficients
  Eigen::MatrixXd beta_cov;  // (X'D^{-1}X)^{-1}
  SymMat psi;                // covariance parameters the fit was computed at
  SymMat sigma;
  std::optional<CovComponents> components;  // set when (psi, sigma) were estimated
  std::vector<AreaCache> per_area;
};

/// Generalized least squares at fixed (psi, sigma), accumulated per area from
/// the factored block inverse; the Nk x Nk covariance is never formed.
FitResult gls_fit(const Dataset& data, const SymMat& psi, const SymMat& sigma);

/// B = Psi (Psi + Sigma/n)^{-1}.
Eigen::MatrixXd shrinkage_matrix(const SymMat& psi, const SymMat& sigma, int n);

/// c beta + B (ybar - Rbar beta) for an explicit shrinkage matrix.
Eigen::VectorXd bayes_predict(const Eigen::VectorXd& beta, const Eigen::MatrixXd& shrinkage,
                              const Eigen::VectorXd& y_bar, const Eigen::MatrixXd& r_bar,
                              const Eigen::MatrixXd& c);

/// Bayes predictor of theta_a = c beta + v_a. `c` defaults to Rbar_a.
Eigen::VectorXd bayes_predict(const Eigen::VectorXd& beta, const SymMat& psi, const SymMat& sigma,
                              const UnitBlock& area,
                              const std::optional<Eigen::MatrixXd>& c = std::nullopt);

/// Second-order MSE matrix pieces for one area.
struct MsemBreakdown {
  SymMat g1;
  SymMat g2;
  SymMat g3;
  SymMat msem;   // g1 + g2 + 2 g3
  SymMat naive;  // g1 + g2 + g3
  bool non_psd = false;  // msem has a negative eigenvalue
};

struct AreaPrediction {
  std::string area_id;
  Eigen::Index area_index = 0;
  int n_units = 0;
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd target;  // the c_a used (k x s)
  bool psi_truncated = false;
  std::optional<MsemBreakdown> mse;
};

/// Which areas to predict, optionally with a user-supplied c_a.
struct PredictionTarget {
  Eigen::Index area = 0;
  std::optional<Eigen::MatrixXd> c;
};

struct EblupOptions {
  /// Replace Psi_hat by 0, giving the synthetic regression estimator.
  bool force_zero_psi = false;
};

struct EblupResult {
  FitResult fit;
  std::vector<AreaPrediction> predictions;
};

/// Full pipeline: estimate (Sigma, Psi), GLS fit at the estimates, EBLUP for
/// each target. An empty target list means every area with c_a = Rbar_a.
EblupResult eblup(const Dataset& data, const std::vector<PredictionTarget>& targets = {},
                  const EblupOptions& options = {});

/// EBLUP at externally supplied covariance components.
EblupResult eblup_with_components(const Dataset& data, const CovComponents& components,
                                  const std::vector<PredictionTarget>& targets = {},
                                  const EblupOptions& options = {});

}  // namespace mner
