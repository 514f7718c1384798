#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mner/dataset.hpp"
#include "mner/sim/config.hpp"
#include "mner/sym_mat.hpp"

namespace mner::sim {

/// Largest N*k the dense oracle will materialize.
inline constexpr Eigen::Index kDenseOracleLimit = 600;

struct DenseGls {
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_cov;
};

/// GLS through the explicit Nk x Nk block-diagonal covariance. Throws
/// OracleTooLarge when N*k exceeds kDenseOracleLimit.
DenseGls dense_gls_oracle(const Dataset& data, const SymMat& psi, const SymMat& sigma);

/// Univariate nested-error data for one area: responses and covariate rows.
struct ScalarArea {
  std::vector<double> y;
  std::vector<std::vector<double>> x;  // x[j] has p entries
};

struct ScalarPipeline {
  double sigma2 = 0.0;
  double psi0 = 0.0;
  double psi1 = 0.0;
  double psi = 0.0;  // max(psi1, 0)
  bool truncated = false;
  int s0 = 0;
  std::vector<double> beta;
  std::vector<double> theta;    // EBLUP per area, target xbar_a
  std::vector<double> g1, g2, g3, msem;
  std::vector<double> v;        // V at ell = 1, floored at 0
  std::vector<double> z_star;
  std::vector<double> lower, upper;
};

/// Independent scalar implementation of the whole pipeline (estimation,
/// EBLUP, MSE, corrected interval) on plain std::vector arithmetic. With
/// `fixed` = (psi, sigma2) the estimation step is skipped and those values
/// are used as plug-ins.
ScalarPipeline univariate_eblup_oracle(const std::vector<ScalarArea>& areas, double alpha = 0.05,
                                       std::optional<std::pair<double, double>> fixed = {});

/// Component d of a multivariate data set as univariate data, keeping the
/// regressor columns that are non-zero in row d of some R_ij.
std::vector<ScalarArea> component_data(const Dataset& data, Eigen::Index d);

/// Monte Carlo estimate of E[psi0] - Psi on the design of `config`, next to
/// the closed-form value at the true (Psi, Sigma).
struct BiasCheck {
  Eigen::MatrixXd formula;
  Eigen::MatrixXd plain_mean;  // mean of psi0 - Psi
  Eigen::MatrixXd plain_se;
  /// Mean of psi0 - N^{-1} sum_ij u_ij u_ij' + Sigma, where u_ij = y_ij - R_ij beta
  /// are the true composite errors. Same expectation as psi0 - Psi, since
  /// E[u u'] = Psi + Sigma by construction, but with most of the noise of
  /// the raw second moment cancelled replicate by replicate.
  Eigen::MatrixXd controlled_mean;
  Eigen::MatrixXd controlled_se;
  long replications = 0;

  /// max |controlled_mean - formula| / controlled_se over entries.
  double max_z() const;
};

/// Normal effects and errors on a fixed design. Replicate r uses the oracle
/// stream of `seed`, so results do not depend on the worker count.
BiasCheck bias_monte_carlo(const Dataset& design, const SymMat& psi, const SymMat& sigma,
                           const Eigen::VectorXd& beta, long replications, std::uint64_t seed,
                           unsigned workers = 0);
/// Same on the simulation design of `config` (its effect distribution is used).
BiasCheck bias_monte_carlo(const SimConfig& config, long replications, unsigned workers = 0);

/// Largest relative error of gls_fit (beta and its covariance) against the
/// dense oracle over random instances with m in [2, 8], k in [1, 3], area
/// sizes in [1, 5] and one covariate per response.
double gls_equivalence_error(std::uint64_t seed, int instances = 100);

/// Largest relative error of the k = 1 pipeline (psi-hat, EBLUP, msem,
/// corrected interval) against the univariate oracle, on one replicate of
/// the first response of the m = 40 simulation design.
double scalar_reduction_error(std::uint64_t seed);

}  // namespace mner::sim
