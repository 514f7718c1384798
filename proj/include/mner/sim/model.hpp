#pragma once

#include <Eigen/Dense>

#include "mner/dataset.hpp"
#include "mner/sim/config.hpp"
#include "mner/sim/seeding.hpp"
#include "mner/sym_mat.hpp"

namespace mner::sim {

/// Regressor skeleton for the configured design: per response d, an intercept
/// and one uniform(-1, 1) covariate, laid out block-diagonally so that
/// s = 2k. Covariates are drawn once from the design stream of the master
/// seed. Responses are zero.
Dataset build_design(const SimConfig& config);

/// rho v v' + (1 - rho) diag(v v'). Throws InvalidConfig if not PSD.
SymMat psi_from_rho(double rho, const Eigen::VectorXd& v);

/// A square root L with L L' = a: Cholesky when positive definite, otherwise
/// the symmetric eigenvalue root.
Eigen::MatrixXd psd_root(const SymMat& a);

/// m draws of v_i = root * w_i with E[w] = 0, Cov(w) = I:
///   Normal     w ~ N(0, I)
///   StudentT   w = sqrt(3/5) z / sqrt(u/5), u ~ chi2(5)
///   ChiSquare  w_d = (chi2_2 - 2) / 2 componentwise.
/// Rows are the effects.
Eigen::MatrixXd draw_effects(const Eigen::MatrixXd& root, int m, EffectDistribution dist,
                             Engine& rng);

struct Replicate {
  Dataset data;
  Eigen::MatrixXd theta;  // m x k, row i = Rbar_i beta + v_i
};

/// Draws data sets from the model with normal sampling errors.
class Generator {
 public:
  Generator(const SimConfig& config, Dataset design);

  Replicate draw(Engine& rng) const;

  const Dataset& design() const { return design_; }
  const SymMat& psi() const { return psi_; }
  const SymMat& sigma() const { return sigma_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  /// Rbar_i beta for every area (m x k).
  const Eigen::MatrixXd& area_means() const { return mean_; }

 private:
  Dataset design_;
  SymMat psi_;
  SymMat sigma_;
  Eigen::VectorXd beta_;
  Eigen::MatrixXd psi_root_;
  Eigen::MatrixXd sigma_root_;
  Eigen::MatrixXd mean_;
  EffectDistribution dist_;
};

}  // namespace mner::sim
