#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mner/sym_mat.hpp"
#include "mner/uncertainty.hpp"

namespace mner::sim {

enum class EffectDistribution { Normal, StudentT, ChiSquare };

/// Where the frozen uniform covariates live: one draw per (area, response),
/// shared by every unit of the area, or one draw per (unit, response).
enum class CovariateLevel { Area, Unit };

struct SimConfig {
  int k = 2;
  /// Area sizes n_i; group g of `group_sizes` is repeated `areas_per_group` times.
  std::vector<int> group_sizes{1, 4, 7, 10};
  int areas_per_group = 10;
  Eigen::VectorXd beta;        // length 2k
  double rho = 0.5;
  Eigen::VectorXd psi_vector;  // psi = rho v v' + (1 - rho) diag(v v')
  SymMat sigma;
  EffectDistribution effect_dist = EffectDistribution::Normal;
  CovariateLevel covariate_level = CovariateLevel::Area;
  int replications_a = 20000;  // truth MSEM phase
  int replications_b = 5000;   // estimator / interval phase
  std::uint64_t master_seed = 20180417;
  double alpha = 0.05;
  VarianceForm variance_form = VarianceForm::Printed;  // V inside z*
  unsigned workers = 0;  // 0: hardware concurrency
  /// Also simulate the BLUP at the true (Psi, Sigma) in phase A, to measure
  /// E[(theta_EB - theta_BLUP)(.)'].
  bool track_blup_gap = false;

  int m() const { return areas_per_group * static_cast<int>(group_sizes.size()); }
  std::vector<int> area_sizes() const;
  /// Group index (0-based) of each area.
  std::vector<int> area_groups() const;
  SymMat psi() const;
  /// Throws InvalidConfig on inconsistent settings.
  void validate() const;
};

/// The reference design for k in {2, 3}: m = 40 in four groups with
/// n_G = 3G - 2, beta and psi-vector presets, Sigma = I.
SimConfig study_config(int k, double rho, EffectDistribution dist);

/// Named presets "<scale>-k<2|3>-rho<025|05|075>-<normal|t|chisq>", with
/// scale one of full (50000/5000 replications), desk (20000/5000) or
/// smoke (2000/1000).
SimConfig preset(const std::string& name);
std::vector<std::string> preset_names();

std::string to_string(EffectDistribution d);
EffectDistribution parse_distribution(const std::string& s);

}  // namespace mner::sim
