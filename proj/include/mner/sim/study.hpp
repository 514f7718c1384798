#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mner/sim/config.hpp"

namespace mner::sim {

struct AreaMetrics {
  int group = 0;
  int n = 0;
  Eigen::MatrixXd msem_true;       // simulated MSEM of the EBLUP (phase A)
  Eigen::MatrixXd mse_direct;      // of the sample mean ybar_a
  Eigen::MatrixXd mse_univariate;  // of the componentwise univariate EBLUP
  Eigen::MatrixXd blup_gap;        // E[(EB - BLUP)(EB - BLUP)'] when tracked
  double prial_direct = 0.0;
  double prial_univariate = 0.0;
  Eigen::MatrixXd rb_corrected;  // percent, elementwise
  Eigen::MatrixXd rb_naive;
};

struct GroupMetrics {
  int group = 0;
  int n = 0;
  double prial_direct = 0.0;
  double prial_univariate = 0.0;
  Eigen::MatrixXd rb_corrected;
  Eigen::MatrixXd rb_naive;
};

struct IntervalCell {
  int group = 0;
  std::string ell_label;  // "e1", ..., "ones"
  double cp_naive = 0.0;
  double cp_corrected = 0.0;
  double al_naive = 0.0;
  double al_corrected = 0.0;
};

/// Elementwise Monte Carlo mean and its standard error.
struct MeanWithError {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd se;
};

struct SimMetrics {
  SimConfig config;
  std::vector<AreaMetrics> areas;
  std::vector<GroupMetrics> groups;
  std::vector<IntervalCell> intervals;
  long replications_a = 0;  // successful
  long replications_b = 0;
  long failures_a = 0;
  long failures_b = 0;
  double truncation_frequency = 0.0;
  Eigen::MatrixXd psi_true;
  MeanWithError sigma_hat;  // phase A
  MeanWithError psi0;
  MeanWithError psi_hat;
};

/// 100 (1 - tr(a) / tr(b)).
double prial(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// 100 (estimate - truth) / truth, elementwise.
Eigen::MatrixXd relative_bias(const Eigen::MatrixXd& mean_estimate, const Eigen::MatrixXd& truth);

/// Two-phase Monte Carlo study. Phase A (replications_a) estimates the true
/// MSEM of the EBLUP, the sample mean and the univariate EBLUP; phase B
/// (replications_b) evaluates the msem estimators against it and the
/// coverage of naive and corrected intervals. Replications failing with a
/// numerical error are skipped; more than 1% failures aborts with
/// StudyAborted. Results are bitwise reproducible for a given master seed,
/// whatever the worker count.
SimMetrics run_study(const SimConfig& config);

/// Labels of the interval directions evaluated: e1..ek, then "ones".
std::vector<std::string> ell_labels(int k);
std::vector<Eigen::VectorXd> ell_vectors(int k);

}  // namespace mner::sim
