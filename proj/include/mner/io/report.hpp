#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mner/blup.hpp"
#include "mner/dataset.hpp"
#include "mner/sim/study.hpp"
#include "mner/uncertainty.hpp"

namespace mner::io {

using Json = nlohmann::ordered_json;

/// Row-major nested array. Numbers keep full binary64 precision.
Json matrix_json(const Eigen::MatrixXd& a);
Eigen::MatrixXd matrix_from_json(const Json& j);

/// beta with names, beta_cov, covariance components and diagnostics.
Json fit_json(const FitResult& fit, const Dataset& data, const std::vector<std::string>& coefficient_names);
/// One row per coefficient: name, estimate, se.
void write_fit_csv(std::ostream& out, const FitResult& fit, const std::vector<std::string>& coefficient_names);

/// area, n, theta_1..k, msem_11.., g1_/g2_/g3_ flattened, smse_1..k,
/// truncated, non_psd. Predictions must carry their MSE breakdown.
void write_predictions_csv(std::ostream& out, const std::vector<AreaPrediction>& preds);
Json predictions_json(const std::vector<AreaPrediction>& preds);

struct IntervalRow {
  std::string area_id;
  int n_units = 0;
  double estimate = 0.0;  // ell' theta_hat
  IntervalPair pair;
};

void write_intervals_csv(std::ostream& out, const std::vector<IntervalRow>& rows);
Json intervals_json(const std::vector<IntervalRow>& rows, const Eigen::VectorXd& ell);

/// One row per (group, ell) with PRIAL, diagonal RB, CP and AL.
void write_sim_csv(std::ostream& out, const sim::SimMetrics& metrics);
Json sim_json(const sim::SimMetrics& metrics);
Json sim_config_json(const sim::SimConfig& config);

}  // namespace mner::io
