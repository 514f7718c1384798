#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mner/dataset.hpp"
#include "mner/io/csv.hpp"
#include "mner/io/run_config.hpp"

namespace mner::io {

struct Ingested {
  Dataset data;
  /// Coefficient names, "<response>:(Intercept)" then "<response>:<covariate>".
  std::vector<std::string> coefficient_names;
};

/// Groups rows by area id in order of first appearance and builds R_ij as
/// block-diagonal rows (1, x_ij^(d)') per response d.
/// Throws MissingColumn, NonNumericCell, EmptyArea, InvalidInput.
Ingested ingest_table(const CsvTable& table, const RunConfig& config);
Ingested ingest_csv(const std::string& path, const RunConfig& config);

/// Per-area target matrices c_a (k x s) from a CSV with the area column and
/// c_11, c_12, ... in row-major order. Areas absent from the file are
/// omitted from the map.
std::map<std::string, Eigen::MatrixXd> read_targets(const std::string& path, const std::string& area_column,
                                                    Eigen::Index k, Eigen::Index s);

}  // namespace mner::io
