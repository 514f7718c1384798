#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mner/uncertainty.hpp"

namespace mner::io {

enum class TargetSource { SampleMean, File };

/// Settings for fit / predict / interval runs. Read from an INI-style file:
///
///   [data]
///   input     = plp.csv          ; unit-level CSV
///   area      = station          ; area-id column
///   responses = y1, y2, y3       ; k response columns
///
///   [covariates]                 ; per-response covariate columns; an
///   y1  = FAR, T, D              ; intercept is always added. "all" applies
///   all = FAR, T, D              ; to responses without their own entry.
///
///   [estimation]
///   alpha       = 0.05
///   target      = sample_mean    ; or "file"
///   target_file = targets.csv    ; area column plus c_11, c_12, ... (k x s)
///   ell         = 1, 1, 1
///   seed        = 12345          ; recorded in the run log
///   v_form      = printed        ; or "delta": which V enters z*
///
///   [output]
///   dir = results
///
/// ';' or '#' starts a comment. Unknown sections and keys are rejected.
/// load_run_config resolves relative input and target_file paths against
/// the directory of the config file.
struct RunConfig {
  std::string input;
  std::string area_column;
  std::vector<std::string> responses;
  std::vector<std::vector<std::string>> covariates;  // one list per response
  double alpha = 0.05;
  TargetSource target = TargetSource::SampleMean;
  std::string target_file;
  std::vector<double> ell;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  VarianceForm v_form = VarianceForm::Printed;

  /// Throws InvalidConfig if k = 0, a response has no covariates, or a field
  /// is inconsistent.
  void validate() const;
};

RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);

/// Comma-separated list with surrounding whitespace stripped.
std::vector<std::string> split_list(const std::string& s);

}  // namespace mner::io
