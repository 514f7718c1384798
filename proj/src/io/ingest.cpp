#include "mner/io/ingest.hpp"

#include <unordered_map>

#include "mner/errors.hpp"
#include "mner/io/csv.hpp"

namespace mner::io {

namespace {

long require_column(const CsvTable& t, const std::string& name) {
  const long c = t.column(name);
  if (c < 0) throw MissingColumn("'" + name + "'");
  return c;
}

double numeric_cell(const CsvTable& t, std::size_t row, long col) {
  double x = 0.0;
  if (!parse_double(t.rows[row][static_cast<std::size_t>(col)], x)) {
    // row numbers count the header as line 1
    throw NonNumericCell("row " + std::to_string(row + 2) + ", column '" + t.header[static_cast<std::size_t>(col)] +
                         "': '" + t.rows[row][static_cast<std::size_t>(col)] + "'");
  }
  return x;
}

}  // namespace

Ingested ingest_table(const CsvTable& table, const RunConfig& config) {
  config.validate();
  const long area_col = require_column(table, config.area_column);
  const auto k = static_cast<Eigen::Index>(config.responses.size());

  std::vector<long> y_cols;
  std::vector<std::vector<long>> x_cols;
  std::vector<std::string> names;
  for (std::size_t d = 0; d < config.responses.size(); ++d) {
    y_cols.push_back(require_column(table, config.responses[d]));
    names.push_back(config.responses[d] + ":(Intercept)");
    std::vector<long> cols;
    for (const auto& c : config.covariates[d]) {
      cols.push_back(require_column(table, c));
      names.push_back(config.responses[d] + ":" + c);
    }
    x_cols.push_back(std::move(cols));
  }
  const auto s = static_cast<Eigen::Index>(names.size());

  std::vector<std::string> ids;
  std::vector<std::vector<std::size_t>> members;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string id = table.rows[r][static_cast<std::size_t>(area_col)];
    const auto b = id.find_first_not_of(" \t");
    if (b == std::string::npos) throw EmptyArea("row " + std::to_string(r + 2) + " has a blank area id");
    id = id.substr(b, id.find_last_not_of(" \t") - b + 1);
    auto [it, fresh] = slot.emplace(id, ids.size());
    if (fresh) {
      ids.push_back(id);
      members.emplace_back();
    }
    members[it->second].push_back(r);
  }
  if (ids.size() < 2) throw InvalidInput("need at least two areas, found " + std::to_string(ids.size()));

  std::vector<UnitBlock> blocks;
  blocks.reserve(ids.size());
  for (const auto& rows : members) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd y(n, k);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n * k, s);
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::size_t row = rows[static_cast<std::size_t>(j)];
      Eigen::Index col = 0;
      for (Eigen::Index d = 0; d < k; ++d) {
        y(j, d) = numeric_cell(table, row, y_cols[static_cast<std::size_t>(d)]);
        r(j * k + d, col++) = 1.0;
        for (const long c : x_cols[static_cast<std::size_t>(d)]) r(j * k + d, col++) = numeric_cell(table, row, c);
      }
    }
    blocks.emplace_back(std::move(y), std::move(r));
  }
  return {Dataset(std::move(blocks), std::move(ids)), std::move(names)};
}

Ingested ingest_csv(const std::string& path, const RunConfig& config) {
  return ingest_table(read_csv_file(path), config);
}

std::map<std::string, Eigen::MatrixXd> read_targets(const std::string& path, const std::string& area_column,
                                                    Eigen::Index k, Eigen::Index s) {
  const CsvTable t = read_csv_file(path);
  const long area_col = require_column(t, area_column);
  std::vector<long> cols;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) cols.push_back(require_column(t, "c_" + matrix_suffix(i + 1, j + 1)));
  }
  std::map<std::string, Eigen::MatrixXd> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Eigen::MatrixXd c(k, s);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < s; ++j) c(i, j) = numeric_cell(t, r, cols[static_cast<std::size_t>(i * s + j)]);
    }
    if (!out.emplace(t.rows[r][static_cast<std::size_t>(area_col)], std::move(c)).second) {
      throw InvalidInput("target file lists area '" + t.rows[r][static_cast<std::size_t>(area_col)] + "' twice");
    }
  }
  return out;
}

}  // namespace mner::io
