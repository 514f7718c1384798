#include "mner/io/report.hpp"

#include <cmath>
#include <ostream>

#include "mner/errors.hpp"
#include "mner/io/csv.hpp"

namespace mner::io {

namespace {

void append_flat(std::vector<std::string>& cells, const Eigen::MatrixXd& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) cells.push_back(format_double(a(i, j)));
  }
}

void append_flat_names(std::vector<std::string>& cells, const std::string& prefix, Eigen::Index rows,
                       Eigen::Index cols) {
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) cells.push_back(prefix + "_" + matrix_suffix(i + 1, j + 1));
  }
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

const MsemBreakdown& breakdown(const AreaPrediction& p) {
  if (!p.mse) throw InvalidInput("prediction for area '" + p.area_id + "' has no MSE breakdown");
  return *p.mse;
}

Json interval_json(const IntervalResult& r) {
  return Json{{"lower", r.lower},     {"upper", r.upper},           {"z", r.z_star},
              {"v_hat", r.v_hat},     {"msem", r.msem_scalar},      {"alpha", r.alpha},
              {"method", to_string(r.method)}};
}

}  // namespace

Json matrix_json(const Eigen::MatrixXd& a) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw InvalidInput("expected a nested array");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.front().size()));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != a.cols()) throw InvalidInput("ragged matrix");
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return a;
}

Json fit_json(const FitResult& fit, const Dataset& data, const std::vector<std::string>& names) {
  Json beta = Json::object();
  for (Eigen::Index i = 0; i < fit.beta.size(); ++i) {
    const std::string name = i < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(i)]
                                                                           : "b" + std::to_string(i + 1);
    beta[name] = fit.beta(i);
  }
  Json out{{"m", data.m()},
           {"N", data.total_units()},
           {"k", data.k()},
           {"s", data.s()},
           {"beta", std::move(beta)},
           {"beta_cov", matrix_json(fit.beta_cov)},
           {"psi", matrix_json(fit.psi.matrix())},
           {"sigma", matrix_json(fit.sigma.matrix())}};
  if (fit.components) {
    const CovComponents& c = *fit.components;
    out["sigma_hat"] = matrix_json(c.sigma_hat.matrix());
    out["psi0"] = matrix_json(c.psi0.matrix());
    out["psi1"] = matrix_json(c.psi1.matrix());
    out["psi_hat"] = matrix_json(c.psi_hat.matrix());
    out["s0"] = c.s0;
    out["truncated"] = c.truncated;
    out["psi1_eigenvalues"] = vector_json(c.eigenvalues);
  }
  Json areas = Json::array();
  for (Eigen::Index i = 0; i < data.m(); ++i) {
    areas.push_back({{"area", data.area_ids()[static_cast<std::size_t>(i)]}, {"n", data.area(i).n_units()}});
  }
  out["areas"] = std::move(areas);
  return out;
}

void write_fit_csv(std::ostream& out, const FitResult& fit, const std::vector<std::string>& names) {
  write_csv_row(out, {"coefficient", "estimate", "se"});
  for (Eigen::Index i = 0; i < fit.beta.size(); ++i) {
    const std::string name = i < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(i)]
                                                                           : "b" + std::to_string(i + 1);
    write_csv_row(out, {name, format_double(fit.beta(i)), format_double(std::sqrt(fit.beta_cov(i, i)))});
  }
}

void write_predictions_csv(std::ostream& out, const std::vector<AreaPrediction>& preds) {
  if (preds.empty()) return;
  const Eigen::Index k = preds.front().theta_hat.size();
  std::vector<std::string> header{"area", "n"};
  for (Eigen::Index d = 0; d < k; ++d) header.push_back("theta_" + std::to_string(d + 1));
  for (const char* p : {"msem", "g1", "g2", "g3", "naive"}) append_flat_names(header, p, k, k);
  for (Eigen::Index d = 0; d < k; ++d) header.push_back("smse_" + std::to_string(d + 1));
  header.push_back("truncated");
  header.push_back("non_psd");
  write_csv_row(out, header);

  for (const auto& p : preds) {
    const MsemBreakdown& b = breakdown(p);
    std::vector<std::string> row{p.area_id, std::to_string(p.n_units)};
    for (Eigen::Index d = 0; d < k; ++d) row.push_back(format_double(p.theta_hat(d)));
    for (const SymMat* m : {&b.msem, &b.g1, &b.g2, &b.g3, &b.naive}) append_flat(row, m->matrix());
    for (Eigen::Index d = 0; d < k; ++d) row.push_back(format_double(std::sqrt(std::max(b.msem(d, d), 0.0))));
    row.push_back(p.psi_truncated ? "true" : "false");
    row.push_back(b.non_psd ? "true" : "false");
    write_csv_row(out, row);
  }
}

Json predictions_json(const std::vector<AreaPrediction>& preds) {
  Json out = Json::array();
  for (const auto& p : preds) {
    const MsemBreakdown& b = breakdown(p);
    Json smse = Json::array();
    for (Eigen::Index d = 0; d < b.msem.dim(); ++d) smse.push_back(std::sqrt(std::max(b.msem(d, d), 0.0)));
    out.push_back({{"area", p.area_id},
                   {"n", p.n_units},
                   {"theta", vector_json(p.theta_hat)},
                   {"msem", matrix_json(b.msem.matrix())},
                   {"g1", matrix_json(b.g1.matrix())},
                   {"g2", matrix_json(b.g2.matrix())},
                   {"g3", matrix_json(b.g3.matrix())},
                   {"naive", matrix_json(b.naive.matrix())},
                   {"smse", std::move(smse)},
                   {"truncated", p.psi_truncated},
                   {"non_psd", b.non_psd}});
  }
  return out;
}

void write_intervals_csv(std::ostream& out, const std::vector<IntervalRow>& rows) {
  write_csv_row(out, {"area", "n", "estimate", "lower", "upper", "z_star", "naive_lower", "naive_upper", "z",
                      "v_hat", "msem_scalar", "truncated"});
  for (const auto& r : rows) {
    const auto& c = r.pair.corrected;
    const auto& nv = r.pair.naive;
    write_csv_row(out, {r.area_id, std::to_string(r.n_units), format_double(r.estimate), format_double(c.lower),
                        format_double(c.upper), format_double(c.z_star), format_double(nv.lower),
                        format_double(nv.upper), format_double(nv.z_star), format_double(c.v_hat),
                        format_double(c.msem_scalar), r.pair.psi_truncated ? "true" : "false"});
  }
}

Json intervals_json(const std::vector<IntervalRow>& rows, const Eigen::VectorXd& ell) {
  Json list = Json::array();
  for (const auto& r : rows) {
    list.push_back({{"area", r.area_id},
                    {"n", r.n_units},
                    {"estimate", r.estimate},
                    {"corrected", interval_json(r.pair.corrected)},
                    {"naive", interval_json(r.pair.naive)},
                    {"truncated", r.pair.psi_truncated}});
  }
  return Json{{"ell", vector_json(ell)}, {"intervals", std::move(list)}};
}

void write_sim_csv(std::ostream& out, const sim::SimMetrics& metrics) {
  const Eigen::Index k = metrics.config.k;
  std::vector<std::string> header{"group", "n", "ell", "prial_direct", "prial_univariate"};
  for (Eigen::Index d = 0; d < k; ++d) header.push_back("rb_corrected_" + matrix_suffix(d + 1, d + 1));
  for (Eigen::Index d = 0; d < k; ++d) header.push_back("rb_naive_" + matrix_suffix(d + 1, d + 1));
  for (const char* h : {"cp_naive", "cp_corrected", "al_naive", "al_corrected"}) header.emplace_back(h);
  write_csv_row(out, header);

  for (const auto& cell : metrics.intervals) {
    const auto& g = metrics.groups[static_cast<std::size_t>(cell.group)];
    std::vector<std::string> row{"G" + std::to_string(g.group + 1), std::to_string(g.n), cell.ell_label,
                                 format_double(g.prial_direct), format_double(g.prial_univariate)};
    for (Eigen::Index d = 0; d < k; ++d) row.push_back(format_double(g.rb_corrected(d, d)));
    for (Eigen::Index d = 0; d < k; ++d) row.push_back(format_double(g.rb_naive(d, d)));
    for (const double x : {cell.cp_naive, cell.cp_corrected, cell.al_naive, cell.al_corrected}) {
      row.push_back(format_double(x));
    }
    write_csv_row(out, row);
  }
}

Json sim_config_json(const sim::SimConfig& c) {
  return Json{{"k", c.k},
              {"group_sizes", c.group_sizes},
              {"areas_per_group", c.areas_per_group},
              {"beta", vector_json(c.beta)},
              {"rho", c.rho},
              {"psi_vector", vector_json(c.psi_vector)},
              {"sigma", matrix_json(c.sigma.matrix())},
              {"effects", sim::to_string(c.effect_dist)},
              {"covariates", c.covariate_level == sim::CovariateLevel::Area ? "area" : "unit"},
              {"replications_a", c.replications_a},
              {"replications_b", c.replications_b},
              {"seed", c.master_seed},
              {"alpha", c.alpha},
              {"v_form", to_string(c.variance_form)},
              {"track_blup_gap", c.track_blup_gap}};
}

Json sim_json(const sim::SimMetrics& m) {
  Json groups = Json::array();
  for (const auto& g : m.groups) {
    groups.push_back({{"group", "G" + std::to_string(g.group + 1)},
                      {"n", g.n},
                      {"prial_direct", g.prial_direct},
                      {"prial_univariate", g.prial_univariate},
                      {"rb_corrected", matrix_json(g.rb_corrected)},
                      {"rb_naive", matrix_json(g.rb_naive)}});
  }
  Json cells = Json::array();
  for (const auto& c : m.intervals) {
    cells.push_back({{"group", "G" + std::to_string(c.group + 1)},
                     {"ell", c.ell_label},
                     {"cp_naive", c.cp_naive},
                     {"cp_corrected", c.cp_corrected},
                     {"al_naive", c.al_naive},
                     {"al_corrected", c.al_corrected}});
  }
  auto mean_se = [](const sim::MeanWithError& x) {
    return Json{{"mean", matrix_json(x.mean)}, {"se", matrix_json(x.se)}};
  };
  return Json{{"config", sim_config_json(m.config)},
              {"replications_a", m.replications_a},
              {"replications_b", m.replications_b},
              {"failures_a", m.failures_a},
              {"failures_b", m.failures_b},
              {"truncation_frequency", m.truncation_frequency},
              {"psi_true", matrix_json(m.psi_true)},
              {"sigma_hat", mean_se(m.sigma_hat)},
              {"psi0", mean_se(m.psi0)},
              {"psi_hat", mean_se(m.psi_hat)},
              {"groups", std::move(groups)},
              {"intervals", std::move(cells)}};
}

}  // namespace mner::io
