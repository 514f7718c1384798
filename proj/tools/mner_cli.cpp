// Command-line front end: fit, predict, interval, simulate, validate.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <map>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mner/blup.hpp"
#include "mner/errors.hpp"
#include "mner/io/csv.hpp"
#include "mner/io/ingest.hpp"
#include "mner/io/report.hpp"
#include "mner/io/run_config.hpp"
#include "mner/sim/config.hpp"
#include "mner/sim/model.hpp"
#include "mner/sim/oracles.hpp"
#include "mner/sim/study.hpp"
#include "mner/uncertainty.hpp"
#include "mner/version.hpp"

namespace fs = std::filesystem;
using mner::io::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitValidation = 4;

struct Options {
  std::string input;
  std::string config;
  double alpha = 0.05;
  std::string ell;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  std::string preset = "desk-k2-rho05-normal";
  std::optional<int> reps_a;
  std::optional<int> reps_b;
  std::string out;
  std::string format = "csv";
  bool error_json = false;
  std::string v_form;
  long validate_reps = 200000;
};

struct Loaded {
  mner::io::RunConfig config;
  mner::io::Ingested data;
};

std::string output_dir(const Options& o, const std::string& from_config) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("MNER_OUTPUT_DIR"); env && *env) return env;
  return from_config.empty() ? "." : from_config;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw mner::InvalidInput("cannot write '" + path.string() + "'");
  return f;
}

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Every run leaves a log with the exact settings it used.
void write_log(const fs::path& dir, const std::string& command, const Json& settings) {
  Json log{{"command", command}, {"version", mner::kVersion}, {"time", timestamp()}, {"settings", settings}};
  open_out(dir / (command + ".log.json")) << log.dump(2) << '\n';
}

Json run_config_json(const mner::io::RunConfig& c, const Options& o) {
  return Json{{"input", c.input},
              {"config_file", o.config},
              {"area", c.area_column},
              {"responses", c.responses},
              {"covariates", c.covariates},
              {"alpha", c.alpha},
              {"target", c.target == mner::io::TargetSource::File ? "file" : "sample_mean"},
              {"target_file", c.target_file},
              {"ell", c.ell},
              {"seed", c.seed ? Json(*c.seed) : Json(nullptr)},
              {"v_form", mner::to_string(c.v_form)},
              {"format", o.format}};
}

Loaded load(const Options& o) {
  mner::io::RunConfig c;
  if (!o.config.empty()) c = mner::io::load_run_config(o.config);
  if (!o.input.empty()) c.input = o.input;
  if (o.alpha != 0.05) c.alpha = o.alpha;
  if (o.seed) c.seed = o.seed;
  if (!o.v_form.empty()) c.v_form = mner::variance_form_from_string(o.v_form);
  if (!o.ell.empty()) {
    c.ell.clear();
    for (const auto& item : mner::io::split_list(o.ell)) {
      double x = 0.0;
      if (!mner::io::parse_double(item, x)) throw mner::InvalidConfig("--ell entry '" + item + "' is not a number");
      c.ell.push_back(x);
    }
  }
  c.validate();
  auto data = mner::io::ingest_csv(c.input, c);
  std::clog << "read " << c.input << ": m=" << data.data.m() << " N=" << data.data.total_units()
            << " k=" << data.data.k() << " s=" << data.data.s() << '\n';
  return {std::move(c), std::move(data)};
}

std::vector<mner::PredictionTarget> targets(const Loaded& l) {
  std::vector<mner::PredictionTarget> out;
  const auto& d = l.data.data;
  std::map<std::string, Eigen::MatrixXd> from_file;
  if (l.config.target == mner::io::TargetSource::File) {
    from_file = mner::io::read_targets(l.config.target_file, l.config.area_column, d.k(), d.s());
  }
  for (Eigen::Index i = 0; i < d.m(); ++i) {
    mner::PredictionTarget t{i, std::nullopt};
    if (auto it = from_file.find(d.area_ids()[static_cast<std::size_t>(i)]); it != from_file.end()) t.c = it->second;
    out.push_back(std::move(t));
  }
  return out;
}

mner::EblupResult predict_all(const Loaded& l) {
  mner::EblupResult res = mner::eblup(l.data.data, targets(l));
  const auto sizes = l.data.data.area_sizes();
  const mner::SizeProfile profile(sizes);
  for (auto& p : res.predictions) mner::msem_estimate(res.fit, profile, p);
  return res;
}

fs::path prepare_dir(const Options& o, const std::string& from_config) {
  const fs::path dir = output_dir(o, from_config);
  fs::create_directories(dir);
  return dir;
}

void check_format(const Options& o) {
  if (o.format != "csv" && o.format != "json") throw mner::InvalidConfig("--format must be csv or json");
}

int cmd_fit(const Options& o) {
  check_format(o);
  const Loaded l = load(o);
  const fs::path dir = prepare_dir(o, l.config.output_dir);
  const mner::EblupResult res = mner::eblup(l.data.data);
  const Json j = mner::io::fit_json(res.fit, l.data.data, l.data.coefficient_names);
  open_out(dir / "fit.json") << j.dump(2) << '\n';
  if (o.format == "csv") {
    auto f = open_out(dir / "fit.csv");
    mner::io::write_fit_csv(f, res.fit, l.data.coefficient_names);
  }
  write_log(dir, "fit", run_config_json(l.config, o));
  if (res.fit.components && res.fit.components->truncated) std::clog << "note: Psi estimate was truncated\n";
  std::cout << (dir / "fit.json").string() << '\n';
  return kExitOk;
}

int cmd_predict(const Options& o) {
  check_format(o);
  const Loaded l = load(o);
  const fs::path dir = prepare_dir(o, l.config.output_dir);
  const mner::EblupResult res = predict_all(l);
  const fs::path path = dir / (o.format == "csv" ? "predict.csv" : "predict.json");
  auto f = open_out(path);
  if (o.format == "csv") {
    mner::io::write_predictions_csv(f, res.predictions);
  } else {
    f << mner::io::predictions_json(res.predictions).dump(2) << '\n';
  }
  write_log(dir, "predict", run_config_json(l.config, o));
  std::cout << path.string() << '\n';
  return kExitOk;
}

int cmd_interval(const Options& o) {
  check_format(o);
  const Loaded l = load(o);
  const fs::path dir = prepare_dir(o, l.config.output_dir);
  const auto& d = l.data.data;
  Eigen::VectorXd ell = Eigen::VectorXd::Unit(d.k(), 0);
  if (!l.config.ell.empty()) ell = Eigen::Map<const Eigen::VectorXd>(l.config.ell.data(), d.k());
  const mner::EblupResult res = predict_all(l);
  const auto sizes = d.area_sizes();
  const mner::SizeProfile profile(sizes);
  std::vector<mner::io::IntervalRow> rows;
  for (const auto& p : res.predictions) {
    rows.push_back({p.area_id, p.n_units, ell.dot(p.theta_hat),
                    mner::corrected_interval(p, ell, l.config.alpha, res.fit, profile, l.config.v_form)});
  }
  const fs::path path = dir / (o.format == "csv" ? "interval.csv" : "interval.json");
  auto f = open_out(path);
  if (o.format == "csv") {
    mner::io::write_intervals_csv(f, rows);
  } else {
    f << mner::io::intervals_json(rows, ell).dump(2) << '\n';
  }
  Json settings = run_config_json(l.config, o);
  settings["ell_used"] = std::vector<double>(ell.data(), ell.data() + ell.size());
  write_log(dir, "interval", settings);
  std::cout << path.string() << '\n';
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  check_format(o);
  mner::sim::SimConfig c = mner::sim::preset(o.preset);
  if (o.seed) c.master_seed = *o.seed;
  if (o.reps_a) c.replications_a = *o.reps_a;
  if (o.reps_b) c.replications_b = *o.reps_b;
  if (o.alpha != 0.05) c.alpha = o.alpha;
  if (!o.v_form.empty()) c.variance_form = mner::variance_form_from_string(o.v_form);
  c.workers = o.workers;
  c.validate();
  const fs::path dir = prepare_dir(o, "");
  const auto t0 = std::chrono::steady_clock::now();
  const mner::sim::SimMetrics m = mner::sim::run_study(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json summary = mner::io::sim_json(m);
  summary["preset"] = o.preset;
  summary["seconds"] = secs;
  open_out(dir / "simulate.json") << summary.dump(2) << '\n';
  if (o.format == "csv") {
    auto f = open_out(dir / "simulate.csv");
    mner::io::write_sim_csv(f, m);
  }
  Json settings = mner::io::sim_config_json(c);
  settings["preset"] = o.preset;
  settings["workers"] = o.workers;
  write_log(dir, "simulate", settings);
  std::cout << (dir / "simulate.json").string() << '\n';
  return kExitOk;
}

int cmd_validate(const Options& o) {
  const fs::path dir = prepare_dir(o, "");
  const std::uint64_t seed = o.seed.value_or(20180417);
  Json report = Json::object();
  bool ok = true;

  // Dense versus structured GLS.
  {
    const double worst = mner::sim::gls_equivalence_error(seed);
    const bool pass = worst < 1e-10;
    ok = ok && pass;
    report["dense_gls"] = {{"max_relative_error", worst}, {"tolerance", 1e-10}, {"pass", pass}};
    std::cout << (pass ? "PASS" : "FAIL") << "  dense GLS equivalence  max rel err " << worst << '\n';
  }

  // Scalar reduction: k = 1 pipeline against the plain univariate code.
  {
    const double worst = mner::sim::scalar_reduction_error(seed);
    const bool pass = worst < 1e-12;
    ok = ok && pass;
    report["scalar_reduction"] = {{"max_relative_error", worst}, {"tolerance", 1e-12}, {"pass", pass}};
    std::cout << (pass ? "PASS" : "FAIL") << "  scalar reduction       max rel err " << worst << '\n';
  }

  // Closed-form bias of the moment estimator against simulation.
  {
    mner::sim::SimConfig c = mner::sim::study_config(2, 0.5, mner::sim::EffectDistribution::Normal);
    c.group_sizes = {1, 4, 7, 10, 1, 4, 7, 10, 4, 7};
    c.areas_per_group = 1;
    c.master_seed = seed;
    const auto check = mner::sim::bias_monte_carlo(c, o.validate_reps, o.workers);
    const bool pass = check.max_z() < 3.0;
    ok = ok && pass;
    report["bias_monte_carlo"] = {{"replications", check.replications},
                                  {"formula", mner::io::matrix_json(check.formula)},
                                  {"mc_mean", mner::io::matrix_json(check.controlled_mean)},
                                  {"mc_se", mner::io::matrix_json(check.controlled_se)},
                                  {"max_z", check.max_z()},
                                  {"pass", pass}};
    std::cout << (pass ? "PASS" : "FAIL") << "  bias vs Monte Carlo    max |z| " << check.max_z() << " ("
              << check.replications << " replications)\n";
  }

  open_out(dir / "validate.json") << report.dump(2) << '\n';
  write_log(dir, "validate", Json{{"seed", seed}, {"replications", o.validate_reps}, {"workers", o.workers}});
  return ok ? kExitOk : kExitValidation;
}

int exit_code(mner::ErrorKind k) {
  switch (k) {
    case mner::ErrorKind::Input: return kExitInput;
    case mner::ErrorKind::Numerical: return kExitNumerical;
    case mner::ErrorKind::Validation: return kExitValidation;
  }
  return kExitInput;
}

void report_error(const Options& o, const std::string& code, const std::string& what, int status) {
  std::cerr << "error: " << what << '\n';
  if (o.error_json) std::cout << Json{{"error", code}, {"message", what}, {"exit_code", status}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate nested-error regression: estimation, prediction and intervals"};
  app.set_version_flag("--version", std::string(mner::kVersion));
  app.require_subcommand(1);
  Options o;

  auto add_data_flags = [&o](CLI::App* sub) {
    sub->add_option("--input", o.input, "Unit-level CSV (overrides [data] input)");
    sub->add_option("--config", o.config, "Run configuration file");
    sub->add_option("--alpha", o.alpha, "Nominal non-coverage")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--seed", o.seed, "Seed recorded in the run log");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--error-json", o.error_json, "Print errors as JSON on stdout");
  };

  auto* fit = app.add_subcommand("fit", "Estimate beta, Sigma and Psi");
  add_data_flags(fit);
  auto* predict = app.add_subcommand("predict", "EBLUP and MSE matrix per area");
  add_data_flags(predict);
  auto* interval = app.add_subcommand("interval", "Naive and corrected intervals for ell' theta");
  add_data_flags(interval);
  interval->add_option("--ell", o.ell, "Comma list of k weights (default e1)");
  interval->add_option("--v-form", o.v_form, "V inside z*: printed or delta")
      ->check(CLI::IsMember({"printed", "delta"}));

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study from a preset");
  simulate->add_option("--preset", o.preset, "Scenario preset")->check(CLI::IsMember(mner::sim::preset_names()));
  simulate->add_option("--seed", o.seed, "Master seed");
  simulate->add_option("--workers", o.workers, "Worker threads (0: all cores)");
  simulate->add_option("--alpha", o.alpha, "Nominal non-coverage")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--v-form", o.v_form, "V inside z*: printed or delta")
      ->check(CLI::IsMember({"printed", "delta"}));
  simulate->add_option("--reps-a", o.reps_a, "Phase A replications");
  simulate->add_option("--reps-b", o.reps_b, "Phase B replications");
  simulate->add_option("--out", o.out, "Output directory");
  simulate->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  simulate->add_flag("--error-json", o.error_json, "Print errors as JSON on stdout");

  auto* validate = app.add_subcommand("validate", "Run the built-in oracle checks");
  validate->add_option("--seed", o.seed, "Master seed");
  validate->add_option("--workers", o.workers, "Worker threads (0: all cores)");
  validate->add_option("--replications", o.validate_reps, "Monte Carlo replications for the bias check")
      ->check(CLI::PositiveNumber);
  validate->add_option("--out", o.out, "Output directory");
  validate->add_flag("--error-json", o.error_json, "Print errors as JSON on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*fit) return cmd_fit(o);
    if (*predict) return cmd_predict(o);
    if (*interval) return cmd_interval(o);
    if (*simulate) return cmd_simulate(o);
    if (*validate) return cmd_validate(o);
  } catch (const mner::Error& e) {
    const int rc = exit_code(e.kind());
    report_error(o, e.code(), e.what(), rc);
    return rc;
  } catch (const fs::filesystem_error& e) {
    report_error(o, "InvalidInput", e.what(), kExitInput);
    return kExitInput;
  }
  return kExitInput;
}
