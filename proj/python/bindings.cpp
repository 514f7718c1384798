// Python bindings: data sets from NumPy arrays, estimation, prediction,
// intervals, closed forms and the simulation study.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mner/blup.hpp"
#include "mner/errors.hpp"
#include "mner/io/ingest.hpp"
#include "mner/io/report.hpp"
#include "mner/io/run_config.hpp"
#include "mner/sim/config.hpp"
#include "mner/sim/oracles.hpp"
#include "mner/sim/study.hpp"
#include "mner/uncertainty.hpp"
#include "mner/variance_components.hpp"
#include "mner/version.hpp"

namespace py = pybind11;
using namespace mner;

namespace {

SymMat sym(const Eigen::MatrixXd& a) { return SymMat(a); }

py::dict components_dict(const CovComponents& c) {
  py::dict d;
  d["sigma_hat"] = c.sigma_hat.matrix();
  d["psi0"] = c.psi0.matrix();
  d["psi1"] = c.psi1.matrix();
  d["psi_hat"] = c.psi_hat.matrix();
  d["s0"] = c.s0;
  d["truncated"] = c.truncated;
  d["eigenvalues"] = c.eigenvalues;
  return d;
}

py::dict prediction_dict(const AreaPrediction& p) {
  py::dict d;
  d["area"] = p.area_id;
  d["n"] = p.n_units;
  d["theta_hat"] = p.theta_hat;
  d["truncated"] = p.psi_truncated;
  if (p.mse) {
    d["msem"] = p.mse->msem.matrix();
    d["naive"] = p.mse->naive.matrix();
    d["g1"] = p.mse->g1.matrix();
    d["g2"] = p.mse->g2.matrix();
    d["g3"] = p.mse->g3.matrix();
  }
  return d;
}

EblupResult predict_with_msem(const Dataset& data) {
  EblupResult res = eblup(data);
  const auto sizes = data.area_sizes();
  const SizeProfile profile(sizes);
  for (auto& p : res.predictions) msem_estimate(res.fit, profile, p);
  return res;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multivariate nested-error regression: estimation, EBLUP, MSE matrices and intervals";
  m.attr("__version__") = kVersion;

  static py::exception<Error> base_error(m, "MnerError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    }
  });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>>& areas,
                       std::vector<std::string> ids) {
             std::vector<UnitBlock> blocks;
             blocks.reserve(areas.size());
             for (const auto& [y, r] : areas) blocks.emplace_back(y, r);
             return Dataset(std::move(blocks), std::move(ids));
           }),
           py::arg("areas"), py::arg("ids") = std::vector<std::string>{},
           "areas: list of (Y, R) with Y of shape (n_i, k) and R of shape (n_i k, s), unit j in rows j k .. j k + k - 1")
      .def_property_readonly("m", &Dataset::m)
      .def_property_readonly("k", &Dataset::k)
      .def_property_readonly("s", &Dataset::s)
      .def_property_readonly("total_units", &Dataset::total_units)
      .def_property_readonly("area_ids", &Dataset::area_ids)
      .def_property_readonly("area_sizes", &Dataset::area_sizes);

  m.def(
      "load",
      [](const std::string& config_path) {
        const io::RunConfig c = io::load_run_config(config_path);
        c.validate();
        io::Ingested in = io::ingest_csv(c.input, c);
        return py::make_tuple(std::move(in.data), in.coefficient_names);
      },
      py::arg("config_path"), "Reads a run configuration and its CSV; returns (Dataset, coefficient names).");

  m.def("estimate_components", [](const Dataset& d) { return components_dict(estimate_components(d)); },
        py::arg("data"));
  m.def(
      "bias_psi0",
      [](const Dataset& d, const Eigen::MatrixXd& psi, const Eigen::MatrixXd& sigma) {
        return bias_psi0(BiasInputs{sym(psi), sym(sigma), d, ols_gram_inverse(d)}).matrix();
      },
      py::arg("data"), py::arg("psi"), py::arg("sigma"), "Exact E[psi0] - Psi at (psi, sigma).");
  m.def(
      "gls_fit",
      [](const Dataset& d, const Eigen::MatrixXd& psi, const Eigen::MatrixXd& sigma) {
        const FitResult f = gls_fit(d, sym(psi), sym(sigma));
        return py::make_tuple(f.beta, f.beta_cov);
      },
      py::arg("data"), py::arg("psi"), py::arg("sigma"), "Returns (beta, cov(beta)).");
  m.def(
      "predict",
      [](const Dataset& d) {
        const EblupResult res = predict_with_msem(d);
        py::list out;
        for (const auto& p : res.predictions) out.append(prediction_dict(p));
        py::dict r;
        r["beta"] = res.fit.beta;
        r["beta_cov"] = res.fit.beta_cov;
        r["components"] = components_dict(*res.fit.components);
        r["areas"] = out;
        return r;
      },
      py::arg("data"), "EBLUP at the sample-mean target with the second-order MSE matrix per area.");
  m.def(
      "intervals",
      [](const Dataset& d, const Eigen::VectorXd& ell, double alpha, const std::string& v_form) {
        const VarianceForm form = variance_form_from_string(v_form);
        const EblupResult res = predict_with_msem(d);
        const auto sizes = d.area_sizes();
        const SizeProfile profile(sizes);
        py::list out;
        for (const auto& p : res.predictions) {
          const IntervalPair ci = corrected_interval(p, ell, alpha, res.fit, profile, form);
          py::dict row;
          row["area"] = p.area_id;
          row["estimate"] = ell.dot(p.theta_hat);
          row["lower"] = ci.corrected.lower;
          row["upper"] = ci.corrected.upper;
          row["z_star"] = ci.corrected.z_star;
          row["naive_lower"] = ci.naive.lower;
          row["naive_upper"] = ci.naive.upper;
          row["v_hat"] = ci.corrected.v_hat;
          out.append(row);
        }
        return out;
      },
      py::arg("data"), py::arg("ell"), py::arg("alpha") = 0.05, py::arg("v_form") = "printed");

  m.def(
      "g3",
      [](const Eigen::MatrixXd& psi, const Eigen::MatrixXd& sigma, const std::vector<int>& sizes, int n_a) {
        return g3(sym(psi), sym(sigma), SizeProfile(sizes), n_a).matrix();
      },
      py::arg("psi"), py::arg("sigma"), py::arg("area_sizes"), py::arg("n_a"));
  m.def(
      "v_approx",
      [](const Eigen::MatrixXd& psi, const Eigen::MatrixXd& sigma, const Eigen::VectorXd& ell,
         const std::vector<int>& sizes, int n_a, const std::string& form) {
        return v_hat(variance_form_from_string(form), sym(psi), sym(sigma), ell, SizeProfile(sizes), n_a);
      },
      py::arg("psi"), py::arg("sigma"), py::arg("ell"), py::arg("area_sizes"), py::arg("n_a"),
      py::arg("form") = "printed");
  m.def("corrected_quantile", &corrected_quantile, py::arg("z"), py::arg("v"), py::arg("mse"));

  m.def("preset_names", &sim::preset_names);
  m.def(
      "simulate_json",
      [](const std::string& preset, std::uint64_t seed, int reps_a, int reps_b, unsigned workers,
         const std::string& v_form) {
        sim::SimConfig c = sim::preset(preset);
        c.master_seed = seed;
        if (reps_a > 0) c.replications_a = reps_a;
        if (reps_b > 0) c.replications_b = reps_b;
        c.workers = workers;
        c.variance_form = variance_form_from_string(v_form);
        sim::SimMetrics metrics;
        {
          py::gil_scoped_release release;
          metrics = sim::run_study(c);
        }
        return io::sim_json(metrics).dump();
      },
      py::arg("preset"), py::arg("seed") = 20180417, py::arg("reps_a") = 0, py::arg("reps_b") = 0,
      py::arg("workers") = 0, py::arg("v_form") = "printed");
}
