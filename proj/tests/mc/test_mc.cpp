// Monte Carlo checks of the closed forms. Slower than the unit suite; every
// check runs on a fixed seed so results are reproducible.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <iostream>

#include "mner/blup.hpp"
#include "mner/sim/model.hpp"
#include "mner/sim/oracles.hpp"
#include "mner/sim/parallel.hpp"
#include "mner/sim/study.hpp"
#include "mner/uncertainty.hpp"
#include "mner/variance_components.hpp"

using namespace mner;
using namespace mner::sim;

namespace {

constexpr std::uint64_t kSeed = 20180417;

void print_check(const char* what, const BiasCheck& c) {
  std::cout << what << ": formula\n" << c.formula << "\nMC mean\n" << c.controlled_mean << "\nMC se\n"
            << c.controlled_se << "\nmax |z| = " << c.max_z() << "\n";
}

SymMat scalar(double x) { return SymMat(Eigen::MatrixXd::Constant(1, 1, x)); }

double sample_skewness(const Eigen::VectorXd& x) {
  const double mean = x.mean();
  const Eigen::ArrayXd c = x.array() - mean;
  const double m2 = (c * c).mean(), m3 = (c * c * c).mean();
  return m3 / std::pow(m2, 1.5);
}

}  // namespace

TEST_CASE("bias_psi0: scalar intercept-only design, m = 3, n = 2, 1e6 replications") {
  std::vector<UnitBlock> blocks;
  for (int i = 0; i < 3; ++i) blocks.emplace_back(Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Ones(2, 1));
  const Dataset design(std::move(blocks));
  const BiasCheck c = bias_monte_carlo(design, scalar(1.0), scalar(1.0), Eigen::VectorXd::Constant(1, 0.5), 1000000, kSeed);
  print_check("m = 3 scalar", c);
  CHECK(c.formula(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(c.max_z() < 3.0);
  // The raw estimator agrees too, with a wider error bar.
  CHECK(std::abs(c.plain_mean(0, 0) - c.formula(0, 0)) < 3.0 * c.plain_se(0, 0));
}

TEST_CASE("bias_psi0: simulation design, m = 40, k = 2") {
  SimConfig cfg = study_config(2, 0.5, EffectDistribution::Normal);
  const BiasCheck c = bias_monte_carlo(cfg, 100000);
  print_check("m = 40", c);
  CHECK(c.max_z() < 3.0);
}

TEST_CASE("bias_psi0: simulation design, m = 40, k = 3") {
  SimConfig cfg = study_config(3, 0.25, EffectDistribution::Normal);
  const BiasCheck c = bias_monte_carlo(cfg, 100000);
  print_check("m = 40, k = 3", c);
  CHECK(c.max_z() < 3.0);
}

TEST_CASE("effect distributions have covariance Psi") {
  const SymMat psi = psi_from_rho(0.5, Eigen::Vector2d(std::sqrt(1.5), std::sqrt(0.5)));
  const Eigen::MatrixXd root = psd_root(psi);
  const int n = 1000000;
  for (const auto dist : {EffectDistribution::StudentT, EffectDistribution::ChiSquare}) {
    Engine rng = make_engine(kSeed, Stream::Oracle, static_cast<std::uint64_t>(dist));
    const Eigen::MatrixXd v = draw_effects(root, n, dist, rng);
    const Eigen::RowVectorXd mean = v.colwise().mean();
    const Eigen::MatrixXd c = v.rowwise() - mean;
    for (Eigen::Index a = 0; a < 2; ++a) {
      for (Eigen::Index b = 0; b < 2; ++b) {
        const Eigen::ArrayXd prod = c.col(a).array() * c.col(b).array();
        const double cov = prod.mean();
        const double se = std::sqrt((prod - cov).square().mean() / n);
        INFO(to_string(dist), " entry ", a, b, " cov ", cov, " se ", se);
        CHECK(std::abs(cov - psi(a, b)) < 3.0 * se);
      }
      CHECK(std::abs(mean(a)) < 3.0 * std::sqrt(psi(a, a) / n));
    }
    if (dist == EffectDistribution::ChiSquare) {
      // Unmixed components: w_d = (chi2_2 - 2) / 2 has skewness 2.
      Engine r2 = make_engine(kSeed, Stream::Oracle, 99);
      const Eigen::MatrixXd w = draw_effects(Eigen::MatrixXd::Identity(2, 2), n, dist, r2);
      for (Eigen::Index d = 0; d < 2; ++d) CHECK(sample_skewness(w.col(d)) == doctest::Approx(2.0).epsilon(0.03));
    }
  }
}

TEST_CASE("g3 against the simulated EB - BLUP gap") {
  SimConfig cfg = study_config(2, 0.5, EffectDistribution::Normal);
  cfg.replications_a = 20000;
  cfg.replications_b = 2;
  cfg.track_blup_gap = true;
  const SimMetrics m = run_study(cfg);
  const auto sizes = cfg.area_sizes();
  const SizeProfile profile(sizes);
  const auto ells = ell_vectors(2);
  for (int g = 0; g < 4; ++g) {
    const int n = cfg.group_sizes[static_cast<std::size_t>(g)];
    const SymMat g3_true = g3(cfg.psi(), cfg.sigma, profile, n);
    for (const auto& ell : ells) {
      double gap = 0.0;
      int count = 0;
      for (const auto& a : m.areas) {
        if (a.group != g) continue;
        gap += ell.dot(a.blup_gap * ell);
        ++count;
      }
      gap /= count;
      const double theory = g3_true.quad(ell);
      INFO("group ", g + 1, " ell ", ell.transpose(), " gap ", gap, " g3 ", theory);
      std::cout << "G" << g + 1 << " ell=(" << ell.transpose() << ") MC " << gap << " g3 " << theory << "\n";
      CHECK(std::abs(theory - gap) < 0.15 * gap);
    }
  }
}

// Simulated E[(ell' msem ell - ell' MSEM ell)^2] per group and direction, with
// MSEM the simulated mean squared error of the EBLUP. Computed once.
const std::vector<std::vector<double>>& msem_second_moments() {
  static const std::vector<std::vector<double>> out = [] {
    const SimConfig cfg = study_config(2, 0.5, EffectDistribution::Normal);
    const Generator gen(cfg, build_design(cfg));
    const auto sizes = cfg.area_sizes();
    const SizeProfile profile(sizes);
    const auto groups = cfg.area_groups();
    const long reps = 20000;
    const std::size_t m = sizes.size();
    const auto ells = ell_vectors(2);
    const std::size_t cells = m * ells.size();

    struct Acc {
      std::vector<double> sum, sq, err2;
    };
    auto blocks = run_blocks(static_cast<std::size_t>(reps), 256, default_workers(),
                             [&](std::size_t, std::size_t begin, std::size_t end) {
                               Acc acc{std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0),
                                       std::vector<double>(cells, 0.0)};
                               for (std::size_t r = begin; r < end; ++r) {
                                 Engine rng = make_engine(kSeed, Stream::PhaseB, r);
                                 const Replicate rep = gen.draw(rng);
                                 EblupResult res = eblup(rep.data);
                                 for (std::size_t i = 0; i < m; ++i) {
                                   auto& pred = res.predictions[i];
                                   msem_estimate(res.fit, profile, pred);
                                   const Eigen::VectorXd err =
                                       pred.theta_hat - rep.theta.row(static_cast<Eigen::Index>(i)).transpose();
                                   for (std::size_t l = 0; l < ells.size(); ++l) {
                                     const double q = pred.mse->msem.quad(ells[l]);
                                     const double e = ells[l].dot(err);
                                     acc.sum[i * ells.size() + l] += q;
                                     acc.sq[i * ells.size() + l] += q * q;
                                     acc.err2[i * ells.size() + l] += e * e;
                                   }
                                 }
                               }
                               return acc;
                             });
    Acc total{std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0), std::vector<double>(cells, 0.0)};
    for (const auto& b : blocks) {
      for (std::size_t c = 0; c < cells; ++c) {
        total.sum[c] += b.sum[c];
        total.sq[c] += b.sq[c];
        total.err2[c] += b.err2[c];
      }
    }
    std::vector<std::vector<double>> moments(4, std::vector<double>(ells.size(), 0.0));
    std::vector<int> count(4, 0);
    for (std::size_t i = 0; i < m; ++i) {
      ++count[static_cast<std::size_t>(groups[i])];
      for (std::size_t l = 0; l < ells.size(); ++l) {
        const std::size_t c = i * ells.size() + l;
        const double mse = total.err2[c] / reps;
        moments[static_cast<std::size_t>(groups[i])][l] +=
            total.sq[c] / reps - 2.0 * mse * total.sum[c] / reps + mse * mse;
      }
    }
    for (std::size_t g = 0; g < 4; ++g) {
      for (auto& x : moments[g]) x /= count[g];
    }
    return moments;
  }();
  return out;
}

void check_v_against_simulation(VarianceForm form) {
  const SimConfig cfg = study_config(2, 0.5, EffectDistribution::Normal);
  const auto sizes = cfg.area_sizes();
  const SizeProfile profile(sizes);
  const auto ells = ell_vectors(2);
  const auto& moments = msem_second_moments();
  for (std::size_t g = 0; g < 4; ++g) {
    const int n = cfg.group_sizes[g];
    for (std::size_t l = 0; l < ells.size(); ++l) {
      const double mc = moments[g][l];
      const double v = v_hat(form, cfg.psi(), cfg.sigma, ells[l], profile, n);
      std::cout << to_string(form) << " G" << g + 1 << " ell=(" << ells[l].transpose() << ") MC " << mc << " V "
                << v << "\n";
      INFO("group ", g + 1, " ell ", l, " MC ", mc, " V ", v);
      CHECK(std::abs(v - mc) < 0.20 * mc);
    }
  }
}

TEST_CASE("V, delta-method form, against the simulated second moment of ell' (msem - MSEM) ell") {
  check_v_against_simulation(VarianceForm::Delta);
}

// The closed form as written overstates the second moment about fivefold for
// single-unit areas and understates it along e2; kept visible, not enforced.
TEST_CASE("V, closed form as written, against the simulated second moment" * doctest::may_fail()) {
  check_v_against_simulation(VarianceForm::Printed);
}

TEST_CASE("GLS at the true parameters is uncorrelated with the variance estimators") {
  SimConfig cfg = study_config(2, 0.5, EffectDistribution::Normal);
  const Generator gen(cfg, build_design(cfg));
  const long reps = 20000;
  const Eigen::Index s = 4;
  const int stats = 6;  // sigma_11, sigma_12, sigma_22, psi0_11, psi0_12, psi0_22
  Eigen::MatrixXd b(reps, s), v(reps, stats);
  for (long r = 0; r < reps; ++r) {
    Engine rng = make_engine(kSeed, Stream::Oracle, static_cast<std::uint64_t>(r));
    const Replicate rep = gen.draw(rng);
    b.row(r) = gls_fit(rep.data, gen.psi(), gen.sigma()).beta.transpose();
    const SigmaEstimate sig = estimate_sigma(rep.data);
    const SymMat p0 = estimate_psi0(rep.data, sig.sigma);
    v.row(r) << sig.sigma(0, 0), sig.sigma(0, 1), sig.sigma(1, 1), p0(0, 0), p0(0, 1), p0(1, 1);
  }
  const Eigen::MatrixXd bc = b.rowwise() - b.colwise().mean();
  const Eigen::MatrixXd vc = v.rowwise() - v.colwise().mean();
  const Eigen::MatrixXd corr = (bc.transpose() * vc).array() /
                               (bc.colwise().norm().transpose() * vc.colwise().norm()).array();
  const double se = 1.0 / std::sqrt(static_cast<double>(reps));
  std::cout << "max |corr| = " << corr.cwiseAbs().maxCoeff() << " (3 se = " << 3 * se << ")\n";
  CHECK(corr.cwiseAbs().maxCoeff() < 3.0 * se);
}

TEST_CASE("truncation frequency falls with m") {
  std::vector<double> freq;
  for (const int per_group : {3, 10, 30}) {
    SimConfig cfg = study_config(2, 0.75, EffectDistribution::Normal);
    cfg.areas_per_group = per_group;
    const Generator gen(cfg, build_design(cfg));
    long truncated = 0;
    const long reps = 20000;
    for (long r = 0; r < reps; ++r) {
      Engine rng = make_engine(kSeed, Stream::Oracle, static_cast<std::uint64_t>(r));
      truncated += estimate_components(gen.draw(rng).data).truncated ? 1 : 0;
    }
    freq.push_back(static_cast<double>(truncated) / reps);
  }
  std::cout << "truncation frequency m = 12, 40, 120: " << freq[0] << " " << freq[1] << " " << freq[2] << "\n";
  CHECK(freq[0] > freq[1]);
  CHECK(freq[1] >= freq[2]);
  CHECK(freq[0] > freq[2]);
}

TEST_CASE("coverage per group, normal effects, rho = 0.5") {
  SimConfig cfg = preset("desk-k2-rho05-normal");
  cfg.replications_a = 2;  // only phase B is used here
  const SimMetrics m = run_study(cfg);
  const double reference[] = {0.950, 0.943, 0.947, 0.949};
  for (const auto& cell : m.intervals) {
    if (cell.ell_label != "e1") continue;
    std::cout << "G" << cell.group + 1 << " CP corrected " << cell.cp_corrected << " naive " << cell.cp_naive << "\n";
    CHECK(std::abs(cell.cp_corrected - reference[cell.group]) < 0.012);
  }
}
