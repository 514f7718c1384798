#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mner/blup.hpp"
#include "mner/errors.hpp"
#include "mner/sim/config.hpp"
#include "mner/sim/model.hpp"
#include "mner/sim/oracles.hpp"
#include "mner/sim/seeding.hpp"
#include "mner/sim/study.hpp"

using namespace mner;
using namespace mner::sim;

TEST_CASE("build_design layout") {
  for (const int k : {2, 3}) {
    const SimConfig c = study_config(k, 0.5, EffectDistribution::Normal);
    const Dataset d = build_design(c);
    CHECK(d.m() == 40);
    CHECK(d.k() == k);
    CHECK(d.s() == 2 * k);
    CHECK(d.area_sizes() == c.area_sizes());
    for (const auto& a : d.areas()) {
      for (Eigen::Index j = 0; j < a.n_units(); ++j) {
        const auto r = a.regressor(j);
        for (Eigen::Index row = 0; row < k; ++row) {
          for (Eigen::Index col = 0; col < 2 * k; ++col) {
            if (col == 2 * row) {
              CHECK(r(row, col) == 1.0);
            } else if (col == 2 * row + 1) {
              CHECK(std::abs(r(row, col)) < 1.0);
              CHECK(r(row, col) == a.regressor(0)(row, col));  // shared within the area
            } else {
              CHECK(r(row, col) == 0.0);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("group sizes follow n_G = 3G - 2") {
  const SimConfig c = study_config(2, 0.25, EffectDistribution::Normal);
  const auto n = c.area_sizes();
  const auto g = c.area_groups();
  for (std::size_t i = 0; i < n.size(); ++i) CHECK(n[i] == 3 * (g[i] + 1) - 2);
  CHECK(c.beta.size() == 4);
  CHECK(study_config(3, 0.25, EffectDistribution::Normal).beta.size() == 6);
}

TEST_CASE("psi_from_rho") {
  const Eigen::Vector2d v(std::sqrt(1.5), std::sqrt(0.5));
  CHECK(psi_from_rho(0.0, v).matrix().isApprox(Eigen::Vector2d(1.5, 0.5).asDiagonal().toDenseMatrix()));
  CHECK(psi_from_rho(1.0, v).matrix().isApprox(v * v.transpose()));
  const SymMat half = psi_from_rho(0.5, v);
  CHECK(half(0, 0) == doctest::Approx(1.5));
  CHECK(half(1, 1) == doctest::Approx(0.5));
  CHECK(half(0, 1) == doctest::Approx(0.5 * std::sqrt(0.75)).epsilon(1e-15));
  CHECK_THROWS_AS(psi_from_rho(-0.6, Eigen::Vector3d(1, 1, 1)), InvalidConfig);
}

TEST_CASE("config validation and presets") {
  SimConfig c = study_config(2, 0.5, EffectDistribution::Normal);
  c.rho = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  const SimConfig p = preset("full-k3-rho075-chisq");
  CHECK(p.k == 3);
  CHECK(p.rho == 0.75);
  CHECK(p.effect_dist == EffectDistribution::ChiSquare);
  CHECK(p.replications_a == 50000);
  CHECK(preset("smoke-k2-rho025-t").replications_b == 1000);
  CHECK_THROWS_AS(preset("full-k4-rho05-normal"), InvalidConfig);
  CHECK(preset_names().size() == 3 * 2 * 3 * 3);
  CHECK(parse_distribution("M2") == EffectDistribution::StudentT);
}

TEST_CASE("seeding") {
  CHECK(derive_seed(1, Stream::PhaseA, 0) != derive_seed(1, Stream::PhaseB, 0));
  CHECK(derive_seed(1, Stream::PhaseA, 0) != derive_seed(1, Stream::PhaseA, 1));
  CHECK(derive_seed(1, Stream::PhaseA, 5) == derive_seed(1, Stream::PhaseA, 5));
  CHECK(make_engine(9, Stream::Oracle, 3)() == make_engine(9, Stream::Oracle, 3)());
}

TEST_CASE("standard normal effects for Psi = I") {
  Engine rng = make_engine(3, Stream::Oracle, 0);
  const Eigen::MatrixXd v = draw_effects(Eigen::MatrixXd::Identity(2, 2), 100000, EffectDistribution::Normal, rng);
  const Eigen::RowVectorXd mean = v.colwise().mean();
  const Eigen::MatrixXd cov = (v.rowwise() - mean).transpose() * (v.rowwise() - mean) / 99999.0;
  CHECK(mean.cwiseAbs().maxCoeff() < 0.015);
  CHECK((cov - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("prial and relative bias definitions") {
  const Eigen::Matrix2d a{{2.0, 0.3}, {0.3, 1.0}};
  CHECK(prial(a, a) == 0.0);
  CHECK(prial(a, 2.0 * a) == doctest::Approx(50.0));
  CHECK(prial(2.0 * a, a) == doctest::Approx(-100.0));
  CHECK(relative_bias(a, a).norm() == 0.0);
  CHECK(relative_bias(1.1 * a, a)(0, 0) == doctest::Approx(10.0));
  CHECK(ell_labels(3) == std::vector<std::string>{"e1", "e2", "e3", "ones"});
  CHECK(ell_vectors(2)[2] == Eigen::Vector2d(1, 1));
}

TEST_CASE("dense_gls_oracle") {
  SUBCASE("hand-solvable m = 2, n = (1, 1), k = 1") {
    // Square design: beta = X^{-1} y, Cov = (psi + sigma) (X'X)^{-1}.
    std::vector<UnitBlock> b;
    b.emplace_back(Eigen::MatrixXd::Constant(1, 1, 3.0), Eigen::RowVector2d(1.0, 2.0));
    b.emplace_back(Eigen::MatrixXd::Constant(1, 1, 5.0), Eigen::RowVector2d(1.0, -1.0));
    const Dataset d(std::move(b));
    const auto g = dense_gls_oracle(d, SymMat(Eigen::MatrixXd::Constant(1, 1, 0.5)),
                                    SymMat(Eigen::MatrixXd::Constant(1, 1, 1.5)));
    // 1*b0 + 2*b1 = 3, b0 - b1 = 5  ->  b1 = -2/3, b0 = 13/3
    CHECK(g.beta(0) == doctest::Approx(13.0 / 3.0));
    CHECK(g.beta(1) == doctest::Approx(-2.0 / 3.0));
    const Eigen::Matrix2d xtx{{2.0, 1.0}, {1.0, 5.0}};
    CHECK(g.beta_cov.isApprox(2.0 * xtx.inverse(), 1e-14));
  }
  SUBCASE("Psi = 0, Sigma = I is OLS") {
    std::mt19937_64 rng(41);
    const Dataset d = testing::random_dataset(rng, 4, 2);
    const auto dense = dense_gls_oracle(d, SymMat::zero(2), SymMat::identity(2));
    const auto fit = gls_fit(d, SymMat::zero(2), SymMat::identity(2));
    CHECK(testing::rel_err(dense.beta, fit.beta) < 1e-12);
  }
  SUBCASE("size limit") {
    std::mt19937_64 rng(42);
    const Dataset big = testing::random_dataset(rng, 100, 3, 1, 3, 5);
    CHECK_THROWS_AS(dense_gls_oracle(big, SymMat::identity(3), SymMat::identity(3)), OracleTooLarge);
  }
}

TEST_CASE("univariate_eblup_oracle limits") {
  std::mt19937_64 rng(43);
  const Dataset d = testing::random_dataset(rng, 6, 1, 1, 2, 5);
  const auto areas = component_data(d, 0);
  SUBCASE("psi = 0 gives the synthetic estimator") {
    const auto s = univariate_eblup_oracle(areas, 0.05, std::pair{0.0, 1.0});
    for (std::size_t i = 0; i < areas.size(); ++i) {
      double xb = 0.0;
      for (std::size_t q = 0; q < s.beta.size(); ++q) {
        double xm = 0.0;
        for (const auto& row : areas[i].x) xm += row[q] / static_cast<double>(areas[i].x.size());
        xb += xm * s.beta[q];
      }
      CHECK(s.theta[i] == doctest::Approx(xb).epsilon(1e-13));
    }
  }
  SUBCASE("small sigma gives the sample mean") {
    const auto s = univariate_eblup_oracle(areas, 0.05, std::pair{1.0, 1e-10});
    for (std::size_t i = 0; i < areas.size(); ++i) {
      double ym = 0.0;
      for (const double y : areas[i].y) ym += y / static_cast<double>(areas[i].y.size());
      CHECK(s.theta[i] == doctest::Approx(ym).epsilon(1e-8));
    }
  }
}

TEST_CASE("run_study is reproducible across worker counts") {
  SimConfig c = study_config(2, 0.5, EffectDistribution::StudentT);
  c.replications_a = 300;
  c.replications_b = 200;
  c.workers = 1;
  const SimMetrics one = run_study(c);
  c.workers = 3;
  const SimMetrics three = run_study(c);
  REQUIRE(one.areas.size() == three.areas.size());
  for (std::size_t i = 0; i < one.areas.size(); ++i) {
    CHECK(one.areas[i].msem_true == three.areas[i].msem_true);
    CHECK(one.areas[i].rb_corrected == three.areas[i].rb_corrected);
  }
  for (std::size_t i = 0; i < one.intervals.size(); ++i) {
    CHECK(one.intervals[i].cp_corrected == three.intervals[i].cp_corrected);
    CHECK(one.intervals[i].al_naive == three.intervals[i].al_naive);
  }
  CHECK(one.sigma_hat.mean == three.sigma_hat.mean);
  c.master_seed += 1;
  CHECK(run_study(c).areas[0].msem_true != one.areas[0].msem_true);
}

TEST_CASE("run_study metrics are well formed") {
  SimConfig c = study_config(3, 0.25, EffectDistribution::ChiSquare);
  c.replications_a = 200;
  c.replications_b = 100;
  const SimMetrics m = run_study(c);
  CHECK(m.groups.size() == 4);
  CHECK(m.intervals.size() == 4 * 4);
  for (const auto& cell : m.intervals) {
    CHECK(cell.cp_naive >= 0.0);
    CHECK(cell.cp_corrected <= 1.0);
    CHECK(cell.al_naive > 0.0);
    CHECK(cell.al_corrected >= cell.al_naive);
  }
  CHECK(m.replications_a + m.failures_a == 200);
}
