#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "mner/block_algebra.hpp"
#include "mner/blup.hpp"
#include "mner/uncertainty.hpp"
#include "mner/variance_components.hpp"

using namespace mner;
using testing::kron;
using testing::random_spd;
using testing::rel_err;

namespace {

/// Kronecker design R_ij = I_k (x) (1, x_ij'), so y -> A y keeps the column space.
Dataset kron_dataset(std::mt19937_64& rng, Eigen::Index m, Eigen::Index k, int p) {
  std::uniform_int_distribution<int> size(2, 6);
  std::vector<UnitBlock> blocks;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int n = size(rng);
    const Eigen::MatrixXd y = testing::gaussian(rng, n, k);
    Eigen::MatrixXd r(n * k, k * (1 + p));
    for (int j = 0; j < n; ++j) {
      Eigen::RowVectorXd x(1 + p);
      x(0) = 1.0;
      x.tail(p) = testing::gaussian(rng, 1, p);
      r.middleRows(j * k, k) = kron(Eigen::MatrixXd::Identity(k, k), x);
    }
    blocks.emplace_back(y, r);
  }
  return Dataset(std::move(blocks));
}

Dataset transform(const Dataset& d, const Eigen::MatrixXd& a) {
  std::vector<UnitBlock> blocks;
  for (const auto& b : d.areas()) blocks.push_back(b.with_responses(b.responses() * a.transpose()));
  return Dataset(std::move(blocks), d.area_ids());
}

}  // namespace

TEST_CASE("affine equivariance of Sigma_hat, Psi0 and the Bayes predictor") {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 10; ++t) {
    const Dataset d = kron_dataset(rng, 9, 3, 1);
    const Eigen::MatrixXd a = testing::gaussian(rng, 3, 3) + 2.0 * Eigen::MatrixXd::Identity(3, 3);
    const Dataset da = transform(d, a);
    const SigmaEstimate s = estimate_sigma(d), sa = estimate_sigma(da);
    CHECK(rel_err(sa.sigma.matrix(), a * s.sigma.matrix() * a.transpose()) < 1e-11);
    const SymMat p0 = estimate_psi0(d, s.sigma), p0a = estimate_psi0(da, sa.sigma);
    CHECK(rel_err(p0a.matrix(), a * p0.matrix() * a.transpose()) < 1e-11);

    // At transformed (Psi, Sigma) the EBLUP maps by A as well.
    const SymMat psi = random_spd(rng, 3), sigma = random_spd(rng, 3);
    const SymMat psi_a = SymMat::symmetrize(a * psi.matrix() * a.transpose());
    const SymMat sigma_a = SymMat::symmetrize(a * sigma.matrix() * a.transpose());
    const FitResult f = gls_fit(d, psi, sigma), fa = gls_fit(da, psi_a, sigma_a);
    for (Eigen::Index i = 0; i < d.m(); ++i) {
      const auto& c = f.per_area[static_cast<std::size_t>(i)];
      const auto& ca = fa.per_area[static_cast<std::size_t>(i)];
      const Eigen::VectorXd th = bayes_predict(f.beta, c.shrinkage, c.y_bar, c.r_bar, c.r_bar);
      const Eigen::VectorXd tha = bayes_predict(fa.beta, ca.shrinkage, ca.y_bar, ca.r_bar, ca.r_bar);
      CHECK(rel_err(tha, a * th) < 1e-10);
    }
  }
}

TEST_CASE("within-area permutation invariance") {
  std::mt19937_64 rng(52);
  const Dataset d = testing::random_dataset(rng, 10, 2, 1, 2, 6);
  std::vector<UnitBlock> shuffled;
  for (const auto& b : d.areas()) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(b.n_units()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::MatrixXd y(b.n_units(), b.k()), r(b.regressors().rows(), b.s());
    for (Eigen::Index j = 0; j < b.n_units(); ++j) {
      y.row(j) = b.responses().row(order[static_cast<std::size_t>(j)]);
      r.middleRows(j * b.k(), b.k()) = b.regressor(order[static_cast<std::size_t>(j)]);
    }
    shuffled.emplace_back(y, r);
  }
  const Dataset dp(std::move(shuffled));
  const EblupResult a = eblup(d), b = eblup(dp);
  CHECK(rel_err(a.fit.components->psi_hat.matrix(), b.fit.components->psi_hat.matrix()) < 1e-12);
  CHECK(rel_err(a.fit.components->sigma_hat.matrix(), b.fit.components->sigma_hat.matrix()) < 1e-12);
  for (std::size_t i = 0; i < a.predictions.size(); ++i) {
    CHECK(rel_err(a.predictions[i].theta_hat, b.predictions[i].theta_hat) < 1e-12);
  }
}

TEST_CASE("msem does not depend on the order of the other areas") {
  std::mt19937_64 rng(53);
  const Dataset d = testing::random_dataset(rng, 9, 2, 1, 2, 6);
  std::vector<UnitBlock> rev(d.areas().rbegin(), d.areas().rend());
  std::vector<std::string> ids(d.area_ids().rbegin(), d.area_ids().rend());
  const Dataset dr(rev, ids);
  EblupResult a = eblup(d), b = eblup(dr);
  const auto sa = d.area_sizes(), sb = dr.area_sizes();
  const SizeProfile pa(sa), pb(sb);
  for (Eigen::Index i = 0; i < d.m(); ++i) {
    auto& x = a.predictions[static_cast<std::size_t>(i)];
    auto& y = b.predictions[static_cast<std::size_t>(d.m() - 1 - i)];
    msem_estimate(a.fit, pa, x);
    msem_estimate(b.fit, pb, y);
    CHECK(rel_err(x.mse->msem.matrix(), y.mse->msem.matrix()) < 1e-11);
    CHECK(rel_err(x.mse->g3.matrix(), y.mse->g3.matrix()) < 1e-11);
  }
}

TEST_CASE("scaling (Psi, Sigma) by c") {
  std::mt19937_64 rng(54);
  const SymMat psi = random_spd(rng, 3), sigma = random_spd(rng, 3);
  const std::vector<int> n{1, 3, 3, 5, 8, 2};
  const SizeProfile prof(n);
  for (const double c : {0.5, 2.0}) {
    CHECK(rel_err(g1(psi * c, sigma * c, 3).matrix(), c * g1(psi, sigma, 3).matrix()) < 1e-13);
    CHECK(rel_err(g3(psi * c, sigma * c, prof, 3).matrix(), c * g3(psi, sigma, prof, 3).matrix()) < 1e-13);
    CHECK(rel_err(shrinkage_matrix(psi * c, sigma * c, 3), shrinkage_matrix(psi, sigma, 3)) < 1e-13);
  }
}

TEST_CASE("shrinkage eigenvalues lie in [0, 1]") {
  std::mt19937_64 rng(55);
  for (int t = 0; t < 200; ++t) {
    const SymMat psi = random_spd(rng, 3, 0.0), sigma = random_spd(rng, 3);
    const int n = 1 + static_cast<int>(rng() % 20);
    // B = Psi Lambda^{-1} is similar to a symmetric matrix with eigenvalues in [0, 1].
    const Eigen::VectorXcd ev = shrinkage_matrix(psi, sigma, n).eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      CHECK(std::abs(ev(i).imag()) < 1e-10);
      CHECK(ev(i).real() > -1e-12);
      CHECK(ev(i).real() < 1.0 + 1e-12);
    }
  }
}

TEST_CASE("structured inverse reconstructs D on conditioned inputs") {
  std::mt19937_64 rng(56);
  int tested = 0;
  while (tested < 50) {
    const SymMat psi = random_spd(rng, 3, 0.01), sigma = random_spd(rng, 3, 0.01);
    const Eigen::VectorXd ep = psi.eigenvalues(), es = sigma.eigenvalues();
    if (ep.maxCoeff() / ep.minCoeff() > 1e6 || es.maxCoeff() / es.minCoeff() > 1e6) continue;
    const int n = 1 + static_cast<int>(rng() % 6);
    const auto inv = marginal_block_inverse(psi, sigma, n);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, n), eye = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd d = kron(ones, psi.matrix()) + kron(eye, sigma.matrix());
    const Eigen::MatrixXd dinv = kron(eye, inv.sigma_inv.matrix()) - kron(ones, inv.c.matrix());
    CHECK((d * dinv - Eigen::MatrixXd::Identity(3 * n, 3 * n)).cwiseAbs().maxCoeff() < 1e-10);
    ++tested;
  }
}

TEST_CASE("area_means is linear") {
  std::mt19937_64 rng(57);
  const Eigen::MatrixXd y = testing::gaussian(rng, 5, 2), z = testing::gaussian(rng, 5, 2);
  const Eigen::MatrixXd r = testing::gaussian(rng, 10, 4);
  const auto a = area_means(UnitBlock(y, r)), b = area_means(UnitBlock(z, r)), s = area_means(UnitBlock(y + z, r));
  CHECK(rel_err(s.y_bar, a.y_bar + b.y_bar) < 1e-15);
}
