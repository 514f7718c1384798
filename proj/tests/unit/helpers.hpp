#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mner/dataset.hpp"
#include "mner/sym_mat.hpp"

namespace testing {

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(r, c);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
  return a;
}

inline mner::SymMat random_spd(std::mt19937_64& rng, Eigen::Index k, double ridge = 0.5) {
  const Eigen::MatrixXd a = gaussian(rng, k, k);
  return mner::SymMat(a * a.transpose() + ridge * Eigen::MatrixXd::Identity(k, k));
}

/// Block-diagonal design with an intercept and `p` unit-level covariates per
/// response; area sizes drawn from [n_min, n_max].
inline mner::Dataset random_dataset(std::mt19937_64& rng, Eigen::Index m, Eigen::Index k, int p = 1, int n_min = 1,
                                    int n_max = 5) {
  std::uniform_int_distribution<int> size(n_min, n_max);
  std::normal_distribution<double> z;
  const Eigen::Index s = k * (1 + p);
  std::vector<mner::UnitBlock> blocks;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int n = size(rng);
    Eigen::MatrixXd y(n, k);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n * k, s);
    for (int j = 0; j < n; ++j) {
      for (Eigen::Index d = 0; d < k; ++d) {
        y(j, d) = 2.0 * z(rng) + static_cast<double>(i % 3);
        r(j * k + d, d * (1 + p)) = 1.0;
        for (int q = 0; q < p; ++q) r(j * k + d, d * (1 + p) + 1 + q) = z(rng);
      }
    }
    blocks.emplace_back(std::move(y), std::move(r));
  }
  return mner::Dataset(std::move(blocks));
}

/// Intercept-only design (R_ij = I_k) with the given responses per area.
inline mner::UnitBlock intercept_block(const Eigen::MatrixXd& y) {
  const Eigen::Index n = y.rows(), k = y.cols();
  Eigen::MatrixXd r(n * k, k);
  for (Eigen::Index j = 0; j < n; ++j) r.middleRows(j * k, k) = Eigen::MatrixXd::Identity(k, k);
  return mner::UnitBlock(y, r);
}

/// Kronecker product a (x) b for the dense cross-checks.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace testing
