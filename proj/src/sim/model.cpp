#include "mner/sim/model.hpp"

#include <cmath>

#include "mner/errors.hpp"

namespace mner::sim {

Dataset build_design(const SimConfig& config) {
  config.validate();
  const int k = config.k;
  const std::vector<int> sizes = config.area_sizes();
  Engine rng = make_engine(config.master_seed, Stream::Design, 0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto draw = [&] {
    double x;
    do x = unif(rng);
    while (x <= -1.0);
    return x;
  };

  std::vector<UnitBlock> areas;
  areas.reserve(sizes.size());
  for (const int n : sizes) {
    Eigen::VectorXd area_x(k);
    for (int d = 0; d < k; ++d) area_x(d) = draw();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n * k, 2 * k);
    for (int j = 0; j < n; ++j) {
      for (int d = 0; d < k; ++d) {
        const double x = config.covariate_level == CovariateLevel::Area ? area_x(d) : draw();
        r(j * k + d, 2 * d) = 1.0;
        r(j * k + d, 2 * d + 1) = x;
      }
    }
    areas.emplace_back(Eigen::MatrixXd::Zero(n, k), std::move(r));
  }
  return Dataset(std::move(areas));
}

SymMat psi_from_rho(double rho, const Eigen::VectorXd& v) {
  const Eigen::MatrixXd outer = v * v.transpose();
  const Eigen::MatrixXd diag = outer.diagonal().asDiagonal();
  SymMat psi = SymMat::symmetrize(rho * outer + (1.0 - rho) * diag);
  if (!psi.is_psd()) throw InvalidConfig("rho gives a Psi that is not positive semidefinite");
  return psi;
}

Eigen::MatrixXd psd_root(const SymMat& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a.matrix());
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.matrix());
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Eigen::MatrixXd draw_effects(const Eigen::MatrixXd& root, int m, EffectDistribution dist,
                             Engine& rng) {
  const Eigen::Index k = root.rows();
  std::normal_distribution<double> z;
  Eigen::MatrixXd w(m, k);
  switch (dist) {
    case EffectDistribution::Normal:
      for (int i = 0; i < m; ++i) {
        for (Eigen::Index d = 0; d < k; ++d) w(i, d) = z(rng);
      }
      break;
    case EffectDistribution::StudentT: {
      // Multivariate t_5 has covariance 5/3 I; rescale to identity.
      std::chi_squared_distribution<double> chi5(5.0);
      const double scale = std::sqrt(3.0 / 5.0);
      for (int i = 0; i < m; ++i) {
        for (Eigen::Index d = 0; d < k; ++d) w(i, d) = z(rng);
        w.row(i) *= scale / std::sqrt(chi5(rng) / 5.0);
      }
      break;
    }
    case EffectDistribution::ChiSquare: {
      std::chi_squared_distribution<double> chi2(2.0);
      for (int i = 0; i < m; ++i) {
        for (Eigen::Index d = 0; d < k; ++d) w(i, d) = (chi2(rng) - 2.0) / 2.0;
      }
      break;
    }
  }
  return w * root.transpose();
}

Generator::Generator(const SimConfig& config, Dataset design)
    : design_(std::move(design)),
      psi_(config.psi()),
      sigma_(config.sigma),
      beta_(config.beta),
      psi_root_(psd_root(psi_)),
      sigma_root_(psd_root(sigma_)),
      mean_(design_.m(), design_.k()),
      dist_(config.effect_dist) {
  for (Eigen::Index i = 0; i < design_.m(); ++i) {
    mean_.row(i) = (mner::area_means(design_.area(i)).r_bar * beta_).transpose();
  }
}

Replicate Generator::draw(Engine& rng) const {
  const Eigen::Index m = design_.m();
  const Eigen::Index k = design_.k();
  const Eigen::MatrixXd v = draw_effects(psi_root_, static_cast<int>(m), dist_, rng);
  std::normal_distribution<double> z;

  std::vector<UnitBlock> areas;
  areas.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const UnitBlock& skel = design_.area(i);
    const Eigen::Index n = skel.n_units();
    Eigen::MatrixXd e(n, k);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index d = 0; d < k; ++d) e(j, d) = z(rng);
    }
    Eigen::MatrixXd y = e * sigma_root_.transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      y.row(j) += (skel.regressor(j) * beta_).transpose() + v.row(i);
    }
    areas.push_back(skel.with_responses(std::move(y)));
  }
  Eigen::MatrixXd theta = mean_ + v;
  return {Dataset(std::move(areas), design_.area_ids()), std::move(theta)};
}

}  // namespace mner::sim
