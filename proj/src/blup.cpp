#include "mner/blup.hpp"

#include "mner/block_algebra.hpp"
#include "mner/errors.hpp"

namespace mner {

FitResult gls_fit(const Dataset& data, const SymMat& psi, const SymMat& sigma) {
  if (psi.dim() != data.k() || sigma.dim() != data.k()) {
    throw InvalidInput("covariance dimension does not match the response dimension");
  }
  const Eigen::Index s = data.s();
  const SymMat sigma_inv = inverse_checked(sigma, "Sigma");

  FitResult fit;
  fit.psi = psi;
  fit.sigma = sigma;
  fit.per_area.reserve(static_cast<std::size_t>(data.m()));

  Eigen::MatrixXd xdx = Eigen::MatrixXd::Zero(s, s);
  Eigen::VectorXd xdy = Eigen::VectorXd::Zero(s);
  for (Eigen::Index i = 0; i < data.m(); ++i) {
    const UnitBlock& a = data.area(i);
    const int n = static_cast<int>(a.n_units());
    const double nd = static_cast<double>(n);

    // (Sigma + n Psi)^{-1} serves both C_i and Lambda_i^{-1} = n (Sigma + n Psi)^{-1}.
    const SymMat outer =
        inverse_checked(sigma + psi * nd, "Sigma + n*Psi for area " + data.area_ids()[i]);
    const Eigen::MatrixXd c = sigma_inv.matrix() * psi.matrix() * outer.matrix();

    AreaMeans mu = area_means(a);
    for (Eigen::Index j = 0; j < a.n_units(); ++j) {
      const auto r = a.regressor(j);
      const Eigen::MatrixXd rt_sinv = r.transpose() * sigma_inv.matrix();
      xdx.noalias() += rt_sinv * r;
      xdy.noalias() += rt_sinv * a.response(j);
    }
    const Eigen::MatrixXd rbar_t_c = (nd * nd) * (mu.r_bar.transpose() * c);
    xdx.noalias() -= rbar_t_c * mu.r_bar;
    xdy.noalias() -= rbar_t_c * mu.y_bar;

    AreaCache cache;
    cache.n = n;
    cache.lambda = lambda(psi, sigma, n);
    cache.lambda_inv = outer * nd;
    cache.shrinkage = psi.matrix() * cache.lambda_inv.matrix();
    cache.y_bar = std::move(mu.y_bar);
    cache.r_bar = std::move(mu.r_bar);
    fit.per_area.push_back(std::move(cache));
  }

  fit.beta_cov = gram_inverse(0.5 * (xdx + xdx.transpose()), "X'D^{-1}X");
  fit.beta = fit.beta_cov * xdy;
  return fit;
}

Eigen::MatrixXd shrinkage_matrix(const SymMat& psi, const SymMat& sigma, int n) {
  return psi.matrix() * inverse_checked(lambda(psi, sigma, n), "Lambda").matrix();
}

Eigen::VectorXd bayes_predict(const Eigen::VectorXd& beta, const Eigen::MatrixXd& shrinkage,
                              const Eigen::VectorXd& y_bar, const Eigen::MatrixXd& r_bar,
                              const Eigen::MatrixXd& c) {
  return c * beta + shrinkage * (y_bar - r_bar * beta);
}

Eigen::VectorXd bayes_predict(const Eigen::VectorXd& beta, const SymMat& psi, const SymMat& sigma,
                              const UnitBlock& area, const std::optional<Eigen::MatrixXd>& c) {
  const AreaMeans mu = area_means(area);
  const Eigen::MatrixXd b = shrinkage_matrix(psi, sigma, static_cast<int>(area.n_units()));
  return bayes_predict(beta, b, mu.y_bar, mu.r_bar, c ? *c : mu.r_bar);
}

EblupResult eblup_with_components(const Dataset& data, const CovComponents& components,
                                  const std::vector<PredictionTarget>& targets,
                                  const EblupOptions& options) {
  const SymMat psi = options.force_zero_psi ? SymMat::zero(data.k()) : components.psi_hat;
  EblupResult out{gls_fit(data, psi, components.sigma_hat), {}};
  out.fit.components = components;

  std::vector<PredictionTarget> all;
  if (targets.empty()) {
    for (Eigen::Index i = 0; i < data.m(); ++i) all.push_back({i, std::nullopt});
  }
  const auto& wanted = targets.empty() ? all : targets;

  out.predictions.reserve(wanted.size());
  for (const auto& t : wanted) {
    if (t.area < 0 || t.area >= data.m()) throw InvalidInput("target area index out of range");
    const AreaCache& cache = out.fit.per_area[static_cast<std::size_t>(t.area)];
    AreaPrediction p;
    p.area_id = data.area_ids()[static_cast<std::size_t>(t.area)];
    p.area_index = t.area;
    p.n_units = cache.n;
    p.target = t.c ? *t.c : cache.r_bar;
    if (p.target.rows() != data.k() || p.target.cols() != data.s()) {
      throw InvalidInput("target matrix c for area " + p.area_id + " must be k x s");
    }
    p.theta_hat = bayes_predict(out.fit.beta, cache.shrinkage, cache.y_bar, cache.r_bar, p.target);
    p.psi_truncated = components.truncated;
    out.predictions.push_back(std::move(p));
  }
  return out;
}

EblupResult eblup(const Dataset& data, const std::vector<PredictionTarget>& targets,
                  const EblupOptions& options) {
  return eblup_with_components(data, estimate_components(data), targets, options);
}

}  // namespace mner
