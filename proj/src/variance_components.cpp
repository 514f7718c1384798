#include "mner/variance_components.hpp"

#include <algorithm>
#include <cmath>

#include "mner/block_algebra.hpp"
#include "mner/errors.hpp"

namespace mner {

namespace {

// A centred column counts as annihilated when its norm falls below this
// fraction of the uncentred column norm.
constexpr double kCentredColumnTolerance = 1e-10;

constexpr double kTruncationRoundoff = 1e-12;

}  // namespace

Eigen::MatrixXd ols_gram_inverse(const Dataset& data) {
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(data.s(), data.s());
  for (const auto& a : data.areas()) xtx.noalias() += a.regressors().transpose() * a.regressors();
  return gram_inverse(xtx, "X'X");
}

SigmaEstimate estimate_sigma(const Dataset& data) {
  const Eigen::Index k = data.k();
  const Eigen::Index s = data.s();
  const Eigen::Index nk = data.total_units() * k;

  Eigen::MatrixXd x_tilde(nk, s);
  Eigen::VectorXd y_tilde(nk);
  Eigen::VectorXd raw_norm2 = Eigen::VectorXd::Zero(s);
  Eigen::Index row = 0;
  for (const auto& a : data.areas()) {
    const AreaMeans mu = area_means(a);
    for (Eigen::Index j = 0; j < a.n_units(); ++j, row += k) {
      x_tilde.middleRows(row, k) = a.regressor(j) - mu.r_bar;
      y_tilde.segment(row, k) = a.response(j) - mu.y_bar;
    }
    raw_norm2 += a.regressors().colwise().squaredNorm().transpose();
  }

  std::vector<Eigen::Index> kept;
  for (Eigen::Index c = 0; c < s; ++c) {
    const double raw = std::sqrt(raw_norm2(c));
    if (raw > 0.0 && x_tilde.col(c).norm() > kCentredColumnTolerance * raw) kept.push_back(c);
  }

  Eigen::VectorXd resid = y_tilde;
  int s0 = 0;
  if (!kept.empty()) {
    Eigen::MatrixXd xk(nk, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t c = 0; c < kept.size(); ++c) {
      xk.col(static_cast<Eigen::Index>(c)) = x_tilde.col(kept[c]);
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(xk);
    s0 = static_cast<int>(cod.rank());
    resid.noalias() -= xk * cod.solve(y_tilde);
  }

  const Eigen::Index df = data.total_units() - data.m() - s0;
  if (df < 1) {
    throw InsufficientDegreesOfFreedom("N - m - s0 = " + std::to_string(df) +
                                       " leaves no within-area degrees of freedom");
  }

  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index r = 0; r < nk; r += k) {
    const auto e = resid.segment(r, k);
    ss.noalias() += e * e.transpose();
  }
  return {SymMat::symmetrize(ss / static_cast<double>(df)), s0};
}

SymMat estimate_psi0(const Dataset& data, const SymMat& sigma_hat) {
  const Eigen::Index k = data.k();
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(data.s());
  for (const auto& a : data.areas()) {
    for (Eigen::Index j = 0; j < a.n_units(); ++j) {
      xty.noalias() += a.regressor(j).transpose() * a.response(j);
    }
  }
  const Eigen::VectorXd beta_ols = ols_gram_inverse(data) * xty;

  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(k, k);
  for (const auto& a : data.areas()) {
    for (Eigen::Index j = 0; j < a.n_units(); ++j) {
      const Eigen::VectorXd e = a.response(j) - a.regressor(j) * beta_ols;
      ss.noalias() += e * e.transpose();
    }
  }
  ss /= static_cast<double>(data.total_units());
  return SymMat::symmetrize(ss) - sigma_hat;
}

SymMat bias_psi0(const BiasInputs& in) {
  const Dataset& data = in.data;
  const Eigen::Index s = data.s();
  const Eigen::Index k = data.k();
  const Eigen::MatrixXd& a_inv = in.xtx_inv;
  const Eigen::MatrixXd& psi = in.psi.matrix();
  const Eigen::MatrixXd& sigma = in.sigma.matrix();

  // X'DX = sum_i [ sum_j R_ij' Sigma R_ij + n_i^2 Rbar_i' Psi Rbar_i ]
  Eigen::MatrixXd xdx = Eigen::MatrixXd::Zero(s, s);
  // M = sum_i n_i^2 Rbar_i A Rbar_i',  S = sum_ij R_ij A R_ij'
  Eigen::MatrixXd m_term = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd s_term = Eigen::MatrixXd::Zero(k, k);
  for (const auto& a : data.areas()) {
    const AreaMeans mu = area_means(a);
    const double n = static_cast<double>(a.n_units());
    for (Eigen::Index j = 0; j < a.n_units(); ++j) {
      const auto r = a.regressor(j);
      xdx.noalias() += r.transpose() * sigma * r;
      s_term.noalias() += r * a_inv * r.transpose();
    }
    xdx.noalias() += (n * n) * (mu.r_bar.transpose() * psi * mu.r_bar);
    m_term.noalias() += (n * n) * (mu.r_bar * a_inv * mu.r_bar.transpose());
  }
  const Eigen::MatrixXd cov_ols = a_inv * xdx * a_inv;

  Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(k, k);
  for (const auto& a : data.areas()) {
    for (Eigen::Index j = 0; j < a.n_units(); ++j) {
      const auto r = a.regressor(j);
      quad.noalias() += r * cov_ols * r.transpose();
    }
  }

  const Eigen::MatrixXd cross = psi * m_term + sigma * s_term;
  const Eigen::MatrixXd bias = quad - cross - cross.transpose();
  return SymMat::symmetrize(bias / static_cast<double>(data.total_units()));
}

Truncation truncate_psd(const SymMat& psi1) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(psi1.matrix());
  const Eigen::VectorXd& ev = es.eigenvalues();
  Truncation out{psi1, false, ev};
  if (ev.minCoeff() >= 0.0) return out;

  const double tol = kTruncationRoundoff * ev.cwiseAbs().maxCoeff();
  out.truncated = ev.minCoeff() < -tol;
  const Eigen::VectorXd clipped = ev.cwiseMax(0.0);
  const Eigen::MatrixXd& h = es.eigenvectors();
  out.psi = SymMat::symmetrize(h * clipped.asDiagonal() * h.transpose());
  return out;
}

CovComponents estimate_psi(const Dataset& data, const SigmaEstimate& sigma) {
  CovComponents out;
  out.sigma_hat = sigma.sigma;
  out.s0 = sigma.s0;
  out.psi0 = estimate_psi0(data, sigma.sigma);
  const BiasInputs in{out.psi0, sigma.sigma, data, ols_gram_inverse(data)};
  out.psi1 = out.psi0 - bias_psi0(in);
  Truncation t = truncate_psd(out.psi1);
  out.psi_hat = std::move(t.psi);
  out.truncated = t.truncated;
  out.eigenvalues = std::move(t.eigenvalues);
  return out;
}

CovComponents estimate_components(const Dataset& data) {
  return estimate_psi(data, estimate_sigma(data));
}

}  // namespace mner
