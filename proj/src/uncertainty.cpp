#include "mner/uncertainty.hpp"

#include <cmath>
#include <map>

#include "mner/block_algebra.hpp"
#include "mner/errors.hpp"
#include "mner/normal.hpp"

namespace mner {

SizeProfile::SizeProfile(std::span<const int> sizes) {
  std::map<int, int> counts;
  for (const int n : sizes) {
    if (n < 1) throw InvalidInput("area sizes must be positive");
    ++counts[n];
    total_ += n;
  }
  areas_ = static_cast<int>(sizes.size());
  groups_.assign(counts.begin(), counts.end());
}

SymMat g1(const SymMat& psi, const SymMat& sigma, int n_a) {
  const SymMat lambda_inv = inverse_checked(lambda(psi, sigma, n_a), "Lambda_a");
  return SymMat::symmetrize(psi.matrix() * lambda_inv.matrix() * sigma.matrix() /
                            static_cast<double>(n_a));
}

SymMat g2(const FitResult& fit, Eigen::Index area, const Eigen::MatrixXd& c) {
  const AreaCache& cache = fit.per_area.at(static_cast<std::size_t>(area));
  const Eigen::MatrixXd mm = c - cache.shrinkage * cache.r_bar;
  return SymMat::symmetrize(mm * fit.beta_cov * mm.transpose());
}

SymMat g3(const SymMat& psi, const SymMat& sigma, const SizeProfile& sizes, int n_a) {
  const double big_n = sizes.total();
  const double m = sizes.areas();
  if (big_n <= m) {
    throw InsufficientDegreesOfFreedom("g3 requires N > m (N = " + std::to_string(sizes.total()) +
                                       ", m = " + std::to_string(sizes.areas()) + ")");
  }
  const Eigen::MatrixXd& ps = psi.matrix();
  const Eigen::MatrixXd& sg = sigma.matrix();
  const Eigen::MatrixXd la_inv = inverse_checked(lambda(psi, sigma, n_a), "Lambda_a").matrix();

  const Eigen::Index k = psi.dim();
  Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [n, count] : sizes.groups()) {
    const Eigen::MatrixXd li = lambda(psi, sigma, n).matrix();
    const double w = static_cast<double>(count) * n * n;
    inner.noalias() += w * (li * la_inv * li + (la_inv * li).trace() * li);
  }
  const double na2 = 1.0 / (static_cast<double>(n_a) * n_a);
  const Eigen::MatrixXd sl = sg * la_inv;
  Eigen::MatrixXd out = (na2 / (big_n * big_n)) * (sl * inner * sl.transpose());

  const Eigen::MatrixXd p = big_n * ps + m * sg;
  const Eigen::MatrixXd pl = p * la_inv;
  const Eigen::MatrixXd mid = sg * la_inv * sg + (la_inv * sg).trace() * sg;
  out.noalias() += (na2 / (big_n * big_n * (big_n - m))) * (pl * mid * pl.transpose());
  return SymMat::symmetrize(out);
}

MsemBreakdown msem_estimate(const FitResult& fit, const SizeProfile& sizes, Eigen::Index area,
                            const Eigen::MatrixXd& c) {
  const int n_a = fit.per_area.at(static_cast<std::size_t>(area)).n;
  MsemBreakdown out;
  out.g1 = g1(fit.psi, fit.sigma, n_a);
  out.g2 = g2(fit, area, c);
  out.g3 = g3(fit.psi, fit.sigma, sizes, n_a);
  out.naive = out.g1 + out.g2 + out.g3;
  out.msem = out.naive + out.g3;
  out.non_psd = out.msem.min_eigenvalue() < 0.0;
  return out;
}

void msem_estimate(const FitResult& fit, const SizeProfile& sizes, AreaPrediction& pred) {
  pred.mse = msem_estimate(fit, sizes, pred.area_index, pred.target);
}

double v_approx_raw(const SymMat& psi, const SymMat& sigma, const Eigen::VectorXd& ell,
                    const SizeProfile& sizes, int n_a) {
  const double big_n = sizes.total();
  const double m = sizes.areas();
  if (big_n <= m) throw InsufficientDegreesOfFreedom("V requires N > m");
  if (ell.size() != psi.dim()) throw InvalidInput("ell has the wrong dimension");

  const Eigen::MatrixXd& ps = psi.matrix();
  const Eigen::MatrixXd& sg = sigma.matrix();
  const Eigen::MatrixXd la = inverse_checked(lambda(psi, sigma, n_a), "Lambda_a").matrix();
  const double na = n_a;

  const Eigen::RowVectorXd ls = ell.transpose() * sg;         // l' Sigma
  const Eigen::RowVectorXd lsl = ls * la;                     // l' Sigma La^{-1}
  const Eigen::RowVectorXd lpl = ell.transpose() * ps * la;   // l' Psi La^{-1}

  double sum_i = 0.0;
  for (const auto& [n, count] : sizes.groups()) {
    const Eigen::MatrixXd li = lambda(psi, sigma, n).matrix();
    const double a = lsl * li * ell;
    const double b = lsl * li * la * sg * ell;
    const double c = ell.dot(li * ell);
    sum_i += static_cast<double>(count) * n * n * (a * a + b * c);
  }
  const double t1 = sum_i / (std::pow(na, 4) * big_n * big_n);

  const double sss = lsl * sg * la * sg * ell;  // l' S La S La S l
  const double t2 = 2.0 * m * m / (std::pow(na, 4) * big_n * big_n * (big_n - m)) * sss * sss;

  const double psp = lpl * sg * la * ps * ell;  // l' P La S La P l
  const double t3 = 2.0 / (na * na * (big_n - m)) * psp * psp;

  const double ss = lsl * sg * ell;             // l' S La S l
  const double ssp = lsl * sg * la * ps * ell;  // l' S La S La P l
  const double t4 = -2.0 * m / (na * na * na * big_n * (big_n - m)) * (psp * ss + ssp * ssp);

  return t1 + t2 + t3 + t4;
}

double v_approx(const SymMat& psi, const SymMat& sigma, const Eigen::VectorXd& ell,
                const SizeProfile& sizes, int n_a) {
  return std::max(v_approx_raw(psi, sigma, ell, sizes, n_a), 0.0);
}

double v_delta(const SymMat& psi, const SymMat& sigma, const Eigen::VectorXd& ell,
               const SizeProfile& sizes, int n_a) {
  const double big_n = sizes.total();
  const double m = sizes.areas();
  if (big_n <= m) throw InsufficientDegreesOfFreedom("V requires N > m");
  if (ell.size() != psi.dim()) throw InvalidInput("ell has the wrong dimension");

  const Eigen::MatrixXd la = inverse_checked(lambda(psi, sigma, n_a), "Lambda_a").matrix();
  const Eigen::VectorXd u = la * sigma.matrix() * ell / static_cast<double>(n_a);
  const Eigen::VectorXd w = la * psi.matrix() * ell;

  double between = 0.0;
  for (const auto& [n, count] : sizes.groups()) {
    const double q = u.dot(lambda(psi, sigma, n).matrix() * u);
    between += static_cast<double>(count) * n * n * q * q;
  }
  const Eigen::MatrixXd b = -(m / big_n) * u * u.transpose() + w * w.transpose() / static_cast<double>(n_a);
  const Eigen::MatrixXd bs = b * sigma.matrix();
  return 2.0 * between / (big_n * big_n) + 2.0 * (bs * bs).trace() / (big_n - m);
}

std::string to_string(VarianceForm f) { return f == VarianceForm::Printed ? "printed" : "delta"; }

VarianceForm variance_form_from_string(const std::string& s) {
  if (s == "printed") return VarianceForm::Printed;
  if (s == "delta") return VarianceForm::Delta;
  throw InvalidInput("variance form must be printed or delta, got '" + s + "'");
}

double v_hat(VarianceForm form, const SymMat& psi, const SymMat& sigma, const Eigen::VectorXd& ell,
             const SizeProfile& sizes, int n_a) {
  return form == VarianceForm::Printed ? v_approx(psi, sigma, ell, sizes, n_a)
                                       : v_delta(psi, sigma, ell, sizes, n_a);
}

double corrected_quantile(double z, double v, double mse_scalar) {
  return z + (z * z * z + z) * v / (8.0 * mse_scalar * mse_scalar);
}

IntervalPair corrected_interval(const AreaPrediction& pred, const Eigen::VectorXd& ell, double alpha,
                                const FitResult& fit, const SizeProfile& sizes, VarianceForm form) {
  if (!pred.mse) throw InvalidInput("prediction for area " + pred.area_id + " has no msem");
  if (ell.size() != pred.theta_hat.size()) throw InvalidInput("ell has the wrong dimension");

  const double msem = pred.mse->msem.quad(ell);
  if (!(msem > 0.0)) {
    throw NonpositiveMSE("ell' msem ell = " + std::to_string(msem) + " for area " + pred.area_id);
  }
  const double center = ell.dot(pred.theta_hat);
  const double half_width = std::sqrt(msem);
  const double z = normal::upper_half_alpha(alpha);
  const double v = v_hat(form, fit.psi, fit.sigma, ell, sizes, pred.n_units);
  const double second_order = pred.mse->naive.quad(ell);

  IntervalPair out;
  out.psi_truncated = pred.psi_truncated;
  out.naive = {center - z * half_width, center + z * half_width, z, v, msem, alpha,
               IntervalMethod::Naive};
  const double z_star = second_order > 0.0 ? corrected_quantile(z, v, second_order) : z;
  out.corrected = {center - z_star * half_width, center + z_star * half_width, z_star, v, msem,
                   alpha, IntervalMethod::Corrected};
  return out;
}

double theoretical_coverage(double z, double v, double mse_scalar) {
  return 2.0 * normal::cdf(z) - 1.0 -
         v / (4.0 * mse_scalar * mse_scalar) * (z * z * z + z) * normal::pdf(z);
}

std::string to_string(IntervalMethod m) {
  return m == IntervalMethod::Naive ? "naive" : "corrected";
}

}  // namespace mner
