#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mner/blup.hpp"
#include "mner/sym_mat.hpp"

namespace mner {

/// Area sizes collapsed to (n, multiplicity) pairs, plus N and m. The sums
/// over areas in g3 and V only depend on n_i, so they run over distinct sizes.
class SizeProfile {
 public:
  explicit SizeProfile(std::span<const int> sizes);

  const std::vector<std::pair<int, int>>& groups() const { return groups_; }
  int total() const { return total_; }
  int areas() const { return areas_; }

 private:
  std::vector<std::pair<int, int>> groups_;
  int total_ = 0;
  int areas_ = 0;
};

/// G1 = n^{-1} Psi Lambda^{-1} Sigma, the posterior covariance of v_a.
SymMat g1(const SymMat& psi, const SymMat& sigma, int n_a);

/// G2 = M (X'D^{-1}X)^{-1} M' with M = c - B_a Rbar_a, at the fit's (Psi, Sigma).
SymMat g2(const FitResult& fit, Eigen::Index area, const Eigen::MatrixXd& c);

/// G3, the covariance-estimation contribution to the MSE matrix.
SymMat g3(const SymMat& psi, const SymMat& sigma, const SizeProfile& sizes, int n_a);

/// Plug-in MSE matrix estimate for one area at the fit's (Psi, Sigma).
MsemBreakdown msem_estimate(const FitResult& fit, const SizeProfile& sizes, Eigen::Index area,
                            const Eigen::MatrixXd& c);
/// Fills `pred.mse` in place.
void msem_estimate(const FitResult& fit, const SizeProfile& sizes, AreaPrediction& pred);

/// Leading-order second moment of ell' msem ell - ell' MSEM ell, as written
/// (may be negative at extreme inputs).
double v_approx_raw(const SymMat& psi, const SymMat& sigma, const Eigen::VectorXd& ell,
                    const SizeProfile& sizes, int n_a);
/// max(v_approx_raw, 0).
double v_approx(const SymMat& psi, const SymMat& sigma, const Eigen::VectorXd& ell,
                const SizeProfile& sizes, int n_a);

/// Delta-method second moment of ell' msem ell - ell' MSEM ell under normal
/// effects: 2 N^-2 sum n_i^2 (u' La_i u)^2 + 2 tr(B Sigma B Sigma) / (N - m),
/// u = La_a^-1 Sigma ell / n_a, w = La_a^-1 Psi ell,
/// B = -(m/N) u u' + w w' / n_a. Non-negative by construction.
double v_delta(const SymMat& psi, const SymMat& sigma, const Eigen::VectorXd& ell,
               const SizeProfile& sizes, int n_a);

/// Which V feeds z*: the closed form as written, or the delta-method form.
enum class VarianceForm { Printed, Delta };
std::string to_string(VarianceForm f);
VarianceForm variance_form_from_string(const std::string& s);

double v_hat(VarianceForm form, const SymMat& psi, const SymMat& sigma, const Eigen::VectorXd& ell,
             const SizeProfile& sizes, int n_a);

enum class IntervalMethod { Naive, Corrected };

struct IntervalResult {
  double lower = 0.0;
  double upper = 0.0;
  double z_star = 0.0;
  double v_hat = 0.0;
  double msem_scalar = 0.0;  // ell' msem ell
  double alpha = 0.05;
  IntervalMethod method = IntervalMethod::Corrected;
  double length() const { return upper - lower; }
  bool covers(double x) const { return lower <= x && x <= upper; }
};

struct IntervalPair {
  IntervalResult naive;
  IntervalResult corrected;
  bool psi_truncated = false;
};

/// z* = z + (z^3 + z) V / (8 M^2), with M the plug-in ell'(g1 + g2 + g3)ell.
double corrected_quantile(double z, double v, double mse_scalar);

/// Naive and coverage-corrected intervals for ell' theta_a. `pred.mse` must be
/// filled. Throws NonpositiveMSE if ell' msem ell <= 0.
IntervalPair corrected_interval(const AreaPrediction& pred, const Eigen::VectorXd& ell, double alpha,
                                const FitResult& fit, const SizeProfile& sizes,
                                VarianceForm form = VarianceForm::Printed);

/// 2 Phi(z) - 1 - V / (4 M^2) (z^3 + z) phi(z).
double theoretical_coverage(double z, double v, double mse_scalar);

std::string to_string(IntervalMethod m);

}  // namespace mner
