#include "mner/sim/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include <boost/math/distributions/normal.hpp>

#include "mner/blup.hpp"
#include "mner/errors.hpp"
#include "mner/sim/model.hpp"
#include "mner/sim/parallel.hpp"
#include "mner/uncertainty.hpp"
#include "mner/variance_components.hpp"

namespace mner::sim {

DenseGls dense_gls_oracle(const Dataset& data, const SymMat& psi, const SymMat& sigma) {
  const Eigen::Index k = data.k();
  const Eigen::Index nk = data.total_units() * k;
  if (nk > kDenseOracleLimit) {
    throw OracleTooLarge("N*k = " + std::to_string(nk) + " exceeds the dense oracle limit");
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nk, nk);
  Eigen::MatrixXd x(nk, data.s());
  Eigen::VectorXd y(nk);
  Eigen::Index offset = 0;
  for (const auto& a : data.areas()) {
    const Eigen::Index n = a.n_units();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index l = 0; l < n; ++l) {
        Eigen::MatrixXd blk = psi.matrix();
        if (j == l) blk += sigma.matrix();
        d.block(offset + j * k, offset + l * k, k, k) = blk;
      }
      y.segment(offset + j * k, k) = a.response(j);
    }
    x.middleRows(offset, n * k) = a.regressors();
    offset += n * k;
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(d);
  const Eigen::MatrixXd dinv_x = ldlt.solve(x);
  const Eigen::MatrixXd xdx = x.transpose() * dinv_x;
  DenseGls out;
  out.beta_cov = xdx.inverse();
  out.beta = out.beta_cov * (dinv_x.transpose() * y);
  return out;
}

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

Mat zeros(std::size_t p) { return Mat(p, Vec(p, 0.0)); }

// Inverse of a symmetric positive-definite matrix by Gauss-Jordan with
// partial pivoting.
Mat invert(Mat a) {
  const std::size_t p = a.size();
  Mat inv = zeros(p);
  for (std::size_t i = 0; i < p; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-300) throw RankDeficientDesign("scalar oracle: singular system");
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    const double d = a[c][c];
    for (std::size_t j = 0; j < p; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < p; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

double quad(const Vec& u, const Mat& a, const Vec& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) s += u[i] * a[i][j] * w[j];
  }
  return s;
}

Vec mat_vec(const Mat& a, const Vec& v) {
  Vec out(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += a[i][j] * v[j];
  }
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vec mean_row(const ScalarArea& a) {
  Vec out(a.x.front().size(), 0.0);
  for (const auto& row : a.x) {
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c];
  }
  for (double& v : out) v /= static_cast<double>(a.x.size());
  return out;
}

double mean(const Vec& v) {
  double s = 0.0;
  for (const double e : v) s += e;
  return s / static_cast<double>(v.size());
}

}  // namespace

ScalarPipeline univariate_eblup_oracle(const std::vector<ScalarArea>& areas, double alpha,
                                       std::optional<std::pair<double, double>> fixed) {
  if (areas.size() < 2) throw InvalidInput("scalar oracle needs at least two areas");
  const std::size_t p = areas.front().x.front().size();
  const std::size_t m = areas.size();
  std::size_t big_n = 0;
  for (const auto& a : areas) big_n += a.y.size();
  const double nn = static_cast<double>(big_n);
  const double md = static_cast<double>(m);

  std::vector<Vec> xbar;
  Vec ybar;
  for (const auto& a : areas) {
    xbar.push_back(mean_row(a));
    ybar.push_back(mean(a.y));
  }

  // OLS pieces.
  Mat gram = zeros(p);
  Vec xty(p, 0.0);
  for (const auto& a : areas) {
    for (std::size_t j = 0; j < a.y.size(); ++j) {
      for (std::size_t r = 0; r < p; ++r) {
        xty[r] += a.x[j][r] * a.y[j];
        for (std::size_t c = 0; c < p; ++c) gram[r][c] += a.x[j][r] * a.x[j][c];
      }
    }
  }
  const Mat gram_inv = invert(gram);

  ScalarPipeline out;
  if (fixed) {
    out.psi = out.psi0 = out.psi1 = fixed->first;
    out.sigma2 = fixed->second;
  } else {
    // Within-area regression on centred data, constant columns dropped.
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < p; ++c) {
      double raw = 0.0, centred = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        for (const auto& row : areas[i].x) {
          raw += row[c] * row[c];
          centred += (row[c] - xbar[i][c]) * (row[c] - xbar[i][c]);
        }
      }
      if (raw > 0.0 && std::sqrt(centred) > 1e-10 * std::sqrt(raw)) keep.push_back(c);
    }
    const std::size_t q = keep.size();
    Vec coef(q, 0.0);
    if (q > 0) {
      Mat g = zeros(q);
      Vec b(q, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < areas[i].y.size(); ++j) {
          const double yt = areas[i].y[j] - ybar[i];
          for (std::size_t r = 0; r < q; ++r) {
            const double xr = areas[i].x[j][keep[r]] - xbar[i][keep[r]];
            b[r] += xr * yt;
            for (std::size_t c = 0; c < q; ++c) {
              g[r][c] += xr * (areas[i].x[j][keep[c]] - xbar[i][keep[c]]);
            }
          }
        }
      }
      coef = mat_vec(invert(g), b);
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < areas[i].y.size(); ++j) {
        double r = areas[i].y[j] - ybar[i];
        for (std::size_t c = 0; c < q; ++c) r -= (areas[i].x[j][keep[c]] - xbar[i][keep[c]]) * coef[c];
        rss += r * r;
      }
    }
    out.s0 = static_cast<int>(q);
    const double df = nn - md - static_cast<double>(q);
    if (df < 1.0) throw InsufficientDegreesOfFreedom("scalar oracle: N - m - s0 < 1");
    out.sigma2 = rss / df;

    const Vec beta_ols = mat_vec(gram_inv, xty);
    double ee = 0.0;
    for (const auto& a : areas) {
      for (std::size_t j = 0; j < a.y.size(); ++j) {
        const double e = a.y[j] - dot(a.x[j], beta_ols);
        ee += e * e;
      }
    }
    out.psi0 = ee / nn - out.sigma2;

    // Exact E[psi0] - psi at (psi0, sigma2).
    const double ps = out.psi0, s2 = out.sigma2;
    Mat middle = zeros(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double n = static_cast<double>(areas[i].y.size());
      for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
          double acc = ps * n * n * xbar[i][r] * xbar[i][c];
          for (const auto& row : areas[i].x) acc += s2 * row[r] * row[c];
          middle[r][c] += acc;
        }
      }
    }
    Mat cov = zeros(p);
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) {
        double acc = 0.0;
        for (std::size_t u = 0; u < p; ++u) {
          for (std::size_t w = 0; w < p; ++w) acc += gram_inv[r][u] * middle[u][w] * gram_inv[w][c];
        }
        cov[r][c] = acc;
      }
    }
    double bias = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double n = static_cast<double>(areas[i].y.size());
      for (const auto& row : areas[i].x) {
        Vec kvec(p);
        for (std::size_t c = 0; c < p; ++c) kvec[c] = n * ps * xbar[i][c] + s2 * row[c];
        bias += quad(row, cov, row) - 2.0 * quad(kvec, gram_inv, row);
      }
    }
    bias /= nn;
    out.psi1 = out.psi0 - bias;
    out.truncated = out.psi1 < 0.0;
    out.psi = std::max(out.psi1, 0.0);
  }

  const double psi = out.psi, s2 = out.sigma2;

  // GLS with D_i^{-1} = I / s2 - J w_i.
  Mat xdx = zeros(p);
  Vec xdy(p, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double n = static_cast<double>(areas[i].y.size());
    const double w = psi / (s2 * (s2 + n * psi));
    for (std::size_t r = 0; r < p; ++r) {
      double acc_y = -n * n * w * xbar[i][r] * ybar[i];
      for (std::size_t j = 0; j < areas[i].y.size(); ++j) acc_y += areas[i].x[j][r] * areas[i].y[j] / s2;
      xdy[r] += acc_y;
      for (std::size_t c = 0; c < p; ++c) {
        double acc = -n * n * w * xbar[i][r] * xbar[i][c];
        for (const auto& row : areas[i].x) acc += row[r] * row[c] / s2;
        xdx[r][c] += acc;
      }
    }
  }
  const Mat beta_cov = invert(xdx);
  out.beta = mat_vec(beta_cov, xdy);

  const double z = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
  for (std::size_t a = 0; a < m; ++a) {
    const double na = static_cast<double>(areas[a].y.size());
    const double gamma = na * psi / (na * psi + s2);
    const double synth = dot(xbar[a], out.beta);
    out.theta.push_back(synth + gamma * (ybar[a] - synth));

    const double g1 = psi * s2 / (na * psi + s2);
    const double g2 = (1.0 - gamma) * (1.0 - gamma) * quad(xbar[a], beta_cov, xbar[a]);

    const double lam_a = psi + s2 / na;
    double inner = 0.0, vsum = 0.0;
    for (const auto& other : areas) {
      const double ni = static_cast<double>(other.y.size());
      const double lam_i = psi + s2 / ni;
      inner += ni * ni * 2.0 * lam_i * lam_i / lam_a;
      vsum += ni * ni * 2.0 * s2 * s2 * lam_i * lam_i / (lam_a * lam_a);
    }
    const double pp = nn * psi + md * s2;
    const double g3 = s2 * s2 / (na * na * nn * nn * lam_a * lam_a) * inner +
                      pp * pp * 2.0 * s2 * s2 / (na * na * nn * nn * (nn - md) * lam_a * lam_a * lam_a);
    out.g1.push_back(g1);
    out.g2.push_back(g2);
    out.g3.push_back(g3);
    out.msem.push_back(g1 + g2 + 2.0 * g3);

    const double la2 = lam_a * lam_a;
    const double psp = psi * psi * s2 / la2;
    const double v = vsum / (na * na * na * na * nn * nn) +
                     2.0 * md * md / (na * na * na * na * nn * nn * (nn - md)) *
                         std::pow(s2 * s2 * s2 / la2, 2) +
                     2.0 / (na * na * (nn - md)) * psp * psp -
                     2.0 * md / (na * na * na * nn * (nn - md)) *
                         (psp * s2 * s2 / lam_a + std::pow(s2 * s2 * psi / la2, 2));
    out.v.push_back(std::max(v, 0.0));

    const double naive = g1 + g2 + g3;
    const double zs = naive > 0.0 ? z + (z * z * z + z) * out.v.back() / (8.0 * naive * naive) : z;
    out.z_star.push_back(zs);
    const double half = zs * std::sqrt(out.msem.back());
    out.lower.push_back(out.theta.back() - half);
    out.upper.push_back(out.theta.back() + half);
  }
  return out;
}

std::vector<ScalarArea> component_data(const Dataset& data, Eigen::Index d) {
  const Eigen::Index k = data.k();
  std::vector<Eigen::Index> cols;
  for (Eigen::Index c = 0; c < data.s(); ++c) {
    bool used = false;
    for (const auto& a : data.areas()) {
      for (Eigen::Index j = 0; j < a.n_units() && !used; ++j) used = a.regressors()(j * k + d, c) != 0.0;
      if (used) break;
    }
    if (used) cols.push_back(c);
  }
  std::vector<ScalarArea> out;
  out.reserve(static_cast<std::size_t>(data.m()));
  for (const auto& a : data.areas()) {
    ScalarArea sa;
    for (Eigen::Index j = 0; j < a.n_units(); ++j) {
      sa.y.push_back(a.responses()(j, d));
      std::vector<double> row;
      row.reserve(cols.size());
      for (const auto c : cols) row.push_back(a.regressors()(j * k + d, c));
      sa.x.push_back(std::move(row));
    }
    out.push_back(std::move(sa));
  }
  return out;
}

}  // namespace mner::sim

namespace mner::sim {

namespace {

struct MomentSums {
  Eigen::MatrixXd sum, sq;
  MomentSums() = default;
  explicit MomentSums(Eigen::Index k) : sum(Eigen::MatrixXd::Zero(k, k)), sq(Eigen::MatrixXd::Zero(k, k)) {}
  void add(const Eigen::MatrixXd& x) {
    sum += x;
    sq += x.cwiseProduct(x);
  }
  void merge(const MomentSums& o) {
    sum += o.sum;
    sq += o.sq;
  }
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> mean_se(long n) const {
    const double r = static_cast<double>(n);
    Eigen::MatrixXd mean = sum / r;
    Eigen::MatrixXd var = ((sq / r) - mean.cwiseProduct(mean)) * (r / (r - 1.0));
    return {mean, (var.cwiseMax(0.0) / r).cwiseSqrt()};
  }
};

struct BiasBlock {
  MomentSums plain, controlled;
};

}  // namespace

double BiasCheck::max_z() const {
  double z = 0.0;
  for (Eigen::Index i = 0; i < formula.rows(); ++i) {
    for (Eigen::Index j = 0; j < formula.cols(); ++j) {
      const double d = std::abs(controlled_mean(i, j) - formula(i, j));
      z = std::max(z, controlled_se(i, j) > 0.0 ? d / controlled_se(i, j) : (d > 0.0 ? HUGE_VAL : 0.0));
    }
  }
  return z;
}

namespace {

// Shared driver: `draw(r)` returns replicate r's data set.
BiasCheck bias_driver(const Dataset& design, const SymMat& psi, const SymMat& sigma, const Eigen::VectorXd& beta,
                      long replications, unsigned workers, const std::function<Dataset(std::size_t)>& draw) {
  if (replications < 2) throw InvalidConfig("bias check needs at least two replications");
  if (workers == 0) workers = default_workers();
  const Eigen::Index k = design.k();
  const double n_total = static_cast<double>(design.total_units());

  auto blocks = run_blocks(
      static_cast<std::size_t>(replications), 256, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        BiasBlock acc{MomentSums(k), MomentSums(k)};
        for (std::size_t r = begin; r < end; ++r) {
          const Dataset data = draw(r);
          const SigmaEstimate sig = estimate_sigma(data);
          const SymMat psi0 = estimate_psi0(data, sig.sigma);
          Eigen::MatrixXd uu = Eigen::MatrixXd::Zero(k, k);
          for (const auto& a : data.areas()) {
            for (Eigen::Index j = 0; j < a.n_units(); ++j) {
              const Eigen::VectorXd u = a.response(j) - a.regressor(j) * beta;
              uu.noalias() += u * u.transpose();
            }
          }
          acc.plain.add(psi0.matrix() - psi.matrix());
          acc.controlled.add(psi0.matrix() - uu / n_total + sigma.matrix());
        }
        return acc;
      });
  BiasBlock total{MomentSums(k), MomentSums(k)};
  for (const auto& b : blocks) {
    total.plain.merge(b.plain);
    total.controlled.merge(b.controlled);
  }

  BiasCheck out;
  out.formula = bias_psi0({psi, sigma, design, ols_gram_inverse(design)}).matrix();
  std::tie(out.plain_mean, out.plain_se) = total.plain.mean_se(replications);
  std::tie(out.controlled_mean, out.controlled_se) = total.controlled.mean_se(replications);
  out.replications = replications;
  return out;
}

}  // namespace

BiasCheck bias_monte_carlo(const Dataset& design, const SymMat& psi, const SymMat& sigma,
                           const Eigen::VectorXd& beta, long replications, std::uint64_t seed, unsigned workers) {
  if (psi.dim() != design.k() || sigma.dim() != design.k() || beta.size() != design.s()) {
    throw InvalidInput("bias check: parameter shapes do not match the design");
  }
  const Eigen::MatrixXd psi_root = psd_root(psi);
  const Eigen::MatrixXd sigma_root = psd_root(sigma);
  return bias_driver(design, psi, sigma, beta, replications, workers, [&](std::size_t r) {
    Engine rng = make_engine(seed, Stream::Oracle, r);
    std::normal_distribution<double> z;
    std::vector<UnitBlock> blocks;
    blocks.reserve(static_cast<std::size_t>(design.m()));
    for (const auto& a : design.areas()) {
      Eigen::VectorXd w(a.k());
      for (Eigen::Index d = 0; d < a.k(); ++d) w(d) = z(rng);
      const Eigen::VectorXd v = psi_root * w;
      Eigen::MatrixXd y(a.n_units(), a.k());
      for (Eigen::Index j = 0; j < a.n_units(); ++j) {
        for (Eigen::Index d = 0; d < a.k(); ++d) w(d) = z(rng);
        y.row(j) = (a.regressor(j) * beta + v + sigma_root * w).transpose();
      }
      blocks.push_back(a.with_responses(std::move(y)));
    }
    return Dataset(std::move(blocks), design.area_ids());
  });
}

BiasCheck bias_monte_carlo(const SimConfig& config, long replications, unsigned workers) {
  config.validate();
  const Generator gen(config, build_design(config));
  return bias_driver(gen.design(), gen.psi(), gen.sigma(), gen.beta(), replications, workers, [&](std::size_t r) {
    Engine rng = make_engine(config.master_seed, Stream::Oracle, r);
    return gen.draw(rng).data;
  });
}

namespace {

Dataset random_instance(std::mt19937_64& rng, Eigen::Index m, Eigen::Index k) {
  std::uniform_int_distribution<int> size(1, 5);
  std::normal_distribution<double> z;
  std::vector<UnitBlock> blocks;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int n = size(rng);
    Eigen::MatrixXd y(n, k);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n * k, 2 * k);
    for (int j = 0; j < n; ++j) {
      for (Eigen::Index d = 0; d < k; ++d) {
        y(j, d) = z(rng);
        r(j * k + d, 2 * d) = 1.0;
        r(j * k + d, 2 * d + 1) = z(rng);
      }
    }
    blocks.emplace_back(std::move(y), std::move(r));
  }
  return Dataset(std::move(blocks));
}

SymMat random_spd(std::mt19937_64& rng, Eigen::Index k) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
  return SymMat(a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(k, k));
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace

double gls_equivalence_error(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 7);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng() % 3);
    const Dataset d = random_instance(rng, m, k);
    const SymMat psi = random_spd(rng, k), sigma = random_spd(rng, k);
    const DenseGls dense = dense_gls_oracle(d, psi, sigma);
    const FitResult fit = gls_fit(d, psi, sigma);
    worst = std::max({worst, rel_err(fit.beta, dense.beta), rel_err(fit.beta_cov, dense.beta_cov)});
  }
  return worst;
}

double scalar_reduction_error(std::uint64_t seed) {
  SimConfig c = study_config(2, 0.5, EffectDistribution::Normal);
  c.master_seed = seed;
  const Generator gen(c, build_design(c));
  Engine rng = make_engine(seed, Stream::Oracle, 0);
  const Replicate rep = gen.draw(rng);
  std::vector<UnitBlock> blocks;
  for (const auto& a : rep.data.areas()) {
    Eigen::MatrixXd r(a.n_units(), 2);
    for (Eigen::Index j = 0; j < a.n_units(); ++j) r.row(j) = a.regressor(j).row(0).head(2);
    blocks.emplace_back(a.responses().col(0), std::move(r));
  }
  const Dataset d1(std::move(blocks));
  const ScalarPipeline uni = univariate_eblup_oracle(component_data(d1, 0), c.alpha);
  EblupResult res = eblup(d1);
  const auto sizes = d1.area_sizes();
  const SizeProfile profile(sizes);
  double worst = std::abs(res.fit.components->psi_hat(0, 0) - uni.psi) / std::max(std::abs(uni.psi), 1e-300);
  for (std::size_t i = 0; i < res.predictions.size(); ++i) {
    auto& p = res.predictions[i];
    msem_estimate(res.fit, profile, p);
    const IntervalPair ci = corrected_interval(p, Eigen::VectorXd::Ones(1), c.alpha, res.fit, profile);
    for (const auto& [x, y] : {std::pair{p.theta_hat(0), uni.theta[i]}, {p.mse->msem(0, 0), uni.msem[i]},
                               {ci.corrected.lower, uni.lower[i]}, {ci.corrected.upper, uni.upper[i]}}) {
      worst = std::max(worst, std::abs(x - y) / std::max(std::abs(y), 1.0));
    }
  }
  return worst;
}

}  // namespace mner::sim
