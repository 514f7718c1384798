#include "mner/sim/study.hpp"

#include <cmath>

#include "mner/blup.hpp"
#include "mner/errors.hpp"
#include "mner/sim/model.hpp"
#include "mner/sim/oracles.hpp"
#include "mner/sim/parallel.hpp"
#include "mner/uncertainty.hpp"
#include "mner/variance_components.hpp"

namespace mner::sim {

namespace {

constexpr std::size_t kBlockSize = 64;
constexpr double kMaxFailureRate = 0.01;

std::vector<Eigen::MatrixXd> zero_mats(std::size_t count, Eigen::Index k) {
  return std::vector<Eigen::MatrixXd>(count, Eigen::MatrixXd::Zero(k, k));
}

struct MomentSum {
  Eigen::MatrixXd sum;
  Eigen::MatrixXd sum_sq;

  explicit MomentSum(Eigen::Index k = 0)
      : sum(Eigen::MatrixXd::Zero(k, k)), sum_sq(Eigen::MatrixXd::Zero(k, k)) {}
  void add(const Eigen::MatrixXd& x) {
    sum += x;
    sum_sq += x.cwiseProduct(x);
  }
  void merge(const MomentSum& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  MeanWithError finish(long n) const {
    if (n < 2) return {sum, Eigen::MatrixXd::Constant(sum.rows(), sum.cols(), NAN)};
    const double nd = static_cast<double>(n);
    const Eigen::MatrixXd mean = sum / nd;
    const Eigen::MatrixXd var = (sum_sq / nd - mean.cwiseProduct(mean)) * (nd / (nd - 1.0));
    return {mean, (var.cwiseMax(0.0) / nd).cwiseSqrt()};
  }
};

struct PhaseA {
  std::vector<Eigen::MatrixXd> eb, direct, uni, gap;
  MomentSum sigma, psi0, psi;
  long used = 0, failed = 0, truncated = 0;

  PhaseA(std::size_t m, Eigen::Index k)
      : eb(zero_mats(m, k)), direct(zero_mats(m, k)), uni(zero_mats(m, k)), gap(zero_mats(m, k)),
        sigma(k), psi0(k), psi(k) {}
  PhaseA() = default;

  void merge(const PhaseA& o) {
    for (std::size_t i = 0; i < eb.size(); ++i) {
      eb[i] += o.eb[i];
      direct[i] += o.direct[i];
      uni[i] += o.uni[i];
      gap[i] += o.gap[i];
    }
    sigma.merge(o.sigma);
    psi0.merge(o.psi0);
    psi.merge(o.psi);
    used += o.used;
    failed += o.failed;
    truncated += o.truncated;
  }
};

struct PhaseB {
  std::vector<Eigen::MatrixXd> msem, naive;
  // [ell][area]
  std::vector<std::vector<double>> cover_naive, cover_corr, len_naive, len_corr;
  long used = 0, failed = 0, truncated = 0;

  PhaseB(std::size_t m, Eigen::Index k, std::size_t n_ell)
      : msem(zero_mats(m, k)),
        naive(zero_mats(m, k)),
        cover_naive(n_ell, std::vector<double>(m, 0.0)),
        cover_corr(cover_naive),
        len_naive(cover_naive),
        len_corr(cover_naive) {}
  PhaseB() = default;

  void merge(const PhaseB& o) {
    for (std::size_t i = 0; i < msem.size(); ++i) {
      msem[i] += o.msem[i];
      naive[i] += o.naive[i];
    }
    for (std::size_t l = 0; l < cover_naive.size(); ++l) {
      for (std::size_t i = 0; i < cover_naive[l].size(); ++i) {
        cover_naive[l][i] += o.cover_naive[l][i];
        cover_corr[l][i] += o.cover_corr[l][i];
        len_naive[l][i] += o.len_naive[l][i];
        len_corr[l][i] += o.len_corr[l][i];
      }
    }
    used += o.used;
    failed += o.failed;
    truncated += o.truncated;
  }
};

bool is_numerical(const Error& e) { return e.kind() == ErrorKind::Numerical; }

void check_failures(long failed, long total, const char* phase) {
  if (total > 0 && static_cast<double>(failed) > kMaxFailureRate * static_cast<double>(total)) {
    throw StudyAborted(std::string(phase) + ": " + std::to_string(failed) + " of " +
                       std::to_string(total) + " replications failed");
  }
}

}  // namespace

double prial(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return 100.0 * (1.0 - a.trace() / b.trace());
}

Eigen::MatrixXd relative_bias(const Eigen::MatrixXd& mean_estimate, const Eigen::MatrixXd& truth) {
  return 100.0 * (mean_estimate - truth).cwiseQuotient(truth);
}

std::vector<std::string> ell_labels(int k) {
  std::vector<std::string> out;
  for (int d = 1; d <= k; ++d) out.push_back("e" + std::to_string(d));
  out.emplace_back("ones");
  return out;
}

std::vector<Eigen::VectorXd> ell_vectors(int k) {
  std::vector<Eigen::VectorXd> out;
  for (int d = 0; d < k; ++d) out.push_back(Eigen::VectorXd::Unit(k, d));
  out.push_back(Eigen::VectorXd::Ones(k));
  return out;
}

SimMetrics run_study(const SimConfig& config) {
  config.validate();
  const unsigned workers = config.workers == 0 ? default_workers() : config.workers;
  const Generator gen(config, build_design(config));
  const Eigen::Index k = config.k;
  const std::size_t m = static_cast<std::size_t>(config.m());
  const std::vector<int> sizes = config.area_sizes();
  const std::vector<int> groups = config.area_groups();
  const SizeProfile profile(sizes);
  const auto ells = ell_vectors(config.k);

  // Phase A: simulated truth.
  auto blocks_a = run_blocks(
      static_cast<std::size_t>(config.replications_a), kBlockSize, workers,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        PhaseA acc(m, k);
        for (std::size_t r = begin; r < end; ++r) {
          Engine rng = make_engine(config.master_seed, Stream::PhaseA, r);
          const Replicate rep = gen.draw(rng);
          try {
            const CovComponents comps = estimate_components(rep.data);
            const EblupResult res = eblup_with_components(rep.data, comps);
            std::vector<ScalarPipeline> uni;
            for (Eigen::Index d = 0; d < k; ++d) {
              uni.push_back(univariate_eblup_oracle(component_data(rep.data, d), config.alpha));
            }
            std::optional<FitResult> blup;
            if (config.track_blup_gap) blup = gls_fit(rep.data, gen.psi(), gen.sigma());

            for (std::size_t i = 0; i < m; ++i) {
              const Eigen::VectorXd theta = rep.theta.row(static_cast<Eigen::Index>(i)).transpose();
              const Eigen::VectorXd e_eb = res.predictions[i].theta_hat - theta;
              const Eigen::VectorXd e_dir = res.fit.per_area[i].y_bar - theta;
              Eigen::VectorXd e_uni(k);
              for (Eigen::Index d = 0; d < k; ++d) e_uni(d) = uni[static_cast<std::size_t>(d)].theta[i] - theta(d);
              acc.eb[i].noalias() += e_eb * e_eb.transpose();
              acc.direct[i].noalias() += e_dir * e_dir.transpose();
              acc.uni[i].noalias() += e_uni * e_uni.transpose();
              if (blup) {
                const AreaCache& c = blup->per_area[i];
                const Eigen::VectorXd bl = bayes_predict(blup->beta, c.shrinkage, c.y_bar, c.r_bar, c.r_bar);
                const Eigen::VectorXd gap = res.predictions[i].theta_hat - bl;
                acc.gap[i].noalias() += gap * gap.transpose();
              }
            }
            acc.sigma.add(comps.sigma_hat.matrix());
            acc.psi0.add(comps.psi0.matrix());
            acc.psi.add(comps.psi_hat.matrix());
            acc.truncated += comps.truncated ? 1 : 0;
            ++acc.used;
          } catch (const Error& e) {
            if (!is_numerical(e)) throw;
            ++acc.failed;
          }
        }
        return acc;
      });
  PhaseA a(m, k);
  for (const auto& b : blocks_a) a.merge(b);
  check_failures(a.failed, config.replications_a, "phase A");

  // Phase B: estimator bias and interval coverage.
  auto blocks_b = run_blocks(
      static_cast<std::size_t>(config.replications_b), kBlockSize, workers,
      [&](std::size_t, std::size_t begin, std::size_t end) {
        PhaseB acc(m, k, ells.size());
        for (std::size_t r = begin; r < end; ++r) {
          Engine rng = make_engine(config.master_seed, Stream::PhaseB, r);
          const Replicate rep = gen.draw(rng);
          try {
            EblupResult res = eblup(rep.data);
            for (std::size_t i = 0; i < m; ++i) {
              AreaPrediction& pred = res.predictions[i];
              msem_estimate(res.fit, profile, pred);
              acc.msem[i] += pred.mse->msem.matrix();
              acc.naive[i] += pred.mse->naive.matrix();
              const Eigen::VectorXd theta = rep.theta.row(static_cast<Eigen::Index>(i)).transpose();
              for (std::size_t l = 0; l < ells.size(); ++l) {
                const IntervalPair ci = corrected_interval(pred, ells[l], config.alpha, res.fit, profile, config.variance_form);
                const double target = ells[l].dot(theta);
                acc.cover_naive[l][i] += ci.naive.covers(target) ? 1.0 : 0.0;
                acc.cover_corr[l][i] += ci.corrected.covers(target) ? 1.0 : 0.0;
                acc.len_naive[l][i] += ci.naive.length();
                acc.len_corr[l][i] += ci.corrected.length();
              }
            }
            acc.truncated += res.fit.components->truncated ? 1 : 0;
            ++acc.used;
          } catch (const Error& e) {
            if (!is_numerical(e)) throw;
            ++acc.failed;
          }
        }
        return acc;
      });
  PhaseB b(m, k, ells.size());
  for (const auto& blk : blocks_b) b.merge(blk);
  check_failures(b.failed, config.replications_b, "phase B");

  SimMetrics out;
  out.config = config;
  out.replications_a = a.used;
  out.replications_b = b.used;
  out.failures_a = a.failed;
  out.failures_b = b.failed;
  const long total_used = a.used + b.used;
  out.truncation_frequency =
      total_used > 0 ? static_cast<double>(a.truncated + b.truncated) / static_cast<double>(total_used) : 0.0;
  out.psi_true = gen.psi().matrix();
  out.sigma_hat = a.sigma.finish(a.used);
  out.psi0 = a.psi0.finish(a.used);
  out.psi_hat = a.psi.finish(a.used);

  const double ra = static_cast<double>(a.used);
  const double rb = static_cast<double>(b.used);
  const Eigen::MatrixXd nan_mat = Eigen::MatrixXd::Constant(k, k, NAN);
  for (std::size_t i = 0; i < m; ++i) {
    AreaMetrics am;
    am.group = groups[i];
    am.n = sizes[i];
    if (a.used > 0) {
      am.msem_true = a.eb[i] / ra;
      am.mse_direct = a.direct[i] / ra;
      am.mse_univariate = a.uni[i] / ra;
      am.blup_gap = config.track_blup_gap ? Eigen::MatrixXd(a.gap[i] / ra) : nan_mat;
      am.prial_direct = prial(am.msem_true, am.mse_direct);
      am.prial_univariate = prial(am.msem_true, am.mse_univariate);
    } else {
      am.msem_true = am.mse_direct = am.mse_univariate = am.blup_gap = nan_mat;
      am.prial_direct = am.prial_univariate = NAN;
    }
    if (a.used > 0 && b.used > 0) {
      am.rb_corrected = relative_bias(b.msem[i] / rb, am.msem_true);
      am.rb_naive = relative_bias(b.naive[i] / rb, am.msem_true);
    } else {
      am.rb_corrected = am.rb_naive = nan_mat;
    }
    out.areas.push_back(std::move(am));
  }

  for (std::size_t g = 0; g < config.group_sizes.size(); ++g) {
    GroupMetrics gm;
    gm.group = static_cast<int>(g);
    gm.n = config.group_sizes[g];
    gm.rb_corrected = gm.rb_naive = Eigen::MatrixXd::Zero(k, k);
    double count = 0.0;
    for (const auto& am : out.areas) {
      if (am.group != gm.group) continue;
      gm.prial_direct += am.prial_direct;
      gm.prial_univariate += am.prial_univariate;
      gm.rb_corrected += am.rb_corrected;
      gm.rb_naive += am.rb_naive;
      count += 1.0;
    }
    gm.prial_direct /= count;
    gm.prial_univariate /= count;
    gm.rb_corrected /= count;
    gm.rb_naive /= count;
    out.groups.push_back(std::move(gm));

    const auto labels = ell_labels(config.k);
    for (std::size_t l = 0; l < ells.size(); ++l) {
      IntervalCell cell;
      cell.group = static_cast<int>(g);
      cell.ell_label = labels[l];
      for (std::size_t i = 0; i < m; ++i) {
        if (groups[i] != static_cast<int>(g)) continue;
        cell.cp_naive += b.cover_naive[l][i];
        cell.cp_corrected += b.cover_corr[l][i];
        cell.al_naive += b.len_naive[l][i];
        cell.al_corrected += b.len_corr[l][i];
      }
      const double denom = count * rb;
      cell.cp_naive /= denom;
      cell.cp_corrected /= denom;
      cell.al_naive /= denom;
      cell.al_corrected /= denom;
      out.intervals.push_back(std::move(cell));
    }
  }
  return out;
}

}  // namespace mner::sim
