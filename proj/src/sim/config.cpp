#include "mner/sim/config.hpp"

#include <cmath>

#include "mner/errors.hpp"
#include "mner/sim/model.hpp"

namespace mner::sim {

std::vector<int> SimConfig::area_sizes() const {
  std::vector<int> n;
  n.reserve(static_cast<std::size_t>(m()));
  for (const int g : group_sizes) n.insert(n.end(), static_cast<std::size_t>(areas_per_group), g);
  return n;
}

std::vector<int> SimConfig::area_groups() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m()));
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    out.insert(out.end(), static_cast<std::size_t>(areas_per_group), static_cast<int>(g));
  }
  return out;
}

SymMat SimConfig::psi() const { return psi_from_rho(rho, psi_vector); }

void SimConfig::validate() const {
  if (k < 1) throw InvalidConfig("k must be positive");
  if (group_sizes.empty() || areas_per_group < 1) throw InvalidConfig("no areas configured");
  for (const int n : group_sizes) {
    if (n < 1) throw InvalidConfig("group sizes must be positive");
  }
  if (m() < 2) throw InvalidConfig("at least two areas are required");
  if (beta.size() != 2 * k) throw InvalidConfig("beta must have length 2k");
  if (psi_vector.size() != k) throw InvalidConfig("psi_vector must have length k");
  if (!(rho > -1.0 && rho < 1.0)) throw InvalidConfig("rho must lie in (-1, 1)");
  if (sigma.dim() != k) throw InvalidConfig("sigma must be k x k");
  if (!sigma.is_psd()) throw InvalidConfig("sigma must be positive semidefinite");
  if (replications_a < 0 || replications_b < 0) throw InvalidConfig("negative replication count");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidConfig("alpha must lie in (0, 1)");
  (void)psi();
}

SimConfig study_config(int k, double rho, EffectDistribution dist) {
  SimConfig c;
  c.k = k;
  c.rho = rho;
  c.effect_dist = dist;
  c.sigma = SymMat::identity(k);
  if (k == 2) {
    c.beta = Eigen::VectorXd{{0.8, -0.5, -0.3, 0.6}};
    c.psi_vector = Eigen::VectorXd{{std::sqrt(1.5), std::sqrt(0.5)}};
  } else if (k == 3) {
    c.beta = Eigen::VectorXd{{0.8, -0.5, -0.3, 0.6, 0.4, -0.2}};
    c.psi_vector = Eigen::VectorXd{{std::sqrt(1.5), 1.0, std::sqrt(0.5)}};
  } else {
    throw InvalidConfig("presets exist for k = 2 and k = 3 only");
  }
  return c;
}

std::string to_string(EffectDistribution d) {
  switch (d) {
    case EffectDistribution::Normal: return "normal";
    case EffectDistribution::StudentT: return "t";
    case EffectDistribution::ChiSquare: return "chisq";
  }
  return "normal";
}

EffectDistribution parse_distribution(const std::string& s) {
  if (s == "normal" || s == "M1") return EffectDistribution::Normal;
  if (s == "t" || s == "M2") return EffectDistribution::StudentT;
  if (s == "chisq" || s == "M3") return EffectDistribution::ChiSquare;
  throw InvalidConfig("unknown effect distribution '" + s + "'");
}

namespace {

struct Scale {
  const char* name;
  int a;
  int b;
};
constexpr Scale kScales[] = {{"full", 50000, 5000}, {"desk", 20000, 5000}, {"smoke", 2000, 1000}};

struct Rho {
  const char* tag;
  double value;
};
constexpr Rho kRhos[] = {{"rho025", 0.25}, {"rho05", 0.5}, {"rho075", 0.75}};

}  // namespace

SimConfig preset(const std::string& name) {
  for (const auto& sc : kScales) {
    for (const int k : {2, 3}) {
      for (const auto& r : kRhos) {
        for (const auto d : {EffectDistribution::Normal, EffectDistribution::StudentT,
                             EffectDistribution::ChiSquare}) {
          const std::string candidate = std::string(sc.name) + "-k" + std::to_string(k) + "-" +
                                        r.tag + "-" + to_string(d);
          if (candidate == name) {
            SimConfig c = study_config(k, r.value, d);
            c.replications_a = sc.a;
            c.replications_b = sc.b;
            return c;
          }
        }
      }
    }
  }
  throw InvalidConfig("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& sc : kScales) {
    for (const int k : {2, 3}) {
      for (const auto& r : kRhos) {
        for (const auto d : {EffectDistribution::Normal, EffectDistribution::StudentT,
                             EffectDistribution::ChiSquare}) {
          out.push_back(std::string(sc.name) + "-k" + std::to_string(k) + "-" + r.tag + "-" +
                        to_string(d));
        }
      }
    }
  }
  return out;
}

}  // namespace mner::sim
