#include "mner/dataset.hpp"

#include <algorithm>

#include "mner/errors.hpp"

namespace mner {

UnitBlock::UnitBlock(Eigen::MatrixXd responses, Eigen::MatrixXd regressors)
    : y_(std::move(responses)), r_(std::move(regressors)) {
  if (y_.rows() < 1) throw InvalidInput("area block must contain at least one unit");
  if (y_.cols() < 1) throw InvalidInput("response dimension k must be positive");
  if (r_.cols() < 1) throw InvalidInput("coefficient dimension s must be positive");
  if (r_.rows() != y_.rows() * y_.cols()) {
    throw InvalidInput("regressor stack has " + std::to_string(r_.rows()) + " rows, expected n*k = " +
                       std::to_string(y_.rows() * y_.cols()));
  }
  if (!y_.allFinite() || !r_.allFinite()) throw InvalidInput("non-finite value in area block");
}

UnitBlock UnitBlock::with_responses(Eigen::MatrixXd responses) const {
  return UnitBlock(std::move(responses), r_);
}

AreaMeans area_means(const UnitBlock& block) {
  const Eigen::Index n = block.n_units();
  const Eigen::Index k = block.k();
  AreaMeans out{Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, block.s())};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.y_bar += block.response(j);
    out.r_bar += block.regressor(j);
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.y_bar *= inv;
  out.r_bar *= inv;
  return out;
}

Dataset::Dataset(std::vector<UnitBlock> areas, std::vector<std::string> area_ids)
    : areas_(std::move(areas)), ids_(std::move(area_ids)) {
  if (areas_.size() < 2) throw InvalidInput("a dataset needs at least two areas");
  const auto k = areas_.front().k();
  const auto s = areas_.front().s();
  for (const auto& a : areas_) {
    if (a.k() != k || a.s() != s) throw InvalidInput("inconsistent k or s across areas");
    n_total_ += a.n_units();
  }
  if (ids_.empty()) {
    ids_.reserve(areas_.size());
    for (std::size_t i = 0; i < areas_.size(); ++i) ids_.push_back(std::to_string(i + 1));
  } else if (ids_.size() != areas_.size()) {
    throw InvalidInput("area_ids length does not match number of areas");
  }
}

std::vector<int> Dataset::area_sizes() const {
  std::vector<int> n;
  n.reserve(areas_.size());
  for (const auto& a : areas_) n.push_back(static_cast<int>(a.n_units()));
  return n;
}

Eigen::Index Dataset::index_of(const std::string& id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw InvalidInput("unknown area id '" + id + "'");
  return it - ids_.begin();
}

}  // namespace mner
