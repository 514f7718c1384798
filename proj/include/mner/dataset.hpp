#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mner {

/// Unit-level data for one area: n responses y_ij (rows of `responses`) and
/// per-unit k x s regressor blocks R_ij with E[y_ij] = R_ij beta. The blocks
/// are stacked vertically in `regressors`, unit j occupying rows [j*k, j*k+k).
class UnitBlock {
 public:
  UnitBlock(Eigen::MatrixXd responses, Eigen::MatrixXd regressors);

  Eigen::Index n_units() const { return y_.rows(); }
  Eigen::Index k() const { return y_.cols(); }
  Eigen::Index s() const { return r_.cols(); }

  const Eigen::MatrixXd& responses() const { return y_; }
  const Eigen::MatrixXd& regressors() const { return r_; }
  auto response(Eigen::Index j) const { return y_.row(j).transpose(); }
  auto regressor(Eigen::Index j) const { return r_.middleRows(j * k(), k()); }

  /// Same design, new responses (used by the simulation harness).
  UnitBlock with_responses(Eigen::MatrixXd responses) const;

 private:
  Eigen::MatrixXd y_;
  Eigen::MatrixXd r_;
};

/// Sample means (ybar_i, Rbar_i) of a unit block.
struct AreaMeans {
  Eigen::VectorXd y_bar;
  Eigen::MatrixXd r_bar;
};

AreaMeans area_means(const UnitBlock& block);

class Dataset {
 public:
  /// Throws InvalidInput unless m >= 2 and every block shares k and s.
  Dataset(std::vector<UnitBlock> areas, std::vector<std::string> area_ids = {});

  Eigen::Index m() const { return static_cast<Eigen::Index>(areas_.size()); }
  Eigen::Index k() const { return areas_.front().k(); }
  Eigen::Index s() const { return areas_.front().s(); }
  Eigen::Index total_units() const { return n_total_; }

  const std::vector<UnitBlock>& areas() const { return areas_; }
  const UnitBlock& area(Eigen::Index i) const { return areas_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& area_ids() const { return ids_; }
  std::vector<int> area_sizes() const;
  /// Index of an area id; throws InvalidInput if absent.
  Eigen::Index index_of(const std::string& id) const;

 private:
  std::vector<UnitBlock> areas_;
  std::vector<std::string> ids_;
  Eigen::Index n_total_ = 0;
};

}  // namespace mner
