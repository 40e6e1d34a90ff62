#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace longicog {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// A labeled design matrix. Rows of `features` pair with `labels` and
/// `groups` (the participant each row came from, used for grouped folds).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> groups;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  std::size_t dimension() const { return static_cast<std::size_t>(features.cols()); }
  int n_classes() const { return static_cast<int>(class_names.size()); }

  /// Rows in the given order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

}  // namespace longicog
