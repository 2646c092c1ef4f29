#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "gibbsvb/geometry.hpp"

namespace gibbsvb {

struct RowMeta {
  Point location;
  int mark;
  bool is_data;
};

// Logistic pseudo-data (y, X, o). Data rows come first, in pattern order,
// followed by dummy rows.
struct LogisticDesign {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::VectorXd offset;
  std::vector<RowMeta> rows;

  Eigen::Index N() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
  std::size_t n_data() const;

  // Throws a dimension error unless y, X, o and rows agree.
  void check() const;
};

// `y,o,x1..xp` with 17 significant digits.
void write_design_csv(std::ostream& out, const LogisticDesign& design);

} // namespace gibbsvb
