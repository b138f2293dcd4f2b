#pragma once

#include <Eigen/Dense>

namespace cqrkit {

/// n observations of d-dimensional inputs with a scalar output each.
struct Dataset {
  Eigen::MatrixXd X;  // n x d
  Eigen::VectorXd y;  // n

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index d() const { return X.cols(); }
};

/// Throws std::invalid_argument unless n >= 2, d >= 1, all entries finite,
/// and y matches X in length.
void check_dataset(const Dataset& data);

}  // namespace cqrkit
