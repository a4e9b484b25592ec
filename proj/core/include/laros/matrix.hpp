#pragma once

#include <Eigen/Dense>

namespace laros {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws InvalidInput when m contains NaN or infinite entries.
void require_finite(const Matrix& m, const char* what);

}  // namespace laros
