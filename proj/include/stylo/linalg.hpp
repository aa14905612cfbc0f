#pragma once

#include <Eigen/Core>

namespace stylo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace stylo
