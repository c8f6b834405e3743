#pragma once

#include <Eigen/Core>

namespace cbi {

using Scalar = double;
using Index = Eigen::Index;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Vector zeros(Index d) { return Vector::Zero(d); }

// Unit basis vector e_i (0-based index).
inline Vector unit(Index d, Index i) {
  Vector e = Vector::Zero(d);
  e(i) = 1.0;
  return e;
}

}  // namespace cbi
