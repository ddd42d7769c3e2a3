#pragma once

#include <Eigen/Dense>

namespace sobgeo {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// One real value per grid node.
template <typename Scalar>
using ScalarField = Vector<Scalar>;

// One ambient vector per grid node: row j is the vector at theta_j (n x d).
template <typename Scalar>
using TangentField = Matrix<Scalar>;

// Outcome of an initial-value geodesic solve (loops or circle maps alike).
enum class ExpStatus { ok, immersion_lost };

}  // namespace sobgeo
