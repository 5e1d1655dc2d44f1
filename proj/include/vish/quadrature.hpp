#pragma once

#include <Eigen/Core>

namespace vish {

struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Gauss rule for the weight (1 - t^2)^(alpha - 1/2) on [-1, 1], exact for
// polynomials up to degree 2n - 1. Golub-Welsch on the Jacobi matrix.
GaussRule gauss_gegenbauer_rule(double alpha, int n_nodes);

// Flat weight on [-1, 1]; alpha = 1/2 special case.
GaussRule gauss_legendre_rule(int n_nodes);

// Physicists' Hermite rule, weight exp(-x^2) on R.
GaussRule gauss_hermite_rule(int n_nodes);

}  // namespace vish
