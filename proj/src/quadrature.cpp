#include "vish/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vish/errors.hpp"

namespace vish {

namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
// matrix, weights are mu0 times the squared first eigenvector components.
GaussRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0,
                       const std::string& what) {
  const auto n = diag.size();
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  jacobi.diagonal() = diag;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    jacobi(i, i + 1) = offdiag(i);
    jacobi(i + 1, i) = offdiag(i);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) throw NumericalError("golub_welsch: eigen solve failed for " + what);
  GaussRule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = mu0 * solver.eigenvectors().row(0).transpose().array().square();
  return rule;
}

void symmetrize(GaussRule& rule) {
  const auto n = rule.nodes.size();
  for (Eigen::Index i = 0; i < n / 2; ++i) {
    Eigen::Index j = n - 1 - i;
    double t = 0.5 * (rule.nodes(j) - rule.nodes(i));
    rule.nodes(i) = -t;
    rule.nodes(j) = t;
    double w = 0.5 * (rule.weights(i) + rule.weights(j));
    rule.weights(i) = w;
    rule.weights(j) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
}

}  // namespace

GaussRule gauss_gegenbauer_rule(double alpha, int n_nodes) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("gauss_gegenbauer_rule: alpha must be positive");
  if (n_nodes < 1) throw std::invalid_argument("gauss_gegenbauer_rule: need at least one node");

  // Jacobi weight parameters a = b = alpha - 1/2
  const double a = alpha - 0.5;
  const double ab = 2.0 * a;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n_nodes);
  Eigen::VectorXd offdiag(std::max(0, n_nodes - 1));
  for (int k = 1; k < n_nodes; ++k) {
    double beta;
    if (k == 1) {
      beta = 4.0 * (a + 1.0) * (a + 1.0) / ((ab + 2.0) * (ab + 2.0) * (ab + 3.0));
    } else {
      beta = 4.0 * k * (k + a) * (k + a) * (k + ab) /
             ((2.0 * k + ab) * (2.0 * k + ab) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0));
    }
    offdiag(k - 1) = std::sqrt(beta);
  }
  // mu0 = int (1 - t^2)^(alpha - 1/2) dt = sqrt(pi) Gamma(alpha + 1/2) / Gamma(alpha + 1)
  double mu0 = std::exp(0.5 * std::log(M_PI) + std::lgamma(alpha + 0.5) - std::lgamma(alpha + 1.0));
  GaussRule rule = golub_welsch(diag, offdiag, mu0,
                                "gegenbauer alpha=" + std::to_string(alpha) + " n=" + std::to_string(n_nodes));
  symmetrize(rule);
  return rule;
}

GaussRule gauss_legendre_rule(int n_nodes) { return gauss_gegenbauer_rule(0.5, n_nodes); }

GaussRule gauss_hermite_rule(int n_nodes) {
  if (n_nodes < 1) throw std::invalid_argument("gauss_hermite_rule: need at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n_nodes);
  Eigen::VectorXd offdiag(std::max(0, n_nodes - 1));
  for (int k = 1; k < n_nodes; ++k) offdiag(k - 1) = std::sqrt(0.5 * k);
  GaussRule rule = golub_welsch(diag, offdiag, std::sqrt(M_PI), "hermite n=" + std::to_string(n_nodes));
  symmetrize(rule);
  return rule;
}

}  // namespace vish
