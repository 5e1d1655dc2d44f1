#include "vish/sphere_map.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "vish/errors.hpp"

namespace vish {

SphereMapping SphereMapping::create(int input_dim, RadialMode mode) {
  SphereMapping mapping;
  mapping.input_dim = input_dim;
  mapping.weights = Eigen::VectorXd::Ones(std::max(input_dim, 0));
  mapping.bias = 1.0;
  mapping.radial_mode = mode;
  mapping.validate();
  return mapping;
}

void SphereMapping::validate() const {
  if (input_dim < 1 || input_dim > 8)
    throw DimensionError("sphere mapping: input dimension " + std::to_string(input_dim) +
                         " outside supported range [1, 8] (ambient cap d <= 10)");
  if (weights.size() != input_dim) throw std::invalid_argument("sphere mapping: weight count mismatch");
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (!(weights(i) > 0.0) || !std::isfinite(weights(i)))
      throw std::invalid_argument("sphere mapping: weights must be positive and finite");
  if (!(bias > 0.0) || !std::isfinite(bias))
    throw std::invalid_argument("sphere mapping: bias must be positive and finite");
}

namespace {

// the augmented vector (w . x [, 0], b)
Eigen::RowVectorXd augment(const SphereMapping& mapping, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const int d = mapping.ambient_dim();
  Eigen::RowVectorXd out(d);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x(j))) throw std::invalid_argument("project: non-finite input coordinate");
    out(j) = mapping.weights(j) * x(j);
  }
  if (mapping.padded()) out(d - 2) = 0.0;
  out(d - 1) = mapping.bias;
  return out;
}

}  // namespace

Projection project(const SphereMapping& mapping, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  mapping.validate();
  if (x.size() != mapping.input_dim)
    throw std::invalid_argument("project: input has length " + std::to_string(x.size()) + ", mapping expects " +
                                std::to_string(mapping.input_dim));
  Projection proj;
  proj.u = augment(mapping, x);
  proj.radius = proj.u.norm();
  proj.u /= proj.radius;
  return proj;
}

void project_batch(const SphereMapping& mapping, const Eigen::Ref<const Eigen::MatrixXd>& X,
                   Eigen::MatrixXd& U, Eigen::VectorXd& r) {
  mapping.validate();
  if (X.cols() != mapping.input_dim)
    throw std::invalid_argument("project_batch: input has " + std::to_string(X.cols()) + " columns, mapping expects " +
                                std::to_string(mapping.input_dim));
  const Eigen::Index n = X.rows();
  const int d = mapping.ambient_dim();
  U.resize(n, d);
  r.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    U.row(i) = augment(mapping, X.row(i));
    r(i) = U.row(i).norm();
    U.row(i) /= r(i);
  }
}

double feature_scale(const SphereMapping& mapping, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("feature_scale: radius must be positive");
  return mapping.radial_mode == RadialMode::linear ? r : 1.0;
}

Eigen::MatrixXd augmented_jacobian_log(const SphereMapping& mapping,
                                       const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const int d = mapping.ambient_dim();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d, mapping.input_dim + 1);
  for (int j = 0; j < mapping.input_dim; ++j) jac(j, j) = mapping.weights(j) * x(j);
  jac(d - 1, mapping.input_dim) = mapping.bias;
  return jac;
}

}  // namespace vish
