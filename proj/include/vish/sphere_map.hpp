#pragma once

#include <Eigen/Core>

namespace vish {

enum class RadialMode { linear, constant };

// Bias-augmented linear map onto the unit hypersphere. A point x in R^{d_in}
// becomes x~ = (w . x, b), is normalized to u = x~/||x~||, and the radius
// carries the off-sphere information. d_in = 1 is embedded into S^2 with a
// zero middle coordinate so every consumer sees ambient d >= 3.
struct SphereMapping {
  int input_dim = 1;
  Eigen::VectorXd weights;  // input_dim entries, positive
  double bias = 1.0;        // positive
  RadialMode radial_mode = RadialMode::linear;

  int ambient_dim() const { return input_dim == 1 ? 3 : input_dim + 1; }
  bool padded() const { return input_dim == 1; }

  static SphereMapping create(int input_dim, RadialMode mode);
  void validate() const;
};

struct Projection {
  Eigen::RowVectorXd u;  // unit vector, length ambient_dim, last entry > 0
  double radius = 0.0;
};

Projection project(const SphereMapping& mapping, const Eigen::Ref<const Eigen::RowVectorXd>& x);

// U: batch x ambient_dim unit rows; r: batch radii.
void project_batch(const SphereMapping& mapping, const Eigen::Ref<const Eigen::MatrixXd>& X,
                   Eigen::MatrixXd& U, Eigen::VectorXd& r);

// r in linear mode, 1 in constant mode.
double feature_scale(const SphereMapping& mapping, double r);

// Jacobian of the augmented vector x~ (length d) with respect to the log
// parameters [log w_1 .. log w_din, log b]: column j is d x~ / d theta_j.
Eigen::MatrixXd augmented_jacobian_log(const SphereMapping& mapping,
                                       const Eigen::Ref<const Eigen::RowVectorXd>& x);

}  // namespace vish
