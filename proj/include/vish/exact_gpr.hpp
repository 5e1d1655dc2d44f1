#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "vish/svgp.hpp"

namespace vish {

// Dense GP regression with the truncated (degenerate) kernel
// k_M(x, x') = sum_m a_m Phi_m(x) Phi_m(x'). The N x N solve makes it a test
// oracle for the collapsed sparse path, which is exact for this kernel.
class ExactGprTruncated {
 public:
  ExactGprTruncated(const InducingBasis& basis, const SphereMapping& mapping,
                    const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                    double noise_variance);

  Prediction predict(const Eigen::Ref<const Eigen::MatrixXd>& X_star) const;
  double noise_variance() const { return tau2_; }

 private:
  InducingBasis basis_;
  SphereMapping mapping_;
  double tau2_;
  Eigen::MatrixXd train_features_;  // N x M
  Eigen::LLT<Eigen::MatrixXd> llt_;  // of K + tau2 I
  Eigen::VectorXd alpha_;            // (K + tau2 I)^-1 y
};

}  // namespace vish
