#pragma once

#include <Eigen/Core>

namespace vish {

double mse(const Eigen::Ref<const Eigen::VectorXd>& pred_mean, const Eigen::Ref<const Eigen::VectorXd>& y);

// mean negative log density of y under N(pred_mean, pred_var + tau2)
double nlpd_gaussian(const Eigen::Ref<const Eigen::VectorXd>& pred_mean,
                     const Eigen::Ref<const Eigen::VectorXd>& pred_var, double tau2,
                     const Eigen::Ref<const Eigen::VectorXd>& y);

double nlpd_bernoulli(const Eigen::Ref<const Eigen::VectorXd>& pred_prob,
                      const Eigen::Ref<const Eigen::VectorXd>& y);

// area under the ROC curve via the rank statistic with tie averaging
double auc(const Eigen::Ref<const Eigen::VectorXd>& pred_prob, const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace vish
