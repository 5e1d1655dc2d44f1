#include "vish/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vish {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_lengths(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
  if (a == 0) throw std::invalid_argument(std::string(what) + ": empty inputs");
}

}  // namespace

double mse(const Eigen::Ref<const Eigen::VectorXd>& pred_mean, const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_lengths(pred_mean.size(), y.size(), "mse");
  return (pred_mean - y).squaredNorm() / static_cast<double>(y.size());
}

double nlpd_gaussian(const Eigen::Ref<const Eigen::VectorXd>& pred_mean,
                     const Eigen::Ref<const Eigen::VectorXd>& pred_var, double tau2,
                     const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_lengths(pred_mean.size(), y.size(), "nlpd_gaussian");
  check_lengths(pred_var.size(), y.size(), "nlpd_gaussian");
  if (!(tau2 >= 0.0)) throw std::invalid_argument("nlpd_gaussian: negative noise variance");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double v = pred_var(i) + tau2;
    if (!(v > 0.0)) throw std::invalid_argument("nlpd_gaussian: non-positive predictive variance");
    double r = y(i) - pred_mean(i);
    total += 0.5 * (kLog2Pi + std::log(v)) + 0.5 * r * r / v;
  }
  return total / static_cast<double>(y.size());
}

double nlpd_bernoulli(const Eigen::Ref<const Eigen::VectorXd>& pred_prob,
                      const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_lengths(pred_prob.size(), y.size(), "nlpd_bernoulli");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw std::invalid_argument("nlpd_bernoulli: labels must be 0/1");
    double p = std::min(1.0 - 1e-12, std::max(1e-12, pred_prob(i)));
    total -= y(i) == 1.0 ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(y.size());
}

double auc(const Eigen::Ref<const Eigen::VectorXd>& pred_prob, const Eigen::Ref<const Eigen::VectorXd>& y) {
  check_lengths(pred_prob.size(), y.size(), "auc");
  const Eigen::Index n = y.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return pred_prob(a) < pred_prob(b); });

  // tie-averaged ranks
  std::vector<double> rank(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && pred_prob(order[j + 1]) == pred_prob(order[i])) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double positives = 0.0, rank_sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (y(k) != 0.0 && y(k) != 1.0) throw std::invalid_argument("auc: labels must be 0/1");
    if (y(k) == 1.0) {
      positives += 1.0;
      rank_sum += rank[k];
    }
  }
  double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0)
    throw std::invalid_argument("auc: need both classes present");
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

}  // namespace vish
