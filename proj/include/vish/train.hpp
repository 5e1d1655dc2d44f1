#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "vish/svgp.hpp"

namespace vish {

struct AdaptiveFirstOrder {
  double step = 1e-2;
  int iters = 2000;
  int batch_size = 0;  // 0 means full batch
  std::uint64_t seed = 0;
};

struct QuasiNewton {
  int max_iters = 1000;
  double tolerance = 1e-9;  // gradient infinity-norm stop
};

struct TrainableFlags {
  bool kernel = true;
  bool mapping = true;
  bool likelihood = true;
  bool variational = true;
};

struct TrainConfig {
  std::variant<AdaptiveFirstOrder, QuasiNewton> optimizer = AdaptiveFirstOrder{};
  TrainableFlags trainable;
  int eval_every = 10;
};

struct TraceRow {
  int step = 0;
  double elbo = 0.0;
  double seconds = 0.0;
};

struct FitTrace {
  std::vector<TraceRow> iterations;
  bool aborted = false;
  std::string message;
};

struct FitResult {
  VishModel model;
  FitTrace trace;
};

// Maximizes the ELBO over the flagged parameter blocks. Deterministic given
// the optimizer seed. A non-finite ELBO mid-run aborts with the trace and the
// last good snapshot instead of throwing.
FitResult fit(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
              const Eigen::Ref<const Eigen::VectorXd>& y, const TrainConfig& config);

// Max relative discrepancy between analytic ELBO gradients and central
// differences over every trainable scalar. step in [1e-7, 1e-3].
double finite_diff_check(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y, double step,
                         const TrainableFlags& flags = TrainableFlags{});

// Same check against an arbitrary value+gradient callable (validates the
// checker itself on analytic objectives).
using ValueGradFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
double finite_diff_check_fn(const ValueGradFn& fn, const Eigen::VectorXd& at, double step);

// Transform-aware packing of the trainable parameters into one flat vector:
// positives are log-parameterized, the variational factor diagonal goes
// through an inverse softplus.
class PackedParams {
 public:
  PackedParams(const VishModel& model, const TrainableFlags& flags);

  Eigen::Index size() const { return size_; }
  Eigen::VectorXd pack(const VishModel& model) const;
  VishModel unpack(const Eigen::VectorXd& params) const;
  Eigen::VectorXd grad_to_packed(const VishModel& model, const ElboGradients& grads) const;

 private:
  VishModel base_;
  TrainableFlags flags_;
  Eigen::Index size_ = 0;
  Eigen::Index kernel_offset_ = -1, mapping_offset_ = -1, noise_offset_ = -1, variational_offset_ = -1;
  int kernel_count_ = 0;
  Eigen::VectorXd level_dlog_;  // per-feature d log a / d log rho
};

// L-BFGS with strong-Wolfe line search, used by fit and available to tests.
struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

LbfgsResult lbfgs_minimize(const ValueGradFn& fn, const Eigen::VectorXd& x0, int max_iters, double tolerance,
                           const std::function<void(int, double, const Eigen::VectorXd&)>& callback = {});

}  // namespace vish
