#include "vish/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "vish/errors.hpp"
#include "vish/rng.hpp"

namespace vish {

namespace {

constexpr double kDiagFloor = 1e-12;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double inv_softplus(double y) {
  if (y > 30.0) return y + std::log1p(-std::exp(-y));
  if (!(y > 0.0)) throw std::invalid_argument("inv_softplus: argument must be positive");
  return std::log(std::expm1(y));
}

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double now_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

PackedParams::PackedParams(const VishModel& model, const TrainableFlags& flags) : base_(model), flags_(flags) {
  base_.validate();
  Eigen::Index cursor = 0;
  if (flags_.kernel) {
    kernel_offset_ = cursor;
    kernel_count_ = model.kernel.has_lengthscale() ? 2 : 1;
    cursor += kernel_count_;
    // per-feature lengthscale chain, frozen at the base spectrum
    Eigen::VectorXd per_level = spectrum_dlog_dlog_lengthscale(model.basis.spectrum);
    level_dlog_.resize(model.num_features());
    Eigen::Index offset = 0;
    for (const auto& level : model.basis.harmonic_basis.levels) {
      level_dlog_.segment(offset, level.count).setConstant(per_level(level.degree));
      offset += level.count;
    }
  }
  if (flags_.mapping) {
    mapping_offset_ = cursor;
    cursor += model.mapping.input_dim + 1;
  }
  if (flags_.likelihood && model.likelihood.type == Likelihood::Type::gaussian) {
    noise_offset_ = cursor;
    cursor += 1;
  }
  if (flags_.variational) {
    variational_offset_ = cursor;
    const Eigen::Index m = model.num_features();
    cursor += m + m * (m + 1) / 2;
  }
  size_ = cursor;
}

Eigen::VectorXd PackedParams::pack(const VishModel& model) const {
  Eigen::VectorXd p(size_);
  if (kernel_offset_ >= 0) {
    p(kernel_offset_) = std::log(model.kernel.variance);
    if (kernel_count_ == 2) p(kernel_offset_ + 1) = std::log(model.kernel.lengthscale);
  }
  if (mapping_offset_ >= 0) {
    for (int j = 0; j < model.mapping.input_dim; ++j)
      p(mapping_offset_ + j) = std::log(model.mapping.weights(j));
    p(mapping_offset_ + model.mapping.input_dim) = std::log(model.mapping.bias);
  }
  if (noise_offset_ >= 0) p(noise_offset_) = std::log(model.likelihood.noise_variance);
  if (variational_offset_ >= 0) {
    const Eigen::Index m = model.num_features();
    p.segment(variational_offset_, m) = model.variational.mean;
    Eigen::Index cursor = variational_offset_ + m;
    for (Eigen::Index j = 0; j < m; ++j) {
      p(cursor++) = inv_softplus(model.variational.cov_factor(j, j) - kDiagFloor);
      for (Eigen::Index i = j + 1; i < m; ++i) p(cursor++) = model.variational.cov_factor(i, j);
    }
  }
  return p;
}

VishModel PackedParams::unpack(const Eigen::VectorXd& params) const {
  if (params.size() != size_) throw std::invalid_argument("PackedParams: parameter vector size mismatch");
  VishModel model = base_;
  if (kernel_offset_ >= 0) {
    double new_var = std::exp(params(kernel_offset_));
    double new_rho = kernel_count_ == 2 ? std::exp(params(kernel_offset_ + 1)) : model.kernel.lengthscale;
    model.kernel.variance = new_var;
    model.kernel.lengthscale = new_rho;
    // rescale the spectrum instead of rebuilding harmonic levels
    model.basis.spectrum.kernel = model.kernel;
    if (model.kernel.family == KernelFamily::arc_cosine_order1 || kernel_count_ == 1) {
      double ratio = new_var / base_.kernel.variance;
      model.basis.spectrum.coeffs = base_.basis.spectrum.coeffs * ratio;
      model.basis.a_hat = base_.basis.a_hat * ratio;
    } else {
      ZonalSpectrum rebuilt = build_spectrum(model.kernel, base_.basis.spectrum.max_degree,
                                             base_.basis.spectrum.normalized);
      model.basis.spectrum = rebuilt;
      Eigen::Index offset = 0;
      for (const auto& level : model.basis.harmonic_basis.levels) {
        model.basis.a_hat.segment(offset, level.count).setConstant(rebuilt.coeffs(level.degree));
        offset += level.count;
      }
    }
  }
  if (mapping_offset_ >= 0) {
    for (int j = 0; j < model.mapping.input_dim; ++j)
      model.mapping.weights(j) = std::exp(params(mapping_offset_ + j));
    model.mapping.bias = std::exp(params(mapping_offset_ + model.mapping.input_dim));
  }
  if (noise_offset_ >= 0) model.likelihood.noise_variance = std::exp(params(noise_offset_));
  if (variational_offset_ >= 0) {
    const Eigen::Index m = model.num_features();
    model.variational.mean = params.segment(variational_offset_, m);
    model.variational.cov_factor = Eigen::MatrixXd::Zero(m, m);
    Eigen::Index cursor = variational_offset_ + m;
    for (Eigen::Index j = 0; j < m; ++j) {
      model.variational.cov_factor(j, j) = softplus(params(cursor++)) + kDiagFloor;
      for (Eigen::Index i = j + 1; i < m; ++i) model.variational.cov_factor(i, j) = params(cursor++);
    }
  }
  return model;
}

Eigen::VectorXd PackedParams::grad_to_packed(const VishModel& model, const ElboGradients& grads) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(size_);
  if (kernel_offset_ >= 0) {
    g(kernel_offset_) = grads.d_a_hat.dot(model.basis.a_hat);  // d a / d log sigma2 = a
    if (kernel_count_ == 2)
      g(kernel_offset_ + 1) = grads.d_a_hat.dot(model.basis.a_hat.cwiseProduct(level_dlog_));
  }
  if (mapping_offset_ >= 0)
    g.segment(mapping_offset_, model.mapping.input_dim + 1) = grads.d_mapping_log;
  if (noise_offset_ >= 0) g(noise_offset_) = grads.d_log_noise;
  if (variational_offset_ >= 0) {
    const Eigen::Index m = model.num_features();
    g.segment(variational_offset_, m) = grads.d_mean;
    Eigen::Index cursor = variational_offset_ + m;
    for (Eigen::Index j = 0; j < m; ++j) {
      double l_jj = model.variational.cov_factor(j, j);
      double raw_jj = inv_softplus(l_jj - kDiagFloor);
      g(cursor++) = grads.d_cov_factor(j, j) * sigmoid(raw_jj);
      for (Eigen::Index i = j + 1; i < m; ++i) g(cursor++) = grads.d_cov_factor(i, j);
    }
  }
  return g;
}

namespace {

// negative-ELBO objective over the packed parameters; failures surface as
// non-finite values the optimizers can reject
struct Objective {
  const PackedParams& packing;
  const Eigen::Ref<const Eigen::MatrixXd>& X;
  const Eigen::Ref<const Eigen::VectorXd>& y;
  Eigen::Index total_n;

  double operator()(const Eigen::VectorXd& p, Eigen::VectorXd& grad) const {
    try {
      VishModel model = packing.unpack(p);
      ElboGradients eg = elbo_with_gradients(model, X, y, total_n);
      grad = -packing.grad_to_packed(model, eg);
      return -eg.value;
    } catch (const NumericalError&) {
    } catch (const std::invalid_argument&) {
      // a wild step drove a positive parameter to 0/inf through exp
    }
    grad.setConstant(packing.size(), std::numeric_limits<double>::quiet_NaN());
    return std::numeric_limits<double>::infinity();
  }

  double batch_eval(const Eigen::VectorXd& p, const std::vector<Eigen::Index>& idx, Eigen::VectorXd& grad) const {
    Eigen::MatrixXd xb(idx.size(), X.cols());
    Eigen::VectorXd yb(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      xb.row(i) = X.row(idx[i]);
      yb(i) = y(idx[i]);
    }
    try {
      VishModel model = packing.unpack(p);
      ElboGradients eg = elbo_with_gradients(model, xb, yb, X.rows());
      grad = -packing.grad_to_packed(model, eg);
      return -eg.value;
    } catch (const NumericalError&) {
    } catch (const std::invalid_argument&) {
    }
    grad.setConstant(packing.size(), std::numeric_limits<double>::quiet_NaN());
    return std::numeric_limits<double>::infinity();
  }
};

}  // namespace

LbfgsResult lbfgs_minimize(const ValueGradFn& fn, const Eigen::VectorXd& x0, int max_iters, double tolerance,
                           const std::function<void(int, double, const Eigen::VectorXd&)>& callback) {
  const Eigen::Index n = x0.size();
  const int history = 10;
  std::vector<Eigen::VectorXd> s_list, y_list;
  std::vector<double> rho_list;

  LbfgsResult result;
  result.x = x0;
  Eigen::VectorXd grad(n);
  double f = fn(result.x, grad);
  if (!std::isfinite(f)) throw NumericalError("lbfgs: objective not finite at the starting point");

  Eigen::VectorXd x_new(n), grad_new(n);
  for (int iter = 0; iter < max_iters; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= tolerance) {
      result.converged = true;
      break;
    }
    // two-loop recursion
    Eigen::VectorXd q = grad;
    const int k = static_cast<int>(s_list.size());
    std::vector<double> alpha_coefs(k);
    for (int i = k - 1; i >= 0; --i) {
      alpha_coefs[i] = rho_list[i] * s_list[i].dot(q);
      q -= alpha_coefs[i] * y_list[i];
    }
    if (k > 0) q *= s_list.back().dot(y_list.back()) / y_list.back().squaredNorm();
    for (int i = 0; i < k; ++i) {
      double beta = rho_list[i] * y_list[i].dot(q);
      q += (alpha_coefs[i] - beta) * s_list[i];
    }
    Eigen::VectorXd direction = -q;
    double dir_deriv = grad.dot(direction);
    if (!(dir_deriv < 0.0)) {  // fall back to steepest descent
      direction = -grad;
      dir_deriv = grad.dot(direction);
    }

    // strong Wolfe line search (Nocedal & Wright alg. 3.5/3.6)
    const double c1 = 1e-4, c2 = 0.9;
    double step = s_list.empty() ? std::min(1.0, 1.0 / std::max(1.0, grad.norm())) : 1.0;
    double step_prev = 0.0;
    double f_prev_ls = f;
    double f_new = f;
    bool accepted = false;
    const double step_max = 1e10;
    auto eval_at = [&](double t, Eigen::VectorXd& g_out) {
      x_new = result.x + t * direction;
      return fn(x_new, g_out);
    };
    auto zoom = [&](double lo, double hi, double f_lo) {
      for (int z = 0; z < 30; ++z) {
        double t = 0.5 * (lo + hi);
        f_new = eval_at(t, grad_new);
        if (!std::isfinite(f_new) || f_new > f + c1 * t * dir_deriv || f_new >= f_lo) {
          hi = t;
        } else {
          double dd = grad_new.dot(direction);
          if (std::abs(dd) <= -c2 * dir_deriv) {
            accepted = true;
            return;
          }
          if (dd * (hi - lo) >= 0.0) hi = lo;
          lo = t;
          f_lo = f_new;
        }
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
      }
      // fall back to the best admissible point found
      f_new = eval_at(lo, grad_new);
      accepted = std::isfinite(f_new) && f_new < f;
    };
    for (int ls = 0; ls < 25 && !accepted; ++ls) {
      f_new = eval_at(step, grad_new);
      if (!std::isfinite(f_new) || f_new > f + c1 * step * dir_deriv || (ls > 0 && f_new >= f_prev_ls)) {
        zoom(step_prev, step, f_prev_ls);
        break;
      }
      double dd = grad_new.dot(direction);
      if (std::abs(dd) <= -c2 * dir_deriv) {
        accepted = true;
        break;
      }
      if (dd >= 0.0) {
        zoom(step, step_prev, f_new);
        break;
      }
      step_prev = step;
      f_prev_ls = f_new;
      step = std::min(2.0 * step, step_max);
    }
    if (!accepted || !(f_new < f)) break;  // no further progress

    Eigen::VectorXd s = x_new - result.x;
    Eigen::VectorXd y_diff = grad_new - grad;
    double sy = s.dot(y_diff);
    if (sy > 1e-10 * s.norm() * y_diff.norm()) {
      s_list.push_back(s);
      y_list.push_back(y_diff);
      rho_list.push_back(1.0 / sy);
      if (static_cast<int>(s_list.size()) > history) {
        s_list.erase(s_list.begin());
        y_list.erase(y_list.begin());
        rho_list.erase(rho_list.begin());
      }
    }
    double f_change = f - f_new;
    result.x = x_new;
    f = f_new;
    grad = grad_new;
    result.iterations = iter + 1;
    if (callback) callback(iter + 1, f, result.x);
    if (f_change <= 1e-14 * std::max(1.0, std::abs(f))) {
      result.converged = true;
      break;
    }
  }
  result.value = f;
  return result;
}

FitResult fit(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
              const Eigen::Ref<const Eigen::VectorXd>& y, const TrainConfig& config) {
  model.validate();
  if (X.rows() != y.size()) throw std::invalid_argument("fit: X and y row counts differ");
  if (config.eval_every < 1) throw std::invalid_argument("fit: eval_every must be >= 1");
  if (model.likelihood.type == Likelihood::Type::bernoulli) {
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y(i) != 0.0 && y(i) != 1.0)
        throw std::invalid_argument("fit: classification targets must be 0/1 (row " + std::to_string(i) + ")");
  }

  const auto t0 = std::chrono::steady_clock::now();
  PackedParams packing(model, config.trainable);
  Objective objective{packing, X, y, X.rows()};

  FitTrace trace;
  Eigen::VectorXd p = packing.pack(model);
  double initial_elbo = elbo_stochastic(model, X, y, X.rows());
  trace.iterations.push_back({0, initial_elbo, now_seconds(t0)});

  Eigen::VectorXd best_p = p;

  if (std::holds_alternative<QuasiNewton>(config.optimizer)) {
    const auto& qn = std::get<QuasiNewton>(config.optimizer);
    if (qn.max_iters > 0) {
      auto callback = [&](int iter, double f, const Eigen::VectorXd& x) {
        if (iter % config.eval_every == 0) trace.iterations.push_back({iter, -f, now_seconds(t0)});
        best_p = x;
      };
      LbfgsResult res =
          lbfgs_minimize([&](const Eigen::VectorXd& q, Eigen::VectorXd& g) { return objective(q, g); }, p,
                         qn.max_iters, qn.tolerance, callback);
      best_p = res.x;
      if (trace.iterations.back().step != res.iterations)
        trace.iterations.push_back({res.iterations, -res.value, now_seconds(t0)});
    }
  } else {
    const auto& ad = std::get<AdaptiveFirstOrder>(config.optimizer);
    const Eigen::Index n = X.rows();
    const Eigen::Index batch = (ad.batch_size <= 0 || ad.batch_size >= n) ? n : ad.batch_size;
    SplitMix64 rng(mix_key({0xADA3ul, ad.seed}));
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Eigen::Index perm_pos = n;  // force an initial shuffle when minibatching

    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(packing.size());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(packing.size());
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    Eigen::VectorXd grad(packing.size());
    std::vector<Eigen::Index> idx(batch);

    for (int iter = 1; iter <= ad.iters; ++iter) {
      double value;
      if (batch == n) {
        value = objective(p, grad);
      } else {
        for (Eigen::Index b = 0; b < batch; ++b) {
          if (perm_pos >= n) {
            for (Eigen::Index i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
            perm_pos = 0;
          }
          idx[b] = perm[perm_pos++];
        }
        value = objective.batch_eval(p, idx, grad);
      }
      if (!std::isfinite(value) || !grad.allFinite()) {
        trace.aborted = true;
        trace.message = "non-finite ELBO or gradient at iteration " + std::to_string(iter) +
                        "; returning the last good snapshot";
        break;
      }
      m1 = beta1 * m1 + (1.0 - beta1) * grad;
      m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
      double bc1 = 1.0 - std::pow(beta1, iter);
      double bc2 = 1.0 - std::pow(beta2, iter);
      p.array() -= ad.step * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + eps);
      best_p = p;
      if (iter % config.eval_every == 0 || iter == ad.iters) {
        VishModel snapshot = packing.unpack(p);
        double full;
        try {
          full = elbo_stochastic(snapshot, X, y, X.rows());
        } catch (const NumericalError& err) {
          trace.aborted = true;
          trace.message = err.what();
          best_p = trace.iterations.empty() ? packing.pack(model) : best_p;
          break;
        }
        trace.iterations.push_back({iter, full, now_seconds(t0)});
      }
    }
  }

  FitResult result{packing.unpack(best_p), std::move(trace)};
  result.model.validate();
  return result;
}

double finite_diff_check_fn(const ValueGradFn& fn, const Eigen::VectorXd& at, double step) {
  if (!(step >= 1e-7 && step <= 1e-3)) throw std::invalid_argument("finite_diff_check: step outside [1e-7, 1e-3]");
  Eigen::VectorXd grad(at.size());
  fn(at, grad);
  Eigen::VectorXd dummy(at.size());
  double scale = std::max(1.0, grad.lpNorm<Eigen::Infinity>());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    Eigen::VectorXd up = at, dn = at;
    up(i) += step;
    dn(i) -= step;
    double fd = (fn(up, dummy) - fn(dn, dummy)) / (2.0 * step);
    double denom = std::max({std::abs(grad(i)), std::abs(fd), 1e-6 * scale});
    worst = std::max(worst, std::abs(fd - grad(i)) / denom);
  }
  return worst;
}

double finite_diff_check(const VishModel& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y, double step, const TrainableFlags& flags) {
  PackedParams packing(model, flags);
  auto fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
    VishModel snapshot = packing.unpack(p);
    ElboGradients eg = elbo_with_gradients(snapshot, X, y, X.rows());
    grad = packing.grad_to_packed(snapshot, eg);
    return eg.value;
  };
  return finite_diff_check_fn(fn, packing.pack(model), step);
}

}  // namespace vish
