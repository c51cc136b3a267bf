#include "wassbound/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wassbound {

CoupledStepper::CoupledStepper(const Target& target, Kernel kernel, double step, bool reflection_maximal)
    : target_(&target), kernel_(kernel), h_(step), reflect_(reflection_maximal) {
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("step size must be positive and finite");
  if ((kernel == Kernel::Mala || kernel == Kernel::Ula) && !target.has_gradient) {
    throw std::invalid_argument(kernel_name(kernel) + " needs a target with a gradient");
  }
  xi_.resize(target.dim);
  eta_.resize(target.dim);
  if (kernel == Kernel::GibbsGaussian) {
    if (!target.gaussian || target.precision.size() == 0) {
      throw std::invalid_argument("coupled gibbs kernel needs a Gaussian target with a sparse precision");
    }
    inv_diag_ = target.precision.diagonal().cwiseInverse();
    cond_sd_ = inv_diag_.cwiseSqrt();
  }
}

void CoupledStepper::refresh(Side& s) const {
  if (kernel_ == Kernel::Mala || kernel_ == Kernel::Ula) {
    s.log_pi = target_->log_density(s.state, &s.grad);
  } else if (kernel_ == Kernel::Rwm) {
    s.log_pi = target_->log_pdf(s.state);
  }
}

void CoupledStepper::update_mean(Side& s) const {
  if (kernel_ == Kernel::Rwm) {
    s.mean = s.state;
  } else {
    s.mean = s.state + 0.5 * h_ * h_ * s.grad;
  }
}

void CoupledStepper::reset(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != target_->dim || y.size() != target_->dim) {
    throw std::invalid_argument("coupled chain state has the wrong dimension");
  }
  x_.state = x;
  y_.state = y;
  refresh(x_);
  refresh(y_);
}

// Accepts or rejects s.proposal; `noise` is the forward proposal noise.
bool CoupledStepper::metropolis(Side& s, double log_u, const Eigen::VectorXd& noise) const {
  const double half_h2 = 0.5 * h_ * h_;
  if (kernel_ == Kernel::Ula) {
    s.state.swap(s.proposal);
    s.log_pi = target_->log_density(s.state, &s.grad);
    return true;
  }
  if (kernel_ == Kernel::Rwm) {
    const double log_pi_prop = target_->log_pdf(s.proposal);
    if (log_u < log_pi_prop - s.log_pi) {
      s.state.swap(s.proposal);
      s.log_pi = log_pi_prop;
      return true;
    }
    return false;
  }
  const double log_pi_prop = target_->log_density(s.proposal, &s.proposal_grad);
  const double log_q_back = -(s.state - s.proposal - half_h2 * s.proposal_grad).squaredNorm() / (2.0 * h_ * h_);
  const double log_q_forward = -0.5 * noise.squaredNorm();
  if (log_u < log_pi_prop + log_q_back - s.log_pi - log_q_forward) {
    s.state.swap(s.proposal);
    s.grad.swap(s.proposal_grad);
    s.log_pi = log_pi_prop;
    return true;
  }
  return false;
}

void CoupledStepper::gibbs_sweep(Rng& x_rng, Rng* coupling_rng) {
  const GaussianDist& g = *target_->gaussian;
  const SparseMatrix& q = target_->precision;
  const Eigen::VectorXd& mu = g.mean();
  const Index d = target_->dim;
  for (Index k = 0; k < d; ++k) {
    double shift_x = 0.0;
    double shift_y = 0.0;
    for (SparseMatrix::InnerIterator it(q, k); it; ++it) {
      if (it.col() == k) continue;
      shift_x += it.value() * (x_.state[it.col()] - mu[it.col()]);
      if (coupling_rng) shift_y += it.value() * (y_.state[it.col()] - mu[it.col()]);
    }
    const double mean_x = mu[k] - inv_diag_[k] * shift_x;
    const double z = cond_sd_[k] * x_rng.normal();
    x_.state[k] = mean_x + z;
    if (!coupling_rng) continue;
    const double mean_y = mu[k] - inv_diag_[k] * shift_y;
    if (reflect_) {
      const double gap = x_.state[k] - mean_y;
      const double log_cpl = 0.5 * (z * z - gap * gap) / (cond_sd_[k] * cond_sd_[k]);
      y_.state[k] = (std::log(coupling_rng->uniform()) < log_cpl) ? x_.state[k] : mean_y - z;
    } else {
      y_.state[k] = mean_y + cond_sd_[k] * coupling_rng->normal();
    }
  }
}

void CoupledStepper::step_x(Rng& x_rng) {
  if (kernel_ == Kernel::GibbsGaussian) {
    gibbs_sweep(x_rng, nullptr);
    return;
  }
  x_rng.fill_normal(xi_);
  update_mean(x_);
  x_.proposal = x_.mean + h_ * xi_;
  const double log_u = (kernel_ == Kernel::Ula) ? 0.0 : std::log(x_rng.uniform());
  metropolis(x_, log_u, xi_);
}

void CoupledStepper::step_both(Rng& x_rng, Rng& coupling_rng) {
  if (kernel_ == Kernel::GibbsGaussian) {
    gibbs_sweep(x_rng, &coupling_rng);
    return;
  }
  x_rng.fill_normal(xi_);
  update_mean(x_);
  update_mean(y_);
  x_.proposal = x_.mean + h_ * xi_;

  if (reflect_) {
    const Eigen::VectorXd z = (x_.mean - y_.mean) / h_;
    const double log_cpl = -0.5 * (xi_ + z).squaredNorm() + 0.5 * xi_.squaredNorm();
    if (std::log(coupling_rng.uniform()) < log_cpl) {
      y_.proposal = x_.proposal;
      eta_ = (y_.proposal - y_.mean) / h_;
    } else {
      const Eigen::VectorXd e = z / z.norm();
      eta_ = xi_ - 2.0 * e.dot(xi_) * e;
      y_.proposal = y_.mean + h_ * eta_;
    }
  } else {
    coupling_rng.fill_normal(eta_);
    y_.proposal = y_.mean + h_ * eta_;
  }

  const double log_u = (kernel_ == Kernel::Ula) ? 0.0 : std::log(x_rng.uniform());
  metropolis(x_, log_u, xi_);
  metropolis(y_, log_u, eta_);
}

namespace {

void record(CoupledPairTrace& trace, const CouplingConfig& config, const Eigen::VectorXd& x) {
  if (config.record_x_path) trace.x_path.push_back(x);
}

void run_joint(CoupledStepper& stepper, Rng& x_rng, Rng& c_rng, const CouplingConfig& config,
               CoupledPairTrace& trace) {
  for (std::int64_t s = config.lag;; ++s) {
    if (stepper.met()) {
      trace.met = true;
      trace.meeting_time = s;
      return;
    }
    trace.distance_sq_trace.push_back((stepper.x() - stepper.y()).squaredNorm());
    if (s >= config.cap) return;
    stepper.step_both(x_rng, c_rng);
    if (!stepper.x().allFinite() || !stepper.y().allFinite()) {
      throw NumericalError("coupled pair diverged at iteration " + std::to_string(s + 1));
    }
    record(trace, config, stepper.x());
  }
}

void check_config(const CouplingConfig& config) {
  if (config.lag < 1) throw std::invalid_argument("coupling: lag must be at least 1");
  if (config.cap < config.lag) throw std::invalid_argument("coupling: cap must be at least the lag");
}

std::pair<Rng, Rng> pair_streams(std::uint64_t seed, std::size_t pair_index) {
  std::vector<Rng> s = Rng::streams(seed, 2 * pair_index + 2);
  return {s[2 * pair_index], s[2 * pair_index + 1]};
}

}  // namespace

CoupledPairTrace run_coupled_pair(const Target& target, const CouplingConfig& config, const InitialSampler& initial,
                                  std::size_t pair_index) {
  check_config(config);
  if (!initial) throw std::invalid_argument("coupling: missing initial sampler");
  auto [x_rng, c_rng] = pair_streams(config.seed, pair_index);
  Eigen::VectorXd x0(target.dim), y0(target.dim);
  initial(x_rng, x0);
  initial(c_rng, y0);

  CoupledStepper stepper(target, config.kernel, config.step, config.reflection_maximal);
  stepper.reset(x0, y0);
  CoupledPairTrace trace;
  trace.lag = config.lag;
  record(trace, config, stepper.x());
  for (std::int64_t s = 1; s <= config.lag; ++s) {
    stepper.step_x(x_rng);
    if (!stepper.x().allFinite()) throw NumericalError("chain diverged at iteration " + std::to_string(s));
    record(trace, config, stepper.x());
  }
  run_joint(stepper, x_rng, c_rng, config, trace);
  return trace;
}

CoupledPairTrace run_coupled_pair_from(const Target& target, const CouplingConfig& config,
                                       const Eigen::VectorXd& x_lagged, const Eigen::VectorXd& y0,
                                       std::size_t pair_index) {
  check_config(config);
  auto [x_rng, c_rng] = pair_streams(config.seed, pair_index);
  CoupledStepper stepper(target, config.kernel, config.step, config.reflection_maximal);
  stepper.reset(x_lagged, y0);
  CoupledPairTrace trace;
  trace.lag = config.lag;
  record(trace, config, stepper.x());
  run_joint(stepper, x_rng, c_rng, config, trace);
  return trace;
}

std::vector<CoupledPairTrace> run_coupled_pairs(const Target& target, const CouplingConfig& config,
                                                const InitialSampler& initial, std::size_t pairs,
                                                std::size_t workers) {
  std::vector<CoupledPairTrace> out(pairs);
  parallel_for(pairs, workers, [&](std::size_t r) { out[r] = run_coupled_pair(target, config, initial, r); });
  return out;
}

double coupling_bound(const std::vector<CoupledPairTrace>& traces, std::int64_t t) {
  if (traces.empty()) throw std::invalid_argument("coupling bound: no traces");
  if (t < 0) throw std::invalid_argument("coupling bound: iteration must be non-negative");
  const std::int64_t lag = traces.front().lag;
  std::size_t longest = 0;
  for (std::size_t r = 0; r < traces.size(); ++r) {
    if (traces[r].lag != lag) throw std::invalid_argument("coupling bound: traces have different lags");
    if (!traces[r].met) {
      throw std::invalid_argument("coupling bound: pair " + std::to_string(r) + " did not meet before the cap");
    }
    longest = std::max(longest, traces[r].distance_sq_trace.size());
  }
  const double count = static_cast<double>(traces.size());
  double total = 0.0;
  for (std::size_t k = static_cast<std::size_t>(t); k < longest; k += static_cast<std::size_t>(lag)) {
    double sum = 0.0;
    for (const auto& tr : traces) {
      if (k < tr.distance_sq_trace.size()) sum += tr.distance_sq_trace[k];
    }
    total += std::sqrt(sum / count);
  }
  return total;
}

}  // namespace wassbound
