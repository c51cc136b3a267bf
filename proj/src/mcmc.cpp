#include "wassbound/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

namespace wassbound {
namespace {

Eigen::MatrixXd dense_inverse(const SparseMatrix& q) {
  const Eigen::MatrixXd dense(q);
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("gaussian target: precision is not positive definite");
  Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(q.rows(), q.cols()));
  return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd lower_cholesky(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace

Target gaussian_target(const Eigen::VectorXd& mean, const SparseMatrix& precision, std::string name) {
  const Index d = mean.size();
  if (d < 1 || precision.rows() != d || precision.cols() != d) {
    throw std::invalid_argument("gaussian target: shape mismatch");
  }
  Target t;
  t.name = std::move(name);
  t.dim = d;
  t.has_gradient = true;
  t.precision = precision;
  t.gaussian.emplace(mean, dense_inverse(precision));
  t.log_density = [mean, precision](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const Eigen::VectorXd r = x - mean;
    const Eigen::VectorXd qr = precision * r;
    if (grad) *grad = -qr;
    return -0.5 * r.dot(qr);
  };
  return t;
}

SparseMatrix ar1_circulant_residual_operator(Index d, double rho) {
  if (d < 1) throw std::invalid_argument("ar1 circulant: dimension must be at least 1");
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("ar1 circulant: |rho| must be below 1");
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * d);
  for (Index k = 0; k < d; ++k) {
    entries.emplace_back(k, (k + 1) % d, 1.0);
    entries.emplace_back(k, k, -rho);
  }
  SparseMatrix op(d, d);
  op.setFromTriplets(entries.begin(), entries.end());  // duplicates (d = 1) are summed
  return op;
}

Target target_ar1_circulant(Index d, double rho) {
  const SparseMatrix residual = ar1_circulant_residual_operator(d, rho);
  SparseMatrix precision = SparseMatrix(residual.transpose()) * residual;
  precision.prune(0.0);
  return gaussian_target(Eigen::VectorXd::Zero(d), precision, "ar1_circulant");
}

Target target_ar1_covariance(Index d) {
  if (d < 1) throw std::invalid_argument("ar1 covariance: dimension must be at least 1");
  constexpr double rho = 0.5;
  std::vector<Eigen::Triplet<double>> entries;
  if (d == 1) {
    entries.emplace_back(0, 0, 1.0);
  } else {
    const double scale = 1.0 / (1.0 - rho * rho);
    for (Index k = 0; k < d; ++k) {
      const bool edge = (k == 0 || k == d - 1);
      entries.emplace_back(k, k, scale * (edge ? 1.0 : 1.0 + rho * rho));
      if (k + 1 < d) {
        entries.emplace_back(k, k + 1, -scale * rho);
        entries.emplace_back(k + 1, k, -scale * rho);
      }
    }
  }
  SparseMatrix precision(d, d);
  precision.setFromTriplets(entries.begin(), entries.end());

  Target t = gaussian_target(Eigen::VectorXd::Zero(d), precision, "ar1_covariance");
  Eigen::MatrixXd cov(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) cov(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  t.gaussian.emplace(Eigen::VectorXd::Zero(d), cov);
  return t;
}

void SvmParams::validate() const {
  if (length < 1) throw std::invalid_argument("stochastic volatility: length must be at least 1");
  if (!(std::abs(phi) < 1.0)) throw std::invalid_argument("stochastic volatility: |phi| must be below 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("stochastic volatility: beta must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("stochastic volatility: sigma must be positive");
  }
}

void sample_svm_prior(const SvmParams& params, Rng& rng, Eigen::Ref<Eigen::VectorXd> out) {
  params.validate();
  if (out.size() != params.length) throw std::invalid_argument("stochastic volatility: output length mismatch");
  out[0] = params.sigma / std::sqrt(1.0 - params.phi * params.phi) * rng.normal();
  for (Index t = 1; t < params.length; ++t) out[t] = params.phi * out[t - 1] + params.sigma * rng.normal();
}

SvmData simulate_svm_data(const SvmParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  SvmData data;
  data.latent.resize(params.length);
  sample_svm_prior(params, rng, data.latent);
  data.observations.resize(params.length);
  for (Index t = 0; t < params.length; ++t) {
    data.observations[t] = params.beta * rng.normal() * std::exp(0.5 * data.latent[t]);
  }
  return data;
}

Target target_stochastic_volatility(const SvmParams& params, const Eigen::VectorXd& observations) {
  params.validate();
  if (observations.size() != params.length) {
    throw std::invalid_argument("stochastic volatility: need one observation per time step");
  }
  if (!observations.allFinite()) throw std::invalid_argument("stochastic volatility: observations must be finite");

  const Eigen::ArrayXd y_sq = observations.array().square() / (params.beta * params.beta);
  const double phi = params.phi;
  const double inv_var = 1.0 / (params.sigma * params.sigma);
  const double init_prec = (1.0 - phi * phi) * inv_var;

  Target t;
  t.name = "stochastic_volatility";
  t.dim = params.length;
  t.has_gradient = true;
  t.log_density = [y_sq, phi, inv_var, init_prec](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const Index n = x.size();
    // exp(-x) and the AR residuals phi x_t - x_{t+1} serve both outputs.
    const Eigen::ArrayXd weighted = y_sq * (-x.array()).exp();
    const Eigen::ArrayXd resid = phi * x.head(n - 1).array() - x.tail(n - 1).array();
    const double value =
        -0.5 * (x.sum() + weighted.sum() + inv_var * resid.square().sum() + init_prec * x[0] * x[0]);
    if (grad) {
      grad->resize(n);
      grad->array() = 0.5 * weighted - 0.5;
      grad->head(n - 1).array() -= phi * inv_var * resid;
      grad->tail(n - 1).array() += inv_var * resid;
      (*grad)[0] -= init_prec * x[0];
    }
    return value;
  };
  return t;
}

Kernel parse_kernel(const std::string& name) {
  if (name == "rwm") return Kernel::Rwm;
  if (name == "mala") return Kernel::Mala;
  if (name == "ula") return Kernel::Ula;
  if (name == "gibbs") return Kernel::GibbsGaussian;
  throw std::invalid_argument("unknown kernel '" + name + "' (expected rwm, mala, ula or gibbs)");
}

std::string kernel_name(Kernel kernel) {
  switch (kernel) {
    case Kernel::Rwm: return "rwm";
    case Kernel::Mala: return "mala";
    case Kernel::Ula: return "ula";
    case Kernel::GibbsGaussian: return "gibbs";
  }
  return "unknown";
}

InitialSampler isotropic_initial(Index dim, double variance) {
  if (dim < 1 || !(variance > 0.0)) throw std::invalid_argument("isotropic initial: invalid parameters");
  const double scale = std::sqrt(variance);
  return [dim, scale](Rng& rng, Eigen::Ref<Eigen::VectorXd> out) {
    if (out.size() != dim) throw std::invalid_argument("initial sampler: dimension mismatch");
    rng.fill_normal(out);
    out *= scale;
  };
}

InitialSampler gaussian_initial(const GaussianDist& dist) {
  const Eigen::MatrixXd chol = lower_cholesky(dist.cov(), "gaussian initial");
  const Eigen::VectorXd mean = dist.mean();
  return [chol, mean](Rng& rng, Eigen::Ref<Eigen::VectorXd> out) {
    if (out.size() != mean.size()) throw std::invalid_argument("initial sampler: dimension mismatch");
    Eigen::VectorXd z(mean.size());
    rng.fill_normal(z);
    out = mean + chol * z;
  };
}

InitialSampler svm_prior_initial(const SvmParams& params) {
  params.validate();
  return [params](Rng& rng, Eigen::Ref<Eigen::VectorXd> out) { sample_svm_prior(params, rng, out); };
}

std::size_t ChainEnsemble::index_of(std::int64_t t) const {
  const auto it = std::lower_bound(recorded_iterations.begin(), recorded_iterations.end(), t);
  if (it == recorded_iterations.end() || *it != t) {
    throw std::invalid_argument("iteration " + std::to_string(t) + " was not recorded");
  }
  return static_cast<std::size_t>(it - recorded_iterations.begin());
}

ChainStepper::ChainStepper(const Target& target, Kernel kernel, double step)
    : target_(&target), kernel_(kernel), h_(step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("step size must be positive and finite");
  if ((kernel == Kernel::Mala || kernel == Kernel::Ula) && !target.has_gradient) {
    throw std::invalid_argument(kernel_name(kernel) + " needs a target with a gradient");
  }
  const Index d = target.dim;
  noise_.resize(d);
  if (kernel == Kernel::GibbsGaussian) {
    if (!target.gaussian) throw std::invalid_argument("gibbs kernel needs a Gaussian target");
    const GaussianDist& g = *target.gaussian;
    const Eigen::MatrixXd precision = target.precision.size() > 0
                                          ? Eigen::MatrixXd(target.precision)
                                          : Eigen::MatrixXd(g.cov().llt().solve(Eigen::MatrixXd::Identity(d, d)));
    sweep_matrix_ = gibbs_update_matrix(precision, coordinate_blocks(d));
    sweep_shift_ = g.mean() - sweep_matrix_ * g.mean();
    Eigen::MatrixXd sweep_cov = g.cov() - sweep_matrix_ * g.cov() * sweep_matrix_.transpose();
    sweep_chol_ = lower_cholesky(0.5 * (sweep_cov + sweep_cov.transpose()), "gibbs sweep");
  }
}

void ChainStepper::reset(const Eigen::VectorXd& x) {
  if (x.size() != target_->dim) throw std::invalid_argument("chain state has the wrong dimension");
  x_ = x;
  if (kernel_ == Kernel::Mala || kernel_ == Kernel::Ula) {
    log_pi_ = target_->log_density(x_, &grad_);
  } else if (kernel_ == Kernel::Rwm) {
    log_pi_ = target_->log_pdf(x_);
  }
}

bool ChainStepper::step(Rng& rng) {
  rng.fill_normal(noise_);
  const double half_h2 = 0.5 * h_ * h_;
  switch (kernel_) {
    case Kernel::Rwm: {
      proposal_ = x_ + h_ * noise_;
      const double log_pi_prop = target_->log_pdf(proposal_);
      const double u = rng.uniform();
      if (std::log(u) < log_pi_prop - log_pi_) {
        x_.swap(proposal_);
        log_pi_ = log_pi_prop;
        return true;
      }
      return false;
    }
    case Kernel::Mala: {
      proposal_ = x_ + half_h2 * grad_ + h_ * noise_;
      const double log_pi_prop = target_->log_density(proposal_, &proposal_grad_);
      const double log_q_back = -(x_ - proposal_ - half_h2 * proposal_grad_).squaredNorm() / (2.0 * h_ * h_);
      const double log_q_forward = -0.5 * noise_.squaredNorm();
      const double u = rng.uniform();
      if (std::log(u) < log_pi_prop + log_q_back - log_pi_ - log_q_forward) {
        x_.swap(proposal_);
        grad_.swap(proposal_grad_);
        log_pi_ = log_pi_prop;
        return true;
      }
      return false;
    }
    case Kernel::Ula:
      proposal_ = x_ + half_h2 * grad_ + h_ * noise_;
      x_.swap(proposal_);
      log_pi_ = target_->log_density(x_, &grad_);
      return true;
    case Kernel::GibbsGaussian:
      x_ = sweep_matrix_ * x_ + sweep_shift_ + sweep_chol_ * noise_;
      return true;
  }
  return true;
}

ChainEnsemble run_ensemble(const Target& target, const EnsembleConfig& config, const InitialSampler& initial) {
  if (config.n_chains < 1) throw std::invalid_argument("ensemble: need at least one chain");
  if (config.horizon < 0) throw std::invalid_argument("ensemble: horizon must be non-negative");
  if (config.thin < 1) throw std::invalid_argument("ensemble: thin must be at least 1");
  if (!initial) throw std::invalid_argument("ensemble: missing initial sampler");
  ChainStepper prototype(target, config.kernel, config.step);  // validates kernel/target pairing

  const Index n = config.n_chains;
  const Index d = target.dim;
  ChainEnsemble ens;
  ens.n_chains = n;
  ens.dim = d;
  ens.seed = config.seed;
  for (std::int64_t t = 0; t <= config.horizon; t += config.thin) ens.recorded_iterations.push_back(t);

  std::vector<RowMatrix> snapshots(ens.recorded_iterations.size(), RowMatrix(n, d));
  std::vector<std::int64_t> accepted(static_cast<std::size_t>(n), 0);
  std::vector<Rng> streams = Rng::streams(config.seed, static_cast<std::size_t>(n));

  parallel_for(static_cast<std::size_t>(n), config.workers, [&](std::size_t c) {
    Rng& rng = streams[c];
    ChainStepper stepper = prototype;
    Eigen::VectorXd x0(d);
    initial(rng, x0);
    if (!x0.allFinite()) throw NumericalError("chain " + std::to_string(c) + ": non-finite initial state");
    stepper.reset(x0);
    snapshots[0].row(static_cast<Index>(c)) = stepper.state().transpose();
    std::size_t slot = 1;
    for (std::int64_t t = 1; t <= config.horizon; ++t) {
      if (stepper.step(rng)) ++accepted[c];
      if (!stepper.state().allFinite()) {
        throw NumericalError("chain " + std::to_string(c) + " diverged at iteration " + std::to_string(t));
      }
      if (t % config.thin == 0) snapshots[slot++].row(static_cast<Index>(c)) = stepper.state().transpose();
    }
  });

  ens.states.reserve(snapshots.size());
  for (auto& s : snapshots) ens.states.emplace_back(std::move(s));
  if ((config.kernel == Kernel::Rwm || config.kernel == Kernel::Mala) && config.horizon > 0) {
    std::int64_t total = 0;
    for (const auto a : accepted) total += a;
    ens.acceptance_rate = static_cast<double>(total) / (static_cast<double>(n) * static_cast<double>(config.horizon));
  }
  return ens;
}

ConvergenceBoundTrajectory convergence_bounds(const ChainEnsemble& ensemble, std::int64_t reference_iteration,
                                              const std::vector<std::int64_t>& asymptote_set, double alpha,
                                              std::size_t workers) {
  if (asymptote_set.empty()) throw std::invalid_argument("convergence bounds: asymptote set is empty");
  if (ensemble.n_chains < 2) throw std::invalid_argument("convergence bounds: need at least two chains");
  const std::size_t ref = ensemble.index_of(reference_iteration);
  std::vector<std::size_t> asym;
  for (const auto t : asymptote_set) {
    if (t >= reference_iteration) {
      throw std::invalid_argument("convergence bounds: asymptote iterations must precede the reference iteration");
    }
    asym.push_back(ensemble.index_of(t));
  }
  const EmpiricalMeasure& reference = ensemble.states[ref];

  std::vector<LeaveOneOutCosts> baselines(asym.size());
  parallel_for(asym.size(), workers, [&](std::size_t k) {
    baselines[k] = flapjack(squared_distance_costs(ensemble.states[asym[k]], reference));
  });

  ConvergenceBoundTrajectory out;
  out.reference_iteration = reference_iteration;
  out.asymptote_set = asymptote_set;
  out.alpha = alpha;
  out.iterations.assign(ensemble.recorded_iterations.begin(), ensemble.recorded_iterations.begin() + ref);
  out.bounds.resize(ref);
  parallel_for(ref, workers, [&](std::size_t i) {
    const LeaveOneOutCosts primary = flapjack(squared_distance_costs(ensemble.states[i], reference));
    BoundSet b = combine_bounds(primary, baselines);
    attach_intervals(b, alpha);
    out.bounds[i] = std::move(b);
  });
  return out;
}

std::vector<std::int64_t> iteration_range(std::int64_t start, std::int64_t end, std::int64_t stride) {
  if (stride < 1) throw std::invalid_argument("iteration range: stride must be positive");
  if (start < 0 || end < start) throw std::invalid_argument("iteration range: need 0 <= start <= end");
  std::vector<std::int64_t> out;
  for (std::int64_t t = start; t <= end; t += stride) out.push_back(t);
  return out;
}

std::optional<std::int64_t> mixing_time(const ConvergenceBoundTrajectory& trajectory, double threshold) {
  for (std::size_t i = 0; i < trajectory.iterations.size(); ++i) {
    if (trajectory.bounds[i].upper.value <= threshold) return trajectory.iterations[i];
  }
  return std::nullopt;
}

}  // namespace wassbound
