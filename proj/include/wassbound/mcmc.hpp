#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "wassbound/common.hpp"
#include "wassbound/gaussian.hpp"
#include "wassbound/rng.hpp"
#include "wassbound/wasserstein.hpp"

namespace wassbound {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Returns log pi(x) up to an additive constant; writes the gradient into
/// `grad` when it is non-null (only called that way if has_gradient).
using LogDensity = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct Target {
  std::string name;
  Index dim = 0;
  LogDensity log_density;
  bool has_gradient = false;
  /// Present for Gaussian targets; enables exact sampling, the Gibbs kernels
  /// and the closed-form oracles.
  std::optional<GaussianDist> gaussian;
  /// Sparse precision of a Gaussian target (empty otherwise).
  SparseMatrix precision;

  double log_pdf(const Eigen::VectorXd& x) const { return log_density(x, nullptr); }
};

/// N(mean, Q^{-1}) evaluated through the sparse precision Q.
Target gaussian_target(const Eigen::VectorXd& mean, const SparseMatrix& precision, std::string name = "gaussian");

/// Periodic AR(1): X_{k+1} = rho X_k + eps_k with X_{d+1} = X_1 and unit
/// noise. Precision D^T D with (D x)_k = x_{k+1} - rho x_k (indices mod d).
Target target_ar1_circulant(Index d, double rho);
/// The residual map x -> D x of the periodic AR(1) process.
SparseMatrix ar1_circulant_residual_operator(Index d, double rho);

/// Sigma_ij = 0.5^|i-j|, with its tridiagonal precision.
Target target_ar1_covariance(Index d);

struct SvmParams {
  Index length = 360;
  double beta = 0.65;
  double phi = 0.98;
  double sigma = 0.15;

  void validate() const;
};

struct SvmData {
  Eigen::VectorXd latent;
  Eigen::VectorXd observations;
};

/// Draws the latent AR(1) path from its stationary prior.
void sample_svm_prior(const SvmParams& params, Rng& rng, Eigen::Ref<Eigen::VectorXd> out);
/// Latent path and observations Y_t = beta eps_t exp(X_t / 2).
SvmData simulate_svm_data(const SvmParams& params, std::uint64_t seed);

/// Posterior of the latent volatility path given observations.
Target target_stochastic_volatility(const SvmParams& params, const Eigen::VectorXd& observations);

enum class Kernel { Rwm, Mala, Ula, GibbsGaussian };

Kernel parse_kernel(const std::string& name);
std::string kernel_name(Kernel kernel);

/// Writes a draw from the initial distribution into `out`.
using InitialSampler = std::function<void(Rng& rng, Eigen::Ref<Eigen::VectorXd> out)>;

InitialSampler isotropic_initial(Index dim, double variance);
InitialSampler gaussian_initial(const GaussianDist& dist);
InitialSampler svm_prior_initial(const SvmParams& params);

struct EnsembleConfig {
  Kernel kernel = Kernel::Rwm;
  double step = 0.1;
  Index n_chains = 100;
  std::int64_t horizon = 1000;
  std::int64_t thin = 1;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct ChainEnsemble {
  Index n_chains = 0;
  Index dim = 0;
  std::vector<std::int64_t> recorded_iterations;  ///< 0, thin, 2 thin, ... <= horizon
  std::vector<EmpiricalMeasure> states;           ///< chain c is row c
  std::uint64_t seed = 0;
  std::optional<double> acceptance_rate;          ///< RWM and MALA only

  /// Position of iteration t in recorded_iterations; throws if not recorded.
  std::size_t index_of(std::int64_t t) const;
};

/// One step of a single chain. Holds per-kernel scratch state.
class ChainStepper {
 public:
  ChainStepper(const Target& target, Kernel kernel, double step);

  /// Sets the current state (and its cached density and gradient).
  void reset(const Eigen::VectorXd& x);
  /// Advances one iteration; returns whether a proposal was accepted
  /// (always true for ULA and Gibbs).
  bool step(Rng& rng);
  const Eigen::VectorXd& state() const noexcept { return x_; }

 private:
  const Target* target_;
  Kernel kernel_;
  double h_;
  Eigen::VectorXd x_, grad_, proposal_, proposal_grad_, noise_;
  double log_pi_ = 0.0;
  // Collapsed Gibbs sweep: x' = B x + shift + chol * z.
  Eigen::MatrixXd sweep_matrix_, sweep_chol_;
  Eigen::VectorXd sweep_shift_;
};

/// Simulates n_chains independent chains; chain c uses stream c of
/// Rng::streams(seed, n_chains), so results do not depend on `workers`.
/// Throws NumericalError naming the iteration if a state becomes non-finite.
ChainEnsemble run_ensemble(const Target& target, const EnsembleConfig& config, const InitialSampler& initial);

struct ConvergenceBoundTrajectory {
  std::vector<std::int64_t> iterations;  ///< recorded t < reference_iteration
  std::vector<BoundSet> bounds;          ///< intervals attached
  std::int64_t reference_iteration = 0;
  std::vector<std::int64_t> asymptote_set;
  double alpha = 0.05;
};

/// Bounds on W2^2(pi_t, pi_inf) for every recorded t < T, using pi_T as the
/// reference sample and averaging the debiasing term over the asymptote set.
ConvergenceBoundTrajectory convergence_bounds(const ChainEnsemble& ensemble, std::int64_t reference_iteration,
                                              const std::vector<std::int64_t>& asymptote_set, double alpha = 0.05,
                                              std::size_t workers = 1);

/// start, start + stride, ..., <= end.
std::vector<std::int64_t> iteration_range(std::int64_t start, std::int64_t end, std::int64_t stride);

/// First t whose upper bound is at most `threshold`.
std::optional<std::int64_t> mixing_time(const ConvergenceBoundTrajectory& trajectory, double threshold);

}  // namespace wassbound
