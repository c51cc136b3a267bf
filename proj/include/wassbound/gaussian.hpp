#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "wassbound/common.hpp"

namespace wassbound {

/// N(mean, cov) with a symmetric positive-definite covariance.
class GaussianDist {
 public:
  /// Validates symmetry (1e-10 relative) and a strictly positive spectrum;
  /// stores the symmetrised covariance.
  GaussianDist(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  static GaussianDist isotropic(Index dim, double variance);

  Index dim() const noexcept { return mean_.size(); }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& cov() const noexcept { return cov_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// Symmetric PSD square root by eigendecomposition. Eigenvalues in
/// [-1e-10 * scale, 0) are clamped to 0, with scale = max(1, largest |eigenvalue|);
/// anything more negative raises NumericalError.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m);

/// ||m_a - m_b||^2 + tr A + tr B - 2 tr (A^{1/2} B A^{1/2})^{1/2}.
double w2_squared_gaussian(const GaussianDist& a, const GaussianDist& b);

/// True iff nu is contractively optimally transported to mu, which for
/// Gaussians means cov(nu) - cov(mu) is positive semi-definite (smallest
/// eigenvalue >= -1e-10 * ||cov(nu)||).
bool check_cot_gaussian(const GaussianDist& nu, const GaussianDist& mu);

/// One-dimensional dispersive-order check on quantiles taken at a common
/// probability grid: every gap of nu must be at least the matching gap of mu
/// (absolute tolerance 1e-12). Inputs must be sorted and of equal length >= 2.
bool check_cot_1d_quantiles(std::span<const double> nu_quantiles, std::span<const double> mu_quantiles);

/// Largest absolute eigenvalue of a square (not necessarily symmetric) matrix.
double spectral_radius(const Eigen::MatrixXd& m);

/// Stationary law of ULA with step h on a Gaussian target:
/// N(mean, (I - h^2 Sigma^{-1} / 4)^{-1} Sigma). Throws std::invalid_argument
/// if the spectral radius of I - h^2 Sigma^{-1} / 2 is not below 1.
GaussianDist ula_stationary(const GaussianDist& target, double h);

/// Update matrix B of one deterministic-scan sweep of the blocked Gibbs
/// sampler on a Gaussian with the given precision: a sweep draws
/// X' ~ N(B X + (I - B) mean, Sigma - B Sigma B^T). Blocks are visited in the
/// given order and must partition {0, ..., d-1}.
Eigen::MatrixXd gibbs_update_matrix(const Eigen::MatrixXd& precision, const std::vector<std::vector<Index>>& blocks);

/// Blocks {0}, {1}, ..., {d-1}.
std::vector<std::vector<Index>> coordinate_blocks(Index dim);

enum class ChainKind { GibbsDeterministicScan, Ula };

/// Exact marginal evolution of a Gaussian chain with affine-Gaussian kernel:
/// mean_t - m = A^t (mean_0 - m) and Sigma_t - S = A^t (Sigma_0 - S) (A^t)^T
/// where N(m, S) is the stationary law.
class GaussianChainDynamics {
 public:
  /// Precomputes A^(2^k) for every 2^k <= max_cached_iteration.
  GaussianChainDynamics(ChainKind kind, Eigen::MatrixXd update_matrix, GaussianDist stationary,
                        std::int64_t max_cached_iteration = std::int64_t{1} << 20);

  static GaussianChainDynamics gibbs(const GaussianDist& target, const std::vector<std::vector<Index>>& blocks);
  static GaussianChainDynamics ula(const GaussianDist& target, double h);

  ChainKind kind() const noexcept { return kind_; }
  const Eigen::MatrixXd& update_matrix() const noexcept { return update_; }
  const GaussianDist& stationary() const noexcept { return stationary_; }

  /// A^t by binary expansion over the cached squarings.
  Eigen::MatrixXd power(std::int64_t t) const;

  GaussianDist marginal_at(const GaussianDist& pi0, std::int64_t t) const;

 private:
  ChainKind kind_;
  Eigen::MatrixXd update_;
  GaussianDist stationary_;
  std::vector<Eigen::MatrixXd> squarings_;  // A, A^2, A^4, ...
};

/// check_cot_gaussian(marginal_at(t), stationary) for t = 0..horizon.
std::vector<bool> cot_preservation_check(const GaussianChainDynamics& dynamics, const GaussianDist& pi0,
                                         std::int64_t horizon);

}  // namespace wassbound
