#include "wassbound/gaussian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace wassbound {
namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kClampTolerance = 1e-10;

void check_same_dim(const GaussianDist& a, const GaussianDist& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("gaussian: dimensions differ");
}

Eigen::VectorXd clamped_eigenvalues(const Eigen::VectorXd& eig) {
  const double scale = std::max(1.0, eig.cwiseAbs().maxCoeff());
  Eigen::VectorXd out = eig;
  for (Index i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0) {
      if (out[i] < -kClampTolerance * scale) {
        throw NumericalError("gaussian: matrix expected PSD has eigenvalue " + std::to_string(out[i]));
      }
      out[i] = 0.0;
    }
  }
  return out;
}

Eigen::MatrixXd symmetrised(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

GaussianDist::GaussianDist(Eigen::VectorXd mean, Eigen::MatrixXd cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  const Index d = mean_.size();
  if (d < 1) throw std::invalid_argument("gaussian: dimension must be at least 1");
  if (cov_.rows() != d || cov_.cols() != d) throw std::invalid_argument("gaussian: covariance shape mismatch");
  if (!mean_.allFinite() || !cov_.allFinite()) throw std::invalid_argument("gaussian: parameters must be finite");
  const double scale = cov_.cwiseAbs().maxCoeff();
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw std::invalid_argument("gaussian: covariance is not symmetric");
  }
  cov_ = symmetrised(cov_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov_, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw std::invalid_argument("gaussian: covariance is not positive definite");
}

GaussianDist GaussianDist::isotropic(Index dim, double variance) {
  return GaussianDist(Eigen::VectorXd::Zero(dim), variance * Eigen::MatrixXd::Identity(dim, dim));
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrised(m));
  const Eigen::VectorXd roots = clamped_eigenvalues(es.eigenvalues()).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

double w2_squared_gaussian(const GaussianDist& a, const GaussianDist& b) {
  check_same_dim(a, b);
  const Eigen::MatrixXd root_a = symmetric_sqrt(a.cov());
  const Eigen::MatrixXd inner = symmetrised(root_a * b.cov() * root_a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  const double cross = clamped_eigenvalues(es.eigenvalues()).cwiseSqrt().sum();
  const double value = (a.mean() - b.mean()).squaredNorm() + a.cov().trace() + b.cov().trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

bool check_cot_gaussian(const GaussianDist& nu, const GaussianDist& mu) {
  check_same_dim(nu, mu);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> nu_es(nu.cov(), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff_es(symmetrised(nu.cov() - mu.cov()), Eigen::EigenvaluesOnly);
  return diff_es.eigenvalues().minCoeff() >= -kClampTolerance * nu_es.eigenvalues().maxCoeff();
}

bool check_cot_1d_quantiles(std::span<const double> nu_quantiles, std::span<const double> mu_quantiles) {
  if (nu_quantiles.size() != mu_quantiles.size()) throw std::invalid_argument("quantile check: lengths differ");
  if (nu_quantiles.size() < 2) throw std::invalid_argument("quantile check: need at least two quantiles");
  for (std::size_t i = 1; i < nu_quantiles.size(); ++i) {
    if (nu_quantiles[i] < nu_quantiles[i - 1] || mu_quantiles[i] < mu_quantiles[i - 1]) {
      throw std::invalid_argument("quantile check: quantiles must be sorted ascending");
    }
  }
  constexpr double tol = 1e-12;
  for (std::size_t i = 1; i < nu_quantiles.size(); ++i) {
    const double nu_gap = nu_quantiles[i] - nu_quantiles[i - 1];
    const double mu_gap = mu_quantiles[i] - mu_quantiles[i - 1];
    if (nu_gap < mu_gap - tol) return false;
  }
  return true;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
  if (m == m.transpose()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

GaussianDist ula_stationary(const GaussianDist& target, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("ula_stationary: step size must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(target.cov());
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double h2 = h * h;
  // Eigenvalues of M = I - h^2 Sigma^{-1} / 2 are 1 - h^2 / (2 lambda).
  double rho = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) rho = std::max(rho, std::abs(1.0 - h2 / (2.0 * lambda[i])));
  if (!(rho < 1.0)) throw std::invalid_argument("ula_stationary: step size too large, dynamics diverge");
  Eigen::VectorXd stationary_eig(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i) stationary_eig[i] = lambda[i] / (1.0 - h2 / (4.0 * lambda[i]));
  Eigen::MatrixXd cov = es.eigenvectors() * stationary_eig.asDiagonal() * es.eigenvectors().transpose();
  return GaussianDist(target.mean(), symmetrised(cov));
}

Eigen::MatrixXd gibbs_update_matrix(const Eigen::MatrixXd& precision, const std::vector<std::vector<Index>>& blocks) {
  const Index d = precision.rows();
  if (precision.cols() != d || d < 1) throw std::invalid_argument("gibbs: precision must be square");
  if (Eigen::LLT<Eigen::MatrixXd>(precision).info() != Eigen::Success) {
    throw std::invalid_argument("gibbs: precision must be positive definite");
  }
  std::vector<int> seen(d, 0);
  for (const auto& block : blocks) {
    if (block.empty()) throw std::invalid_argument("gibbs: empty block");
    for (const Index k : block) {
      if (k < 0 || k >= d || seen[k]++) throw std::invalid_argument("gibbs: blocks must partition the coordinates");
    }
  }
  for (const int s : seen) {
    if (s != 1) throw std::invalid_argument("gibbs: blocks must partition the coordinates");
  }

  // Updating block b replaces x_b by its conditional mean
  // -Q_bb^{-1} Q_{b,rest} x_rest (plus constant and noise); compose in scan order.
  Eigen::MatrixXd update = Eigen::MatrixXd::Identity(d, d);
  for (const auto& block : blocks) {
    const Index m = static_cast<Index>(block.size());
    Eigen::MatrixXd q_bb(m, m);
    Eigen::MatrixXd q_b_rest(m, d);
    for (Index r = 0; r < m; ++r) {
      q_b_rest.row(r) = precision.row(block[r]);
      for (Index c = 0; c < m; ++c) q_bb(r, c) = precision(block[r], block[c]);
    }
    for (Index r = 0; r < m; ++r) {
      for (Index c = 0; c < m; ++c) q_b_rest(r, block[c]) = 0.0;
    }
    const Eigen::MatrixXd rows = -q_bb.llt().solve(q_b_rest * update);
    for (Index r = 0; r < m; ++r) update.row(block[r]) = rows.row(r);
  }
  return update;
}

std::vector<std::vector<Index>> coordinate_blocks(Index dim) {
  std::vector<std::vector<Index>> blocks;
  blocks.reserve(dim);
  for (Index k = 0; k < dim; ++k) blocks.push_back({k});
  return blocks;
}

GaussianChainDynamics::GaussianChainDynamics(ChainKind kind, Eigen::MatrixXd update_matrix, GaussianDist stationary,
                                             std::int64_t max_cached_iteration)
    : kind_(kind), update_(std::move(update_matrix)), stationary_(std::move(stationary)) {
  if (update_.rows() != stationary_.dim() || update_.cols() != stationary_.dim()) {
    throw std::invalid_argument("gaussian dynamics: update matrix shape mismatch");
  }
  if (!(spectral_radius(update_) < 1.0)) {
    throw std::invalid_argument("gaussian dynamics: spectral radius of the update matrix must be below 1");
  }
  squarings_.push_back(update_);
  for (std::int64_t span = 2; span <= max_cached_iteration; span *= 2) {
    squarings_.push_back(squarings_.back() * squarings_.back());
  }
}

GaussianChainDynamics GaussianChainDynamics::gibbs(const GaussianDist& target,
                                                   const std::vector<std::vector<Index>>& blocks) {
  const Eigen::MatrixXd precision = target.cov().llt().solve(Eigen::MatrixXd::Identity(target.dim(), target.dim()));
  return GaussianChainDynamics(ChainKind::GibbsDeterministicScan, gibbs_update_matrix(symmetrised(precision), blocks),
                               target);
}

GaussianChainDynamics GaussianChainDynamics::ula(const GaussianDist& target, double h) {
  GaussianDist stationary = ula_stationary(target, h);
  const Index d = target.dim();
  const Eigen::MatrixXd precision = target.cov().llt().solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d) - 0.5 * h * h * symmetrised(precision);
  return GaussianChainDynamics(ChainKind::Ula, std::move(m), std::move(stationary));
}

Eigen::MatrixXd GaussianChainDynamics::power(std::int64_t t) const {
  if (t < 0) throw std::invalid_argument("gaussian dynamics: iteration must be non-negative");
  const Index d = update_.rows();
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd extra;  // squarings past the cache
  for (std::size_t k = 0; t > 0; ++k, t >>= 1) {
    const Eigen::MatrixXd* factor = nullptr;
    if (k < squarings_.size()) {
      factor = &squarings_[k];
    } else {
      extra = (k == squarings_.size()) ? Eigen::MatrixXd(squarings_.back() * squarings_.back())
                                       : Eigen::MatrixXd(extra * extra);
      factor = &extra;
    }
    if (t & 1) result = result * (*factor);
  }
  return result;
}

GaussianDist GaussianChainDynamics::marginal_at(const GaussianDist& pi0, std::int64_t t) const {
  if (pi0.dim() != stationary_.dim()) throw std::invalid_argument("gaussian dynamics: dimension mismatch");
  if (t == 0) return pi0;
  const Eigen::MatrixXd a_t = power(t);
  Eigen::VectorXd mean = stationary_.mean() + a_t * (pi0.mean() - stationary_.mean());
  Eigen::MatrixXd cov = stationary_.cov() + a_t * (pi0.cov() - stationary_.cov()) * a_t.transpose();
  return GaussianDist(std::move(mean), symmetrised(cov));
}

std::vector<bool> cot_preservation_check(const GaussianChainDynamics& dynamics, const GaussianDist& pi0,
                                         std::int64_t horizon) {
  if (horizon < 0) throw std::invalid_argument("cot_preservation_check: horizon must be non-negative");
  std::vector<bool> out;
  out.reserve(static_cast<std::size_t>(horizon) + 1);
  for (std::int64_t t = 0; t <= horizon; ++t) {
    out.push_back(check_cot_gaussian(dynamics.marginal_at(pi0, t), dynamics.stationary()));
  }
  return out;
}

}  // namespace wassbound
