#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "wassbound/mcmc.hpp"

namespace wassbound {

struct CouplingConfig {
  Kernel kernel = Kernel::Rwm;
  double step = 0.1;
  std::int64_t lag = 1;
  /// Largest X-chain iteration simulated before giving up.
  std::int64_t cap = 100000;
  std::uint64_t seed = 1;
  /// false runs Y independently of X (no meeting), for marginal checks.
  bool reflection_maximal = true;
  bool record_x_path = false;
};

/// One L-lagged pair (X, Y). meeting_time is measured on the X clock:
/// X_tau == Y_{tau - L} bitwise, and distance_sq_trace[t] = ||X_{t+L} - Y_t||^2
/// for t = 0 .. tau - L - 1. Unmet pairs keep the trace up to the cap.
struct CoupledPairTrace {
  std::int64_t lag = 0;
  std::int64_t meeting_time = -1;
  bool met = false;
  std::vector<double> distance_sq_trace;
  std::vector<Eigen::VectorXd> x_path;  ///< X_0, X_1, ... when recorded
};

/// Reflection-maximal coupled step of both chains. The X chain consumes
/// `x_rng` exactly as an uncoupled ChainStepper would; the coupling
/// uniforms come from `coupling_rng`.
class CoupledStepper {
 public:
  CoupledStepper(const Target& target, Kernel kernel, double step, bool reflection_maximal = true);

  void reset(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
  /// Advances X alone (used during the lag phase).
  void step_x(Rng& x_rng);
  void step_both(Rng& x_rng, Rng& coupling_rng);

  const Eigen::VectorXd& x() const noexcept { return x_.state; }
  const Eigen::VectorXd& y() const noexcept { return y_.state; }
  bool met() const { return x_.state == y_.state; }

 private:
  struct Side {
    Eigen::VectorXd state, grad, mean, proposal, proposal_grad;
    double log_pi = 0.0;
  };
  void refresh(Side& s) const;
  void update_mean(Side& s) const;
  bool metropolis(Side& s, double log_u, const Eigen::VectorXd& noise) const;
  void gibbs_sweep(Rng& x_rng, Rng* coupling_rng);

  const Target* target_;
  Kernel kernel_;
  double h_;
  bool reflect_;
  Side x_, y_;
  Eigen::VectorXd xi_, eta_;
  // Coordinate-wise Gibbs: conditional sd and the off-diagonal precision rows.
  Eigen::VectorXd cond_sd_, inv_diag_;
};

/// Runs X for `lag` steps from initial draws, then both chains jointly until
/// they meet or X reaches `cap`. Pair streams: X uses stream 2 * pair_index
/// of Rng::streams(seed, ...), the coupling and Y's initial draw use stream
/// 2 * pair_index + 1.
CoupledPairTrace run_coupled_pair(const Target& target, const CouplingConfig& config, const InitialSampler& initial,
                                  std::size_t pair_index = 0);

/// Starts the joint phase directly from X_L = x_lagged and Y_0 = y0;
/// identical states meet immediately with an empty trace.
CoupledPairTrace run_coupled_pair_from(const Target& target, const CouplingConfig& config,
                                       const Eigen::VectorXd& x_lagged, const Eigen::VectorXd& y0,
                                       std::size_t pair_index = 0);

std::vector<CoupledPairTrace> run_coupled_pairs(const Target& target, const CouplingConfig& config,
                                                const InitialSampler& initial, std::size_t pairs,
                                                std::size_t workers = 1);

/// Estimate of the W2 coupling bound at iteration t (unsquared scale):
/// sum over j >= 1 of sqrt(mean_r ||X^r_{t+jL} - Y^r_{t+(j-1)L}||^2), with
/// distances after a pair's meeting counted as 0. Throws if any trace is
/// unmet or the lags differ.
double coupling_bound(const std::vector<CoupledPairTrace>& traces, std::int64_t t);

}  // namespace wassbound
