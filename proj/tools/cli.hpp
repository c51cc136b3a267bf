#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wassbound/mcmc.hpp"

namespace wassbound::cli {

/// Invalid configuration or command line (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { EstimateFromSamples, GibbsAr1, UlaMalaScaling, StochasticVolatility, CouplingBaseline };

struct TargetSettings {
  std::string type;  // ar1_circulant | ar1_covariance | stochastic_volatility
  Index dim = 0;
  double rho = 0.0;
  SvmParams svm;
  std::uint64_t data_seed = 1;
  std::string observations;  // optional sample file with one column
};

struct InitialSettings {
  std::string type;       // scaled_target | isotropic | prior
  double scale = 1.0;     // covariance multiplier for scaled_target
  double variance = 1.0;  // for isotropic
};

struct CouplingSettings {
  std::int64_t lag = 1;
  std::size_t pairs = 1;
  std::int64_t cap = 1;
};

struct SampleFiles {
  std::string nu, mu, mu_prime;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::GibbsAr1;
  Kernel kernel = Kernel::GibbsGaussian;
  double step = 1.0;
  Index n_chains = 0;
  std::int64_t horizon = 0;
  std::int64_t thin = 1;
  std::int64_t reference_iteration = 0;
  std::int64_t asymptote_start = 0, asymptote_end = 0, asymptote_stride = 1;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  TargetSettings target;
  InitialSettings initial;
  std::optional<CouplingSettings> coupling;
  std::optional<double> threshold;
  SampleFiles samples;

  std::vector<std::int64_t> asymptote_set() const {
    return iteration_range(asymptote_start, asymptote_end, asymptote_stride);
  }
};

/// Validates the document (unknown keys are rejected) and fills in the
/// per-experiment defaults. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string experiment_name(ExperimentKind kind);

Target build_target(const ExperimentConfig& config);
InitialSampler build_initial(const ExperimentConfig& config, const Target& target);

/// Gaussian law of the initial distribution, when it has one.
std::optional<GaussianDist> initial_gaussian(const ExperimentConfig& config, const Target& target);

/// Column names of the trajectory CSV.
const std::vector<std::string>& trajectory_header();

nlohmann::json estimate_json(const RowMatrix& nu, const RowMatrix& mu, const RowMatrix& mu_prime, double alpha,
                             std::size_t workers);

int cmd_estimate(const std::string& nu, const std::string& mu, const std::string& mu_prime, double alpha,
                 const std::string& out);
int cmd_run(const std::string& config_path, const std::string& out_dir);
int cmd_coupling(const std::string& config_path, const std::string& out_dir);
int cmd_convert(const std::string& csv, const std::string& bin, const std::string& out);

/// Full command line entry point; returns the process exit status
/// (0 ok, 1 other failure, 2 config error, 3 data error, 4 numerical failure).
int run(int argc, char** argv);

}  // namespace wassbound::cli
