#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "wassbound/coupling.hpp"
#include "wassbound/gaussian.hpp"
#include "wassbound/sample_io.hpp"
#include "wassbound/wasserstein.hpp"

namespace wassbound::cli {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

std::int64_t get_int(const json& obj, const char* key, std::int64_t fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

double get_double(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

ExperimentKind parse_experiment(const std::string& name) {
  if (name == "estimate_from_samples") return ExperimentKind::EstimateFromSamples;
  if (name == "gibbs_ar1") return ExperimentKind::GibbsAr1;
  if (name == "ula_mala_scaling") return ExperimentKind::UlaMalaScaling;
  if (name == "stochastic_volatility") return ExperimentKind::StochasticVolatility;
  if (name == "coupling_baseline") return ExperimentKind::CouplingBaseline;
  throw ConfigError("experiment: unknown value '" + name + "'");
}

struct Schedule {
  double step;
  std::int64_t horizon, thin, reference, a_start, a_end, a_stride;
};

// Per-experiment defaults (horizon, thin, reference, asymptote window).
Schedule default_schedule(ExperimentKind kind, Kernel kernel, Index dim) {
  const double d = static_cast<double>(std::max<Index>(dim, 1));
  switch (kind) {
    case ExperimentKind::GibbsAr1:
      return {1.0, 5000, 5, 5000, 2000, 4000, 5};
    case ExperimentKind::UlaMalaScaling:
      if (kernel == Kernel::Ula) return {0.2 * std::pow(d, -0.25), 7000, 40, 7000, 800, 6000, 40};
      if (kernel == Kernel::Rwm) return {0.5 * std::pow(d, -0.5), 7000, 40, 7000, 800, 6000, 40};
      return {std::pow(d, -1.0 / 6.0), 200, 1, 200, 25, 50, 1};
    case ExperimentKind::StochasticVolatility:
      if (kernel == Kernel::Rwm) return {0.1 * std::pow(d, -0.5), 300000, 2000, 300000, 100000, 200000, 2000};
      return {0.13 * std::pow(d, -1.0 / 6.0), 60000, 50, 60000, 20000, 50000, 500};
    case ExperimentKind::CouplingBaseline:
    case ExperimentKind::EstimateFromSamples:
      break;
  }
  return {1.0, 200, 1, 200, 100, 150, 1};
}

void parse_target(const json& doc, ExperimentConfig& c) {
  switch (c.experiment) {
    case ExperimentKind::GibbsAr1:
      c.target.type = "ar1_circulant", c.target.dim = 50, c.target.rho = 0.95;
      break;
    case ExperimentKind::UlaMalaScaling:
      c.target.type = "ar1_covariance", c.target.dim = 50;
      break;
    case ExperimentKind::StochasticVolatility:
      c.target.type = "stochastic_volatility", c.target.dim = c.target.svm.length;
      break;
    default:
      c.target.type = "ar1_covariance", c.target.dim = 1;
  }
  if (!doc.contains("target")) return;
  const json& t = doc.at("target");
  const std::string where = "target";
  reject_unknown(t, {"type", "dim", "rho", "length", "beta", "phi", "sigma", "data_seed", "observations"}, where);
  const std::string type = get_string(t, "type", c.target.type, where);
  if (type != c.target.type) {
    // A different family: forget the experiment's dimension default.
    c.target.dim = type == "ar1_circulant" ? 50 : (type == "ar1_covariance" ? 50 : c.target.svm.length);
    c.target.rho = type == "ar1_circulant" ? 0.95 : 0.0;
  }
  c.target.type = type;
  if (type == "ar1_circulant" || type == "ar1_covariance") {
    for (const char* k : {"length", "beta", "phi", "sigma", "data_seed", "observations"}) {
      if (t.contains(k)) throw ConfigError(where + "." + k + ": not a parameter of " + type);
    }
    if (type == "ar1_covariance" && t.contains("rho")) throw ConfigError("target.rho: ar1_covariance has rho = 0.5");
    c.target.dim = get_int(t, "dim", c.target.dim, where);
    c.target.rho = get_double(t, "rho", c.target.rho, where);
    if (c.target.dim < 1) throw ConfigError("target.dim: must be at least 1");
    if (!(std::abs(c.target.rho) < 1.0)) throw ConfigError("target.rho: |rho| must be below 1");
  } else if (type == "stochastic_volatility") {
    for (const char* k : {"dim", "rho"}) {
      if (t.contains(k)) throw ConfigError(where + "." + k + ": use length for the stochastic volatility model");
    }
    SvmParams& p = c.target.svm;
    p.length = get_int(t, "length", p.length, where);
    p.beta = get_double(t, "beta", p.beta, where);
    p.phi = get_double(t, "phi", p.phi, where);
    p.sigma = get_double(t, "sigma", p.sigma, where);
    const std::int64_t data_seed = get_int(t, "data_seed", static_cast<std::int64_t>(c.target.data_seed), where);
    if (data_seed < 0) throw ConfigError("target.data_seed: must be non-negative");
    c.target.data_seed = static_cast<std::uint64_t>(data_seed);
    c.target.observations = get_string(t, "observations", "", where);
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("target: ") + e.what());
    }
    c.target.dim = p.length;
  } else {
    throw ConfigError("target.type: unknown value '" + type + "'");
  }
}

void parse_initial(const json& doc, ExperimentConfig& c) {
  switch (c.experiment) {
    case ExperimentKind::GibbsAr1:
      c.initial = {"scaled_target", 4.0, 1.0};
      break;
    case ExperimentKind::UlaMalaScaling:
      c.initial = {"isotropic", 1.0, 3.0};
      break;
    case ExperimentKind::StochasticVolatility:
      c.initial = {"prior", 1.0, 1.0};
      break;
    default:
      c.initial = {"isotropic", 1.0, 4.0};
  }
  if (doc.contains("initial")) {
    const json& i = doc.at("initial");
    reject_unknown(i, {"type", "scale", "variance"}, "initial");
    c.initial.type = get_string(i, "type", c.initial.type, "initial");
    c.initial.scale = get_double(i, "scale", c.initial.scale, "initial");
    c.initial.variance = get_double(i, "variance", c.initial.variance, "initial");
  }
  const std::string& type = c.initial.type;
  if (type != "scaled_target" && type != "isotropic" && type != "prior") {
    throw ConfigError("initial.type: unknown value '" + type + "'");
  }
  if (!(c.initial.scale > 0.0) || !(c.initial.variance > 0.0)) {
    throw ConfigError("initial: scale and variance must be positive");
  }
  if (type == "scaled_target" && c.target.type == "stochastic_volatility") {
    throw ConfigError("initial.type: scaled_target needs a Gaussian target");
  }
  if (type == "prior" && c.target.type != "stochastic_volatility") {
    throw ConfigError("initial.type: prior is only defined for the stochastic volatility model");
  }
}

void check_recorded(std::int64_t t, const ExperimentConfig& c, const std::string& what) {
  if (t < 0 || t > c.horizon) throw ConfigError(what + ": iteration " + std::to_string(t) + " outside [0, horizon]");
  if (t % c.thin != 0) {
    throw ConfigError(what + ": iteration " + std::to_string(t) + " is not a multiple of thin = " +
                      std::to_string(c.thin));
  }
}

std::string fmt(double x) {
  if (!std::isfinite(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw DataError(path.string() + ": write failed");
}

json bound_json(const BoundEstimate& b) {
  json j = {{"value", b.value}, {"jackknife_variance", b.jackknife_variance}};
  if (b.ci) j["ci"] = {b.ci->low, b.ci->high};
  return j;
}

std::filesystem::path prepare_dir(const std::string& out_dir) {
  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw DataError(out_dir + ": cannot create output directory");
  return dir;
}

CouplingConfig coupling_config(const ExperimentConfig& c) {
  CouplingConfig cc;
  cc.kernel = c.kernel;
  cc.step = c.step;
  cc.lag = c.coupling->lag;
  cc.cap = c.coupling->cap;
  cc.seed = c.seed + 1;
  return cc;
}

// Runs the coupled pairs; when any pair is unmet writes the meeting-time
// summary, reports it on stderr and returns nullopt.
std::optional<std::vector<CoupledPairTrace>> run_pairs(const ExperimentConfig& c, const Target& target,
                                                       const InitialSampler& initial,
                                                       const std::filesystem::path& dir) {
  std::vector<CoupledPairTrace> traces =
      run_coupled_pairs(target, coupling_config(c), initial, c.coupling->pairs, default_workers());
  std::size_t unmet = 0;
  json times = json::array();
  for (const auto& tr : traces) {
    if (tr.met) {
      times.push_back(tr.meeting_time);
    } else {
      times.push_back(nullptr);
      ++unmet;
    }
  }
  if (unmet == 0) return traces;
  write_json(dir / "meeting_times.json", {{"lag", c.coupling->lag}, {"cap", c.coupling->cap}, {"meeting_times", times}});
  std::cerr << "coupling: " << unmet << " of " << traces.size() << " pairs did not meet by iteration "
            << c.coupling->cap << "; no coupling bound written (see meeting_times.json)\n";
  return std::nullopt;
}

json meeting_summary(const std::vector<CoupledPairTrace>& traces) {
  std::vector<std::int64_t> taus;
  for (const auto& tr : traces) taus.push_back(tr.meeting_time);
  std::sort(taus.begin(), taus.end());
  return {{"pairs", taus.size()},
          {"min", taus.front()},
          {"median", taus[taus.size() / 2]},
          {"max", taus.back()}};
}

}  // namespace

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::EstimateFromSamples: return "estimate_from_samples";
    case ExperimentKind::GibbsAr1: return "gibbs_ar1";
    case ExperimentKind::UlaMalaScaling: return "ula_mala_scaling";
    case ExperimentKind::StochasticVolatility: return "stochastic_volatility";
    case ExperimentKind::CouplingBaseline: return "coupling_baseline";
  }
  return "unknown";
}

ExperimentConfig parse_config(const json& doc) {
  reject_unknown(doc,
                 {"experiment", "kernel", "step_size", "n_chains", "horizon", "thin", "reference_iteration",
                  "asymptote", "alpha", "seed", "target", "initial", "coupling", "threshold", "samples"},
                 "config");
  if (!doc.contains("experiment")) throw ConfigError("config: missing 'experiment'");
  ExperimentConfig c;
  c.experiment = parse_experiment(get_string(doc, "experiment", "", "config"));
  c.alpha = get_double(doc, "alpha", 0.05, "config");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha: must lie in (0, 1)");
  const std::int64_t seed = get_int(doc, "seed", 1, "config");
  if (seed < 0) throw ConfigError("seed: must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);

  if (c.experiment == ExperimentKind::EstimateFromSamples) {
    for (const char* k : {"kernel", "step_size", "n_chains", "horizon", "thin", "reference_iteration", "asymptote",
                          "target", "initial", "coupling", "threshold"}) {
      if (doc.contains(k)) throw ConfigError(std::string(k) + ": not used by estimate_from_samples");
    }
    if (!doc.contains("samples")) throw ConfigError("samples: required by estimate_from_samples");
    const json& s = doc.at("samples");
    reject_unknown(s, {"nu", "mu", "mu_prime"}, "samples");
    for (const char* k : {"nu", "mu", "mu_prime"}) {
      if (!s.contains(k)) throw ConfigError(std::string("samples.") + k + ": missing");
    }
    c.samples = {get_string(s, "nu", "", "samples"), get_string(s, "mu", "", "samples"),
                 get_string(s, "mu_prime", "", "samples")};
    return c;
  }
  if (doc.contains("samples")) throw ConfigError("samples: only used by estimate_from_samples");

  parse_target(doc, c);
  const Kernel default_kernel = c.experiment == ExperimentKind::GibbsAr1               ? Kernel::GibbsGaussian
                                : c.experiment == ExperimentKind::CouplingBaseline ? Kernel::Rwm
                                                                                   : Kernel::Mala;
  try {
    c.kernel = doc.contains("kernel") ? parse_kernel(get_string(doc, "kernel", "", "config")) : default_kernel;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  if (c.kernel == Kernel::GibbsGaussian && c.target.type == "stochastic_volatility") {
    throw ConfigError("kernel: gibbs needs a Gaussian target");
  }
  parse_initial(doc, c);

  const Schedule s = default_schedule(c.experiment, c.kernel, c.target.dim);
  c.step = get_double(doc, "step_size", s.step, "config");
  c.n_chains = get_int(doc, "n_chains", c.experiment == ExperimentKind::CouplingBaseline ? 100 : 250, "config");
  c.horizon = get_int(doc, "horizon", s.horizon, "config");
  c.thin = get_int(doc, "thin", s.thin, "config");
  c.reference_iteration = get_int(doc, "reference_iteration", std::min(s.reference, c.horizon), "config");
  c.asymptote_start = s.a_start, c.asymptote_end = s.a_end, c.asymptote_stride = s.a_stride;
  if (doc.contains("asymptote")) {
    const json& a = doc.at("asymptote");
    reject_unknown(a, {"start", "end", "stride"}, "asymptote");
    c.asymptote_start = get_int(a, "start", c.asymptote_start, "asymptote");
    c.asymptote_end = get_int(a, "end", c.asymptote_end, "asymptote");
    c.asymptote_stride = get_int(a, "stride", c.thin, "asymptote");
  }
  if (doc.contains("threshold")) {
    c.threshold = get_double(doc, "threshold", 0.0, "config");
  } else if (c.experiment == ExperimentKind::UlaMalaScaling) {
    c.threshold = 6.0;
  }

  if (!(c.step > 0.0) || !std::isfinite(c.step)) throw ConfigError("step_size: must be positive");
  if (c.n_chains < 2) throw ConfigError("n_chains: need at least 2 chains");
  if (c.horizon < 1) throw ConfigError("horizon: must be at least 1");
  if (c.thin < 1) throw ConfigError("thin: must be at least 1");
  check_recorded(c.reference_iteration, c, "reference_iteration");
  if (c.reference_iteration < 1) throw ConfigError("reference_iteration: must be positive");
  if (c.asymptote_stride < 1 || c.asymptote_stride % c.thin != 0) {
    throw ConfigError("asymptote.stride: must be a positive multiple of thin");
  }
  if (c.asymptote_start > c.asymptote_end) throw ConfigError("asymptote: start must not exceed end");
  check_recorded(c.asymptote_start, c, "asymptote.start");
  if (c.asymptote_end >= c.reference_iteration) {
    throw ConfigError("asymptote.end: must be below reference_iteration");
  }

  if (doc.contains("coupling")) {
    const json& cp = doc.at("coupling");
    reject_unknown(cp, {"lag", "pairs", "cap"}, "coupling");
    CouplingSettings cs;
    cs.lag = get_int(cp, "lag", c.reference_iteration, "coupling");
    const std::int64_t pairs = get_int(cp, "pairs", c.n_chains, "coupling");
    cs.cap = get_int(cp, "cap", 100 * cs.lag, "coupling");
    if (cs.lag < 1) throw ConfigError("coupling.lag: must be at least 1");
    if (pairs < 1) throw ConfigError("coupling.pairs: must be at least 1");
    if (cs.cap < cs.lag) throw ConfigError("coupling.cap: must be at least the lag");
    cs.pairs = static_cast<std::size_t>(pairs);
    c.coupling = cs;
  } else if (c.experiment == ExperimentKind::CouplingBaseline) {
    c.coupling = CouplingSettings{20, 50, 100000};
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open configuration");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(doc);
}

Target build_target(const ExperimentConfig& c) {
  if (c.target.type == "ar1_circulant") return target_ar1_circulant(c.target.dim, c.target.rho);
  if (c.target.type == "ar1_covariance") return target_ar1_covariance(c.target.dim);
  Eigen::VectorXd y;
  if (!c.target.observations.empty()) {
    const RowMatrix m = read_samples(c.target.observations);
    if (m.cols() != 1 && m.rows() != 1) throw DataError(c.target.observations + ": expected a single series");
    y = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    if (y.size() != c.target.svm.length) {
      throw DataError(c.target.observations + ": series length differs from target.length");
    }
  } else {
    y = simulate_svm_data(c.target.svm, c.target.data_seed).observations;
  }
  return target_stochastic_volatility(c.target.svm, y);
}

std::optional<GaussianDist> initial_gaussian(const ExperimentConfig& c, const Target& target) {
  if (c.initial.type == "isotropic") return GaussianDist::isotropic(target.dim, c.initial.variance);
  if (c.initial.type == "scaled_target") {
    return GaussianDist(target.gaussian->mean(), c.initial.scale * target.gaussian->cov());
  }
  return std::nullopt;
}

InitialSampler build_initial(const ExperimentConfig& c, const Target& target) {
  if (c.initial.type == "isotropic") return isotropic_initial(target.dim, c.initial.variance);
  if (c.initial.type == "scaled_target") return gaussian_initial(*initial_gaussian(c, target));
  return svm_prior_initial(c.target.svm);
}

const std::vector<std::string>& trajectory_header() {
  static const std::vector<std::string> header = {"t",        "upper",       "upper_ci_lo", "upper_ci_hi", "lower_sq",
                                                  "lower_ci_lo", "lower_ci_hi", "exact",       "coupling"};
  return header;
}

json estimate_json(const RowMatrix& nu, const RowMatrix& mu, const RowMatrix& mu_prime, double alpha,
                   std::size_t workers) {
  if (nu.rows() != mu.rows() || nu.rows() != mu_prime.rows() || nu.cols() != mu.cols() ||
      nu.cols() != mu_prime.cols()) {
    throw DataError("sample files must have equal n and d");
  }
  if (nu.rows() < 2) throw DataError("need at least two samples per file");
  const EmpiricalMeasure nu_m(nu), mu_m(mu), mu_prime_m(mu_prime);
  BoundSet b = estimate_bounds(nu_m, mu_m, mu_prime_m, workers);
  attach_intervals(b, alpha);
  return {{"n", nu.rows()},
          {"d", nu.cols()},
          {"alpha", alpha},
          {"upper", bound_json(b.upper)},
          {"lower", bound_json(b.lower)},
          {"lower_squared", bound_json(b.lower_squared)},
          {"decay_constant", decay_constant(mu_m, nu_m)}};
}

int cmd_estimate(const std::string& nu, const std::string& mu, const std::string& mu_prime, double alpha,
                 const std::string& out) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("--alpha must lie in (0, 1)");
  const json doc = estimate_json(read_samples(nu), read_samples(mu), read_samples(mu_prime), alpha, default_workers());
  write_json(out, doc);
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig c = load_config(config_path);
  const std::filesystem::path dir = prepare_dir(out_dir);
  if (c.experiment == ExperimentKind::EstimateFromSamples) {
    return cmd_estimate(c.samples.nu, c.samples.mu, c.samples.mu_prime, c.alpha, (dir / "estimate.json").string());
  }
  const std::size_t workers = default_workers();
  const Target target = build_target(c);
  const InitialSampler initial = build_initial(c, target);

  EnsembleConfig ec;
  ec.kernel = c.kernel;
  ec.step = c.step;
  ec.n_chains = c.n_chains;
  ec.horizon = c.horizon;
  ec.thin = c.thin;
  ec.seed = c.seed;
  ec.workers = workers;
  const ChainEnsemble ensemble = run_ensemble(target, ec, initial);
  const ConvergenceBoundTrajectory traj =
      convergence_bounds(ensemble, c.reference_iteration, c.asymptote_set(), c.alpha, workers);

  std::vector<double> exact(traj.iterations.size(), std::nan(""));
  bool have_exact = false;
  const auto pi0 = initial_gaussian(c, target);
  if (target.gaussian && pi0 && (c.kernel == Kernel::GibbsGaussian || c.kernel == Kernel::Ula)) {
    const GaussianChainDynamics dyn = c.kernel == Kernel::GibbsGaussian
                                          ? GaussianChainDynamics::gibbs(*target.gaussian, coordinate_blocks(target.dim))
                                          : GaussianChainDynamics::ula(*target.gaussian, c.step);
    parallel_for(exact.size(), workers, [&](std::size_t i) {
      exact[i] = w2_squared_gaussian(dyn.marginal_at(*pi0, traj.iterations[i]), dyn.stationary());
    });
    have_exact = true;
  }

  std::vector<double> coupling(traj.iterations.size(), std::nan(""));
  json summary;
  if (c.coupling) {
    const auto traces = run_pairs(c, target, initial, dir);
    if (!traces) return 4;
    for (std::size_t i = 0; i < coupling.size(); ++i) {
      const double w = coupling_bound(*traces, traj.iterations[i]);
      coupling[i] = w * w;
    }
    summary["meeting_times"] = meeting_summary(*traces);
  }

  std::ofstream csv(dir / "trajectory.csv", std::ios::trunc);
  if (!csv) throw DataError((dir / "trajectory.csv").string() + ": cannot open for writing");
  const auto& header = trajectory_header();
  for (std::size_t k = 0; k < header.size(); ++k) csv << (k ? "," : "") << header[k];
  csv << '\n';
  for (std::size_t i = 0; i < traj.iterations.size(); ++i) {
    const BoundSet& b = traj.bounds[i];
    csv << traj.iterations[i] << ',' << fmt(b.upper.value) << ',' << fmt(b.upper.ci->low) << ','
        << fmt(b.upper.ci->high) << ',' << fmt(b.lower_squared.value) << ',' << fmt(b.lower_squared.ci->low) << ','
        << fmt(b.lower_squared.ci->high) << ',' << fmt(exact[i]) << ',' << fmt(coupling[i]) << '\n';
  }
  if (!csv) throw DataError("trajectory.csv: write failed");

  summary["experiment"] = experiment_name(c.experiment);
  summary["kernel"] = kernel_name(c.kernel);
  summary["step_size"] = c.step;
  summary["dim"] = target.dim;
  summary["n_chains"] = c.n_chains;
  summary["horizon"] = c.horizon;
  summary["thin"] = c.thin;
  summary["reference_iteration"] = c.reference_iteration;
  summary["asymptote"] = {{"start", c.asymptote_start}, {"end", c.asymptote_end}, {"stride", c.asymptote_stride}};
  summary["alpha"] = c.alpha;
  summary["seed"] = c.seed;
  summary["acceptance_rate"] = ensemble.acceptance_rate ? json(*ensemble.acceptance_rate) : json(nullptr);
  if (c.threshold) {
    const double thr = *c.threshold;
    auto first_below = [&](const std::vector<double>& col) -> json {
      for (std::size_t i = 0; i < col.size(); ++i) {
        if (std::isfinite(col[i]) && col[i] <= thr) return traj.iterations[i];
      }
      return nullptr;
    };
    const auto upper_t = mixing_time(traj, thr);
    summary["threshold"] = thr;
    summary["mixing_time"] = {{"upper", upper_t ? json(*upper_t) : json(nullptr)},
                              {"exact", have_exact ? first_below(exact) : json(nullptr)},
                              {"coupling", c.coupling ? first_below(coupling) : json(nullptr)}};
  }
  write_json(dir / "summary.json", summary);
  return 0;
}

int cmd_coupling(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig c = load_config(config_path);
  if (c.experiment == ExperimentKind::EstimateFromSamples) throw ConfigError("coupling: experiment has no chains");
  if (!c.coupling) throw ConfigError("coupling: configuration has no 'coupling' section");
  const std::filesystem::path dir = prepare_dir(out_dir);
  const Target target = build_target(c);
  const auto traces = run_pairs(c, target, build_initial(c, target), dir);
  if (!traces) return 4;

  std::ofstream csv(dir / "coupling.csv", std::ios::trunc);
  if (!csv) throw DataError((dir / "coupling.csv").string() + ": cannot open for writing");
  csv << "t,coupling_w2,coupling_w2_sq\n";
  for (std::int64_t t = 0; t <= c.horizon; t += c.thin) {
    const double w = coupling_bound(*traces, t);
    csv << t << ',' << fmt(w) << ',' << fmt(w * w) << '\n';
  }
  if (!csv) throw DataError("coupling.csv: write failed");

  json pairs = json::array();
  for (const auto& tr : *traces) {
    pairs.push_back({{"meeting_time", tr.meeting_time}, {"distance_sq_trace", tr.distance_sq_trace}});
  }
  write_json(dir / "traces.json", {{"lag", c.coupling->lag}, {"kernel", kernel_name(c.kernel)}, {"pairs", pairs}});
  return 0;
}

int cmd_convert(const std::string& csv, const std::string& bin, const std::string& out) {
  if (csv.empty() == bin.empty()) throw ConfigError("convert: give exactly one of --csv or --bin");
  if (!csv.empty()) {
    write_samples_binary(out, read_samples_csv(csv));
  } else {
    write_samples_csv(out, read_samples_binary(bin));
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Empirical Wasserstein bounds and MCMC convergence diagnostics"};
  app.require_subcommand(1);

  std::string nu, mu, mu_prime, out, config, csv, bin;
  double alpha = 0.05;

  auto* estimate = app.add_subcommand("estimate", "Upper and lower bounds on W2^2 from three sample files");
  estimate->add_option("--nu", nu, "Samples from the measure being assessed")->required();
  estimate->add_option("--mu", mu, "Samples from the reference measure")->required();
  estimate->add_option("--mu-prime", mu_prime, "Independent second sample from the reference")->required();
  estimate->add_option("--alpha", alpha, "Confidence intervals have level 1 - alpha")->capture_default_str();
  estimate->add_option("--out", out, "Output JSON file")->required();

  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its bound trajectory");
  run_cmd->add_option("--config", config, "Experiment configuration (JSON)")->required();
  run_cmd->add_option("--out", out, "Output directory")->required();

  auto* coupling_cmd = app.add_subcommand("coupling", "Run lagged coupled chains and write the coupling bound");
  coupling_cmd->add_option("--config", config, "Experiment configuration (JSON)")->required();
  coupling_cmd->add_option("--out", out, "Output directory")->required();

  auto* convert = app.add_subcommand("convert", "Convert sample matrices between CSV and binary");
  auto* csv_opt = convert->add_option("--csv", csv, "CSV input, written as binary");
  auto* bin_opt = convert->add_option("--bin", bin, "Binary input, written as CSV");
  csv_opt->excludes(bin_opt);
  convert->add_option("--out", out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*estimate) return cmd_estimate(nu, mu, mu_prime, alpha, out);
    if (*run_cmd) return cmd_run(config, out);
    if (*coupling_cmd) return cmd_coupling(config, out);
    return cmd_convert(csv, bin, out);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace wassbound::cli
