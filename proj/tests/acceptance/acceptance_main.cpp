// Acceptance checks. One PASS/FAIL line per criterion; the exit status is
// nonzero when any criterion fails. Runtime limits count towards the verdict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "../unit/oracles.hpp"
#include "cli.hpp"
#include "wassbound/assignment.hpp"
#include "wassbound/coupling.hpp"
#include "wassbound/gaussian.hpp"
#include "wassbound/jackknife.hpp"
#include "wassbound/mcmc.hpp"
#include "wassbound/wasserstein.hpp"

using namespace wassbound;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

class Workspace {
 public:
  Workspace() : dir_(fs::temp_directory_path() / "wassbound_acceptance") {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string config(const std::string& name, const json& doc) const {
    std::ofstream(path(name)) << doc.dump();
    return path(name);
  }

 private:
  fs::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Numeric columns of a CSV with a header; empty fields become NaN.
std::vector<std::vector<double>> read_csv(const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(field.empty() ? std::nan("") : std::stod(field));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(row);
  }
  return rows;
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

Verdict assignment_oracle() {
  Rng rng(1001);
  int failures = 0;
  double worst_real = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + trial % 7;
    RowMatrix c(n, n);
    const bool integer = trial % 2 == 0;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) c(i, j) = integer ? std::floor(50.0 * rng.uniform()) : 10.0 * rng.normal();
    const double got = solve_assignment(CostMatrix(c)).objective;
    const double want = oracle::brute_force_assignment(c);
    if (integer) {
      failures += got != want;
    } else {
      const double rel = std::abs(got - want) / std::max(std::abs(want), 1e-300);
      worst_real = std::max(worst_real, rel);
      failures += rel > 1e-12;
    }
  }
  return {failures == 0, format("%d/200 mismatches, worst real relative error %.2e", failures, worst_real)};
}

Verdict flapjack_correctness() {
  const auto begin = std::chrono::steady_clock::now();
  Rng rng(1002);
  const Index sizes[] = {5, 10, 25, 64};
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = sizes[trial % 4];
    const RowMatrix c = trial % 2 == 0 ? oracle::uniform_matrix(rng, n, n)
                                       : oracle::squared_distances(oracle::normal_matrix(rng, n, 3),
                                                                   oracle::normal_matrix(rng, n, 3, 2.0));
    const auto loo = flapjack(CostMatrix(c));
    for (Index j = 0; j < n; ++j) {
      const double fresh = solve_assignment(CostMatrix(oracle::delete_index(c, j))).objective;
      worst = std::max(worst, std::abs(loo.loo_costs[j] - fresh) / std::abs(fresh));
    }
  }
  const bool correct = worst <= 1e-10;
  const double correctness_time = seconds_since(begin);

  const Index n = 512;
  const RowMatrix c =
      oracle::squared_distances(oracle::normal_matrix(rng, n, 10), oracle::normal_matrix(rng, n, 10, 2.0));
  auto start = std::chrono::steady_clock::now();
  const auto loo = flapjack(CostMatrix(c));
  const double fast = seconds_since(start);
  start = std::chrono::steady_clock::now();
  double checksum = 0.0;
  for (Index j = 0; j < n; ++j) checksum += solve_assignment(CostMatrix(oracle::delete_index(c, j))).objective;
  const double naive = seconds_since(start);
  const bool agree = std::abs(checksum - loo.loo_costs.sum()) <= 1e-10 * std::abs(checksum);
  const double ratio = fast / naive;
  return {correct && correctness_time <= 30.0 && agree && ratio <= 0.25,
          format("worst relative error %.2e in %.1fs (limit 30s); n=512 flapjack %.3fs vs %.3fs naive (ratio %.3f, "
                 "limit 0.25)",
                 worst, correctness_time, fast, naive, ratio)};
}

Verdict n1_overdispersion_example() {
  const GaussianDist mu = GaussianDist::isotropic(2, 1.0);
  const GaussianDist nu(VectorXd::Zero(2), Eigen::Vector2d(2.0, 0.25).asDiagonal().toDenseMatrix());
  const MatrixXd l_mu = symmetric_sqrt(mu.cov()), l_nu = symmetric_sqrt(nu.cov());
  Rng rng(1003);
  const int reps = 200000;
  auto draw = [&](const MatrixXd& l) {
    RowMatrix p(1, 2);
    VectorXd z(2);
    rng.fill_normal(z);
    p.row(0) = (l * z).transpose();
    return EmpiricalMeasure(p);
  };
  double sum = 0.0, sum_sq = 0.0, swapped = 0.0, swapped_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto x_nu = draw(l_nu), x_mu = draw(l_mu), x_mu2 = draw(l_mu), x_nu2 = draw(l_nu);
    const double u = w2_squared(x_nu, x_mu).cost - w2_squared(x_mu2, x_mu).cost;
    const double v = w2_squared(x_mu, x_nu).cost - w2_squared(x_nu2, x_nu).cost;
    sum += u, sum_sq += u * u, swapped += v, swapped_sq += v * v;
  }
  const double mean = sum / reps, mean_swapped = swapped / reps;
  const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
  const double se_swapped = std::sqrt((swapped_sq / reps - mean_swapped * mean_swapped) / reps);
  const double exact = w2_squared_gaussian(mu, nu);
  const double want = 0.25 + std::pow(std::sqrt(2.0) - 1.0, 2);
  const bool pass = std::abs(mean - 0.25) <= 0.01 && std::abs(mean_swapped + 0.25) <= 0.01 &&
                    std::abs(exact - want) <= 1e-12;
  return {pass, format("mean U %.4f (SE %.4f, target 0.25 +- 0.01); swapped %.4f (SE %.4f, target -0.25 +- 0.01); "
                       "closed form error %.1e",
                       mean, se, mean_swapped, se_swapped, std::abs(exact - want))};
}

Verdict shift_unbiasedness() {
  Rng rng(1004);
  const Index d = 5, n = 100;
  RowMatrix shift = RowMatrix::Zero(1, d);
  shift(0, 0) = 1.0, shift(0, 1) = 1.0;  // squared norm 2
  std::vector<double> u;
  for (int r = 0; r < 200; ++r) {
    RowMatrix nu = oracle::normal_matrix(rng, n, d);
    nu.rowwise() += shift.row(0);
    const RowMatrix mu = oracle::normal_matrix(rng, n, d), mp = oracle::normal_matrix(rng, n, d);
    u.push_back(estimate_upper(EmpiricalMeasure(nu), EmpiricalMeasure(mu), EmpiricalMeasure(mp)).value);
  }
  double mean = 0.0;
  for (double x : u) mean += x;
  mean /= u.size();
  double var = 0.0;
  for (double x : u) var += (x - mean) * (x - mean);
  const double se = std::sqrt(var / (u.size() - 1) / u.size());
  return {std::abs(mean - 2.0) <= 3.0 * se, format("mean U %.4f, SE %.4f, |mean - 2| / SE = %.2f (limit 3)", mean, se,
                                                   std::abs(mean - 2.0) / se)};
}

Verdict jackknife_conservativeness() {
  Rng rng(1005);
  const Index d = 10, n = 100;
  const int reps = 500;
  std::vector<double> u(reps), jk(reps);
  std::vector<Interval> ci(reps);
  for (int r = 0; r < reps; ++r) {
    const RowMatrix nu = oracle::normal_matrix(rng, n, d, std::sqrt(10.0));
    const RowMatrix mu = oracle::normal_matrix(rng, n, d), mp = oracle::normal_matrix(rng, n, d);
    const BoundEstimate b = estimate_upper(EmpiricalMeasure(nu), EmpiricalMeasure(mu), EmpiricalMeasure(mp));
    u[r] = b.value;
    jk[r] = b.jackknife_variance;
    ci[r] = gaussian_ci(b.value, jackknife_variance(b.loo_values), 0.05);
  }
  double mean = 0.0, mean_jk = 0.0;
  for (int r = 0; r < reps; ++r) mean += u[r], mean_jk += jk[r];
  mean /= reps, mean_jk /= reps;
  double var = 0.0;
  for (double x : u) var += (x - mean) * (x - mean);
  var /= reps - 1;
  int covered = 0;
  for (const auto& i : ci) covered += i.low <= mean && mean <= i.high;
  const double coverage = static_cast<double>(covered) / reps;
  const double ratio = mean_jk / var;
  return {ratio >= 1.0 && ratio <= 3.0 && coverage >= 0.93,
          format("mean jackknife variance / empirical variance = %.3f (band [1, 3]); coverage %.3f (min 0.93)", ratio,
                 coverage)};
}

Verdict gaussian_dynamics() {
  const Index d = 10;
  Rng rng(1006);
  const MatrixXd g = oracle::normal_matrix(rng, d, d);
  const GaussianDist target(VectorXd::Zero(d), g * g.transpose() / d + MatrixXd::Identity(d, d));
  const double h = 0.3;
  const auto stat = ula_stationary(target, h);
  const MatrixXd m = MatrixXd::Identity(d, d) - 0.5 * h * h * target.cov().inverse();
  const double fixed = (m * stat.cov() * m.transpose() + h * h * MatrixXd::Identity(d, d) - stat.cov()).cwiseAbs().maxCoeff();

  const double hs = 0.05;
  const auto iso = GaussianDist::isotropic(d, 1.0);
  const double ratio = w2_squared_gaussian(ula_stationary(iso, hs), iso) / (std::pow(hs, 4) * d / 64.0);

  // Sequential recurrence: m <- A m + (I - A) m_inf, C <- A C A' + (C_inf - A C_inf A').
  double worst = 0.0;
  const auto circ = target_ar1_circulant(d, 0.9);
  for (const auto& dyn : {GaussianChainDynamics::gibbs(*circ.gaussian, coordinate_blocks(d)),
                          GaussianChainDynamics::ula(target, h)}) {
    const MatrixXd& a = dyn.update_matrix();
    const GaussianDist& inf = dyn.stationary();
    VectorXd mean = VectorXd::Constant(d, 3.0);
    MatrixXd cov = 4.0 * inf.cov();
    const GaussianDist pi0(mean, cov);
    const MatrixXd noise = inf.cov() - a * inf.cov() * a.transpose();
    const VectorXd drift = inf.mean() - a * inf.mean();
    for (int t = 0; t < 100; ++t) {
      mean = a * mean + drift;
      cov = a * cov * a.transpose() + noise;
    }
    const GaussianDist fast = dyn.marginal_at(pi0, 100);
    worst = std::max({worst, (fast.mean() - mean).cwiseAbs().maxCoeff(), (fast.cov() - cov).cwiseAbs().maxCoeff()});
  }
  return {fixed <= 1e-10 && ratio >= 0.95 && ratio <= 1.05 && worst <= 1e-9,
          format("fixed-point residual %.1e; bias ratio at h=0.05 %.4f; marginal_at vs 100 steps %.1e", fixed, ratio,
                 worst)};
}

Verdict gibbs_experiment(const Workspace& ws) {
  const json doc = {{"experiment", "gibbs_ar1"}, {"coupling", {{"lag", 5000}, {"pairs", 250}}}, {"seed", 7}};
  const int status = cli::cmd_run(ws.config("gibbs.json", doc), ws.path("gibbs"));
  if (status != 0) return {false, format("run exited with status %d", status)};
  const auto rows = read_csv(ws.path("gibbs/trajectory.csv"));
  // Columns: t, upper, upper_ci_lo, upper_ci_hi, lower_sq, lower_ci_lo, lower_ci_hi, exact, coupling.
  auto fractions = [&](std::int64_t below) {
    int total = 0, upper = 0, lower = 0, coupling = 0;
    for (const auto& r : rows) {
      if (r[0] >= below) continue;
      ++total;
      upper += r[1] >= r[7];
      lower += r[4] <= r[7];
      coupling += r[8] >= r[1];
    }
    return std::array<double, 3>{static_cast<double>(upper) / total, static_cast<double>(lower) / total,
                                 static_cast<double>(coupling) / total};
  };
  const auto pre = fractions(2000);
  const auto early = fractions(500);
  const bool pass = pre[0] >= 0.9 && pre[1] >= 0.9 && pre[2] >= 0.9;
  return {pass, format("t<2000: upper>=exact %.3f, lower_sq<=exact %.3f, coupling>=upper %.3f (each min 0.90); "
                       "t<500: %.3f, %.3f, %.3f",
                       pre[0], pre[1], pre[2], early[0], early[1], early[2])};
}

Verdict ula_vs_mala(const Workspace& ws) {
  std::string detail;
  bool pass = true;
  for (int d : {50, 100}) {
    std::int64_t times[2] = {-1, -1};
    int k = 0;
    for (const char* kernel : {"mala", "ula"}) {
      const std::string name = format("%s_%d", kernel, d);
      const json doc = {{"experiment", "ula_mala_scaling"}, {"kernel", kernel}, {"target", {{"dim", d}}}};
      if (cli::cmd_run(ws.config(name + ".json", doc), ws.path(name)) != 0) return {false, name + " run failed"};
      const json summary = json::parse(slurp(ws.path(name + "/summary.json")));
      const json& t = summary["mixing_time"]["upper"];
      times[k++] = t.is_null() ? -1 : t.get<std::int64_t>();
    }
    // An upper bound that never reaches the threshold means a mixing time past the horizon.
    const bool ok = times[0] >= 0 && (times[1] < 0 || times[0] < times[1]);
    pass = pass && ok;
    detail += format("d=%d: MALA %lld, ULA %lld%s; ", d, static_cast<long long>(times[0]),
                     static_cast<long long>(times[1]), times[1] < 0 ? " (beyond horizon)" : "");
  }
  return {pass, detail + "threshold 6"};
}

Verdict overdispersion_persistence() {
  const Index d = 50;
  const auto circ = target_ar1_circulant(d, 0.95);
  const auto smooth = target_ar1_covariance(d);
  const std::vector<std::pair<std::string, GaussianChainDynamics>> cases = {
      {"gibbs", GaussianChainDynamics::gibbs(*circ.gaussian, coordinate_blocks(d))},
      {"ula", GaussianChainDynamics::ula(*smooth.gaussian, 0.2 * std::pow(d, -0.25))}};
  std::string detail;
  bool pass = true;
  for (const auto& [name, dyn] : cases) {
    const GaussianDist& target = name == "gibbs" ? *circ.gaussian : *smooth.gaussian;
    const auto over = cot_preservation_check(dyn, GaussianDist(target.mean(), 4.0 * target.cov()), 200);
    const auto under = cot_preservation_check(dyn, GaussianDist(target.mean(), 0.25 * target.cov()), 200);
    const auto n_over = std::count(over.begin(), over.end(), true);
    const auto n_under = std::count(under.begin(), under.end(), true);
    pass = pass && n_over == 201 && n_under == 0;
    detail += format("%s: 4x start true at %ld/201, 0.25x start true at %ld/201; ", name.c_str(), n_over, n_under);
  }
  return {pass, detail.substr(0, detail.size() - 2)};
}

Verdict property_suites(const Workspace& ws) {
  Rng rng(1010);
  std::vector<std::string> failed;

  bool metric = true;
  for (int trial = 0; trial < 50; ++trial) {
    const EmpiricalMeasure a(oracle::normal_matrix(rng, 6, 3)), b(oracle::normal_matrix(rng, 6, 3, 2.0)),
        c(oracle::normal_matrix(rng, 6, 3, 0.5));
    const double ab = std::sqrt(w2_squared(a, b).cost), ba = std::sqrt(w2_squared(b, a).cost);
    const double bc = std::sqrt(w2_squared(b, c).cost), ac = std::sqrt(w2_squared(a, c).cost);
    metric = metric && w2_squared(a, a).cost == 0.0 && ab > 0.0 && std::abs(ab - ba) <= 1e-12 * ab &&
             ac <= ab + bc + 1e-12;
  }
  if (!metric) failed.push_back("metric axioms");

  bool sorted = true;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 30;
    const EmpiricalMeasure a(oracle::normal_matrix(rng, n, 1)), b(oracle::normal_matrix(rng, n, 1, 3.0));
    sorted = sorted && relative_gap(w2_squared_1d(a, b), w2_squared(a, b).cost) <= 1e-12;
  }
  if (!sorted) failed.push_back("1-D sorted pairing");

  bool mean_identity = true;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 40;
    const VectorXd x = oracle::normal_matrix(rng, n, 1, 5.0).col(0);
    VectorXd loo(n);
    for (Index i = 0; i < n; ++i) loo[i] = (x.sum() - x[i]) / static_cast<double>(n - 1);
    const double s2 = (x.array() - x.mean()).square().sum() / static_cast<double>(n - 1);
    mean_identity = mean_identity && relative_gap(jackknife_variance(loo).variance, s2 / n) <= 1e-12;
  }
  if (!mean_identity) failed.push_back("jackknife of the mean");

  auto gradient_error = [](const Target& t, const VectorXd& x) {
    VectorXd grad(t.dim);
    t.log_density(x, &grad);
    double worst = 0.0;
    for (Index k = 0; k < t.dim; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
      VectorXd up = x, down = x;
      up[k] += h, down[k] -= h;
      const double fd = (t.log_pdf(up) - t.log_pdf(down)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1.0, std::abs(grad[k])));
    }
    return worst;
  };
  const auto ar1 = target_ar1_covariance(100);
  const SvmParams svm_params;
  const auto svm_data = simulate_svm_data(svm_params, 11);
  const auto svm = target_stochastic_volatility(svm_params, svm_data.observations);
  double grad_worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    grad_worst = std::max(grad_worst, gradient_error(ar1, oracle::normal_matrix(rng, 100, 1, 2.0).col(0)));
    VectorXd x = svm_data.latent + oracle::normal_matrix(rng, svm_params.length, 1, 0.3).col(0);
    grad_worst = std::max(grad_worst, gradient_error(svm, x));
  }
  if (grad_worst > 1e-5) failed.push_back("finite-difference gradients");

  bool faithful = true, marginal = true;
  const auto small_smooth = target_ar1_covariance(3);
  const auto small_circ = target_ar1_circulant(3, 0.5);
  for (Kernel k : {Kernel::Rwm, Kernel::Mala, Kernel::Ula, Kernel::GibbsGaussian}) {
    const Target& target = k == Kernel::GibbsGaussian ? small_circ : small_smooth;
    CoupledStepper stepper(target, k, k == Kernel::Rwm ? 1.0 : 0.7);
    stepper.reset(VectorXd::Constant(3, 2.0), VectorXd::Constant(3, -1.0));
    Rng x_rng(21), c_rng(22);
    int steps = 0;
    while (!stepper.met() && steps++ < 100000) stepper.step_both(x_rng, c_rng);
    for (int s = 0; s < 200 && faithful; ++s) {
      stepper.step_both(x_rng, c_rng);
      faithful = stepper.met();
    }
    CouplingConfig cfg{k, 0.6, 5, 400, 23, true, true};
    const auto coupled = run_coupled_pair(target, cfg, isotropic_initial(3, 4.0), 1);
    cfg.reflection_maximal = false;
    const auto independent = run_coupled_pair(target, cfg, isotropic_initial(3, 4.0), 1);
    for (std::size_t s = 0; s < coupled.x_path.size() && s < independent.x_path.size(); ++s) {
      marginal = marginal && coupled.x_path[s] == independent.x_path[s];
    }
  }
  if (!faithful) failed.push_back("coupled-pair faithfulness");
  if (!marginal) failed.push_back("X-marginal bit-equality");

  const json doc = {{"experiment", "gibbs_ar1"}, {"target", {{"dim", 8}, {"rho", 0.8}}},
                    {"n_chains", 30},           {"horizon", 100},
                    {"thin", 5},                {"reference_iteration", 100},
                    {"asymptote", {{"start", 50}, {"end", 90}}}};
  const std::string cfg = ws.config("determinism.json", doc);
  const bool ran = cli::cmd_run(cfg, ws.path("det1")) == 0 && cli::cmd_run(cfg, ws.path("det2")) == 0;
  if (!ran || slurp(ws.path("det1/trajectory.csv")) != slurp(ws.path("det2/trajectory.csv"))) {
    failed.push_back("CLI determinism");
  }

  std::string detail = format("7 suites, worst gradient error %.1e", grad_worst);
  for (const auto& f : failed) detail += "; failed: " + f;
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const Workspace ws;
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "assignment matches brute force", 5, assignment_oracle},
      {2, "flapjack leave-one-out costs and speed", 600, flapjack_correctness},
      {3, "n=1 overdispersion example", 20, n1_overdispersion_example},
      {4, "shift unbiasedness", 120, shift_unbiasedness},
      {5, "jackknife conservativeness", 600, jackknife_conservativeness},
      {6, "Gaussian dynamics oracles", 5, gaussian_dynamics},
      {7, "Gibbs AR(1) experiment ordering", 1800, [&] { return gibbs_experiment(ws); }},
      {8, "MALA mixes before ULA", 2700, [&] { return ula_vs_mala(ws); }},
      {9, "overdispersion persistence", 5, overdispersion_persistence},
      {10, "property suites", 300, [&] { return property_suites(ws); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    const bool in_time = elapsed <= c.limit_seconds;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::printf("[%s] %2d %s: %s [%.1fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                elapsed, c.limit_seconds, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
