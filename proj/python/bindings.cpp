#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wassbound/assignment.hpp"
#include "wassbound/gaussian.hpp"
#include "wassbound/jackknife.hpp"
#include "wassbound/mcmc.hpp"
#include "wassbound/wasserstein.hpp"

namespace py = pybind11;
using namespace wassbound;

namespace {

py::dict bound_dict(const BoundEstimate& b) {
  py::dict d;
  d["value"] = b.value;
  d["jackknife_variance"] = b.jackknife_variance;
  d["loo_values"] = b.loo_values;
  if (b.ci) d["ci"] = py::make_tuple(b.ci->low, b.ci->high);
  return d;
}

py::dict bounds_dict(const BoundSet& b) {
  py::dict d;
  d["upper"] = bound_dict(b.upper);
  d["lower"] = bound_dict(b.lower);
  d["lower_squared"] = bound_dict(b.lower_squared);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Empirical Wasserstein bounds for MCMC convergence";

  py::register_exception<NumericalError>(m, "NumericalError");

  py::class_<AssignmentSolution>(m, "AssignmentSolution")
      .def_readonly("row_to_col", &AssignmentSolution::row_to_col)
      .def_readonly("row_duals", &AssignmentSolution::row_duals)
      .def_readonly("col_duals", &AssignmentSolution::col_duals)
      .def_readonly("objective", &AssignmentSolution::objective);

  m.def(
      "solve_assignment", [](const RowMatrix& costs) { return solve_assignment(CostMatrix(costs)); }, py::arg("costs"),
      "Minimum mean-cost perfect matching of a square cost matrix.");

  m.def(
      "flapjack",
      [](const RowMatrix& costs, std::size_t workers) {
        const LeaveOneOutCosts loo = flapjack(CostMatrix(costs), workers);
        return py::make_tuple(loo.full_cost, loo.loo_costs);
      },
      py::arg("costs"), py::arg("workers") = 1,
      "Full optimum and every paired leave-one-out optimum, as (cost, loo_costs).");

  m.def(
      "w2_squared", [](const RowMatrix& a, const RowMatrix& b) { return w2_squared(EmpiricalMeasure(a), EmpiricalMeasure(b)).cost; },
      py::arg("a"), py::arg("b"));
  m.def(
      "w2_squared_1d",
      [](const RowMatrix& a, const RowMatrix& b) { return w2_squared_1d(EmpiricalMeasure(a), EmpiricalMeasure(b)); },
      py::arg("a"), py::arg("b"));

  m.def(
      "estimate_bounds",
      [](const RowMatrix& nu, const RowMatrix& mu, const RowMatrix& mu_prime, double alpha, std::size_t workers) {
        BoundSet b = estimate_bounds(EmpiricalMeasure(nu), EmpiricalMeasure(mu), EmpiricalMeasure(mu_prime), workers);
        attach_intervals(b, alpha);
        return bounds_dict(b);
      },
      py::arg("nu"), py::arg("mu"), py::arg("mu_prime"), py::arg("alpha") = 0.05, py::arg("workers") = 1,
      "Upper bound on W2^2(nu, mu) and lower bounds on W2, each with jackknife variance and interval.");

  m.def(
      "jackknife_variance", [](const Eigen::VectorXd& loo) { return jackknife_variance(loo).variance; },
      py::arg("loo_values"));

  m.def(
      "w2_squared_gaussian",
      [](const Eigen::VectorXd& m1, const Eigen::MatrixXd& c1, const Eigen::VectorXd& m2, const Eigen::MatrixXd& c2) {
        return w2_squared_gaussian(GaussianDist(m1, c1), GaussianDist(m2, c2));
      },
      py::arg("mean_a"), py::arg("cov_a"), py::arg("mean_b"), py::arg("cov_b"));
  m.def(
      "check_cot_gaussian",
      [](const Eigen::MatrixXd& cov_nu, const Eigen::MatrixXd& cov_mu) {
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cov_nu.rows());
        return check_cot_gaussian(GaussianDist(zero, cov_nu), GaussianDist(zero, cov_mu));
      },
      py::arg("cov_nu"), py::arg("cov_mu"));
  m.def(
      "ula_stationary_cov",
      [](const Eigen::MatrixXd& cov, double h) {
        return ula_stationary(GaussianDist(Eigen::VectorXd::Zero(cov.rows()), cov), h).cov();
      },
      py::arg("cov"), py::arg("h"));

  m.def(
      "gibbs_ar1_exact",
      [](Index dim, double rho, double scale, std::vector<std::int64_t> iterations) {
        const Target target = target_ar1_circulant(dim, rho);
        const GaussianDist pi0(target.gaussian->mean(), scale * target.gaussian->cov());
        const auto dyn = GaussianChainDynamics::gibbs(*target.gaussian, coordinate_blocks(dim));
        std::vector<double> out;
        for (std::int64_t t : iterations) out.push_back(w2_squared_gaussian(dyn.marginal_at(pi0, t), *target.gaussian));
        return out;
      },
      py::arg("dim"), py::arg("rho"), py::arg("scale"), py::arg("iterations"),
      "Exact W2^2(pi_t, pi) for the coordinate Gibbs sampler on the circulant AR(1) target started at scale * cov.");

  m.def(
      "ensemble_bounds",
      [](const std::string& kernel, double step, Index dim, Index n_chains, std::int64_t horizon, std::int64_t thin,
         std::int64_t reference_iteration, std::vector<std::int64_t> asymptote, double initial_variance,
         std::uint64_t seed, double alpha) {
        const Target target = target_ar1_covariance(dim);
        EnsembleConfig cfg{parse_kernel(kernel), step, n_chains, horizon, thin, seed, 1};
        const ChainEnsemble ens = run_ensemble(target, cfg, isotropic_initial(dim, initial_variance));
        const auto traj = convergence_bounds(ens, reference_iteration, asymptote, alpha);
        py::list rows;
        for (std::size_t i = 0; i < traj.iterations.size(); ++i) {
          py::dict row = bounds_dict(traj.bounds[i]);
          row["t"] = traj.iterations[i];
          rows.append(row);
        }
        return rows;
      },
      py::arg("kernel"), py::arg("step"), py::arg("dim"), py::arg("n_chains"), py::arg("horizon"), py::arg("thin"),
      py::arg("reference_iteration"), py::arg("asymptote"), py::arg("initial_variance") = 3.0, py::arg("seed") = 1,
      py::arg("alpha") = 0.05,
      "Bound trajectory for chains on the AR(1)-covariance Gaussian target started from N(0, v I).");
}
