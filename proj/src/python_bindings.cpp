#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nestavg/errors.hpp"
#include "nestavg/report.hpp"
#include "nestavg/stats.hpp"
#include "nestavg/verify.hpp"

namespace py = pybind11;
using namespace nestavg;

namespace {

py::dict report_to_dict(const SolveReport& r) {
  py::dict d;
  d["weights"] = r.weights.w;
  d["value"] = r.objective_value;
  d["method"] = to_string(r.method);
  d["kkt_residual"] = r.kkt_residual;
  d["restriction_infeasible"] = r.restriction_infeasible;
  return d;
}

SeparableSimplexObjective make_objective(const Vector& quad, const Vector& lin, double constant) {
  if (quad.size() != lin.size()) throw ArgumentError("quad and lin must have the same length");
  SeparableSimplexObjective obj;
  obj.quad = quad;
  obj.lin = lin;
  obj.constant = constant;
  return obj;
}

ScenarioSpec scenario(const std::string& name, int n, std::optional<double> r2,
                      std::optional<double> rho) {
  return make_scenario(scenario_from_string(name), n, r2, rho);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Least-squares model averaging over nested candidate models";
  m.attr("__version__") = kVersion;

  py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);
  py::register_exception<SolverFailure>(m, "SolverFailure", PyExc_RuntimeError);
  py::register_exception<RankError>(m, "RankError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def(
      "select_weights",
      [](const Matrix& x, const Vector& y, const std::vector<int>& sizes, const std::string& phi,
         const std::string& weight_set, int m0) {
        const Selection s = select_weights(x, y, sizes, Penalty::parse(phi),
                                           WeightSetRequest::parse(weight_set), m0);
        py::dict d;
        d["weights"] = s.weights;
        d["criterion"] = s.criterion;
        d["sigma2_hat"] = s.sigma2_hat;
        d["a"] = s.a;
        d["sizes"] = s.sizes;
        d["method"] = to_string(s.method);
        return d;
      },
      py::arg("x"), py::arg("y"), py::arg("sizes"), py::arg("phi") = "mma",
      py::arg("weight_set") = "simplex", py::arg("m0") = 0,
      "Minimize the penalized criterion over a weight set; returns a dict.");

  m.def(
      "solve_simplex",
      [](const Vector& quad, const Vector& lin, double constant) {
        return report_to_dict(solve_simplex(make_objective(quad, lin, constant)));
      },
      py::arg("quad"), py::arg("lin"), py::arg("constant") = 0.0,
      "Exact minimizer of constant + sum(quad t^2 + lin t) over the simplex (t = tail sums).");
  m.def(
      "solve_generic_qp",
      [](const Vector& quad, const Vector& lin, double constant) {
        return report_to_dict(solve_generic_qp(make_objective(quad, lin, constant)));
      },
      py::arg("quad"), py::arg("lin"), py::arg("constant") = 0.0);
  m.def(
      "solve_discrete",
      [](const Vector& quad, const Vector& lin, int grid, double constant) {
        return report_to_dict(solve_discrete(make_objective(quad, lin, constant), grid));
      },
      py::arg("quad"), py::arg("lin"), py::arg("grid"), py::arg("constant") = 0.0);
  m.def(
      "solve_restricted",
      [](const Vector& quad, const Vector& lin, double delta, double tau0, int m0, int n,
         double constant) {
        return report_to_dict(
            solve_restricted(make_objective(quad, lin, constant), delta, tau0, m0, n));
      },
      py::arg("quad"), py::arg("lin"), py::arg("delta"), py::arg("tau0"), py::arg("m0"),
      py::arg("n"), py::arg("constant") = 0.0);

  m.def(
      "generate",
      [](const std::string& name, int n, std::optional<double> r2, int rep, std::uint64_t seed,
         std::optional<double> rho) {
        const ScenarioSpec spec = scenario(name, n, r2, rho);
        const GeneratedData g = generate(spec, static_cast<std::uint64_t>(rep), seed);
        py::dict d;
        d["x"] = g.x;
        d["y"] = g.y;
        d["mu"] = g.mu;
        d["sigma2"] = g.sigma2;
        d["sizes"] = spec.sizes;
        d["m0"] = spec.m0;
        return d;
      },
      py::arg("scenario"), py::arg("n"), py::arg("r2") = py::none(), py::arg("rep") = 0,
      py::arg("seed") = 20240607, py::arg("rho") = py::none(),
      "One simulated replication as a dict with x, y, mu, sigma2, sizes, m0.");

  m.def(
      "run_experiment",
      [](const std::string& name, const std::vector<int>& n_values,
         std::optional<double> r2, int reps, std::uint64_t seed, int threads,
         const std::vector<std::string>& phis, const std::vector<std::string>& weight_sets) {
        std::vector<ScenarioSpec> grid;
        for (int n : n_values) grid.push_back(scenario(name, n, r2, std::nullopt));
        RunOptions opt;
        opt.phis.clear();
        for (const auto& p : phis) opt.phis.push_back(Penalty::parse(p));
        opt.weight_sets.clear();
        for (const auto& w : weight_sets) opt.weight_sets.push_back(WeightSetRequest::parse(w));
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(grid, reps, seed, threads, opt);
        }
        py::list rows;
        for (const SummaryRow& r : res.table) {
          py::dict d;
          d["scenario"] = r.scenario;
          d["r2"] = r.r2;
          d["n"] = r.n;
          d["estimator"] = r.estimator;
          d["metric"] = r.metric;
          d["mean"] = r.mean;
          d["mc_se"] = r.mc_se;
          d["reps"] = r.reps;
          rows.append(d);
        }
        return rows;
      },
      py::arg("scenario"), py::arg("n"), py::arg("r2") = py::none(), py::arg("reps") = 100,
      py::arg("seed") = 20240607, py::arg("threads") = 1,
      py::arg("phis") = std::vector<std::string>{"mma", "logn"},
      py::arg("weight_sets") = std::vector<std::string>{"simplex"},
      "Replicated experiment; returns the summary rows as dicts.");

  m.def("beta_cdf", &beta_cdf, py::arg("a"), py::arg("b"), py::arg("x"));

  m.def(
      "verify",
      [](std::uint64_t seed, int instances) {
        VerifyOptions opt;
        opt.instances = instances;
        const VerifyReport r = run_verification(seed, opt);
        return py::make_tuple(r.all_passed(), r.format());
      },
      py::arg("seed") = 1, py::arg("instances") = 500,
      "Runs the invariant suite; returns (all_passed, text report).");
}
