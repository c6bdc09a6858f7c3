#include "nestavg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "nestavg/dgp.hpp"
#include "nestavg/montecarlo.hpp"
#include "nestavg/objectives.hpp"
#include "nestavg/simplex_solver.hpp"

namespace nestavg {

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string VerifyReport::format() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-5s %9s %12s %10s\n", "check", "ok", "instances",
                "worst", "tol");
  os << line;
  for (const CheckResult& c : checks) {
    std::snprintf(line, sizeof line, "%-24s %-5s %9d %12.3e %10.1e\n", c.name.c_str(),
                  c.passed ? "PASS" : "FAIL", c.instances, c.worst, c.tolerance);
    os << line;
    if (!c.detail.empty()) os << "    " << c.detail << "\n";
  }
  return os.str();
}

namespace {

struct Instance {
  Matrix x;
  std::vector<int> sizes;
  std::vector<double> beta;
  int m0 = 0;
  Vector mu;
  Vector e;
  Vector y;
  double sigma2 = 1.0;
  double phi = 2.0;
};

// n in [30, 60], 3..8 nested models, truth strictly inside the family.
Instance random_instance(Rng& rng) {
  std::uniform_int_distribution<int> n_dist(30, 60);
  std::uniform_int_distribution<int> m_dist(3, 8);
  std::uniform_int_distribution<int> step(1, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Instance in;
  const int n = n_dist(rng);
  const int num = m_dist(rng);
  int k = 0;
  for (int m = 0; m < num; ++m) {
    k += step(rng);
    in.sizes.push_back(k);
  }
  std::uniform_int_distribution<int> m0_dist(1, num - 2);
  in.m0 = m0_dist(rng);
  in.x = gen_covariates(n, in.sizes.back(), 0.3 * unit(rng), rng);
  const int k_true = in.sizes[static_cast<std::size_t>(in.m0)];
  for (int j = 0; j < k_true; ++j) in.beta.push_back(normal(rng));
  if (in.beta.back() == 0.0) in.beta.back() = 1.0;
  const Eigen::Map<const Vector> b(in.beta.data(), k_true);
  in.mu = in.x.leftCols(k_true) * b;
  in.sigma2 = 0.1 + 4.0 * unit(rng);
  in.e.resize(n);
  for (int i = 0; i < n; ++i) in.e(i) = std::sqrt(in.sigma2) * normal(rng);
  in.y = in.mu + in.e;
  in.phi = 0.5 + 4.0 * unit(rng);
  return in;
}

std::vector<double> random_simplex_point(int num, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(static_cast<std::size_t>(num));
  double s = 0.0;
  for (double& v : w) {
    v = expo(rng);
    s += v;
  }
  for (double& v : w) v /= s;
  return w;
}

// P_m v by an independent least-squares solve on the first k_m columns.
Vector dense_projection(const Matrix& x, int k, const Vector& v) {
  const Matrix xk = x.leftCols(k);
  const Vector coef = xk.colPivHouseholderQr().solve(v);
  return xk * coef;
}

Vector dense_averaged_fit(const Instance& in, std::span<const double> w, const Vector& v) {
  Vector out = Vector::Zero(v.size());
  for (std::size_t m = 0; m < in.sizes.size(); ++m) {
    if (w[m] != 0.0) out += w[m] * dense_projection(in.x, in.sizes[m], v);
  }
  return out;
}

double trace_sq(const std::vector<int>& sizes, std::span<const double> w) {
  double tr = 0.0;
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    for (std::size_t l = 0; l < sizes.size(); ++l) {
      tr += w[m] * w[l] * sizes[std::min(m, l)];
    }
  }
  return tr;
}

double relative_gap(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

void record(CheckResult& check, double violation, const std::string& what) {
  ++check.instances;
  if (!(violation <= check.tolerance)) {
    if (check.passed) check.detail = what;
    check.passed = false;
  }
  if (std::isnan(violation)) {
    check.worst = violation;
  } else if (!std::isnan(check.worst)) {
    check.worst = std::max(check.worst, violation);
  }
}

std::string describe(int instance) { return "instance " + std::to_string(instance); }

}  // namespace

VerifyReport run_verification(std::uint64_t seed, const VerifyOptions& options) {
  CheckResult solver{"isotonic_vs_qp", true, 0, 0.0, 1e-8, {}};
  CheckResult vertex{"vertex_dominance", true, 0, 0.0, 1e-10, {}};
  CheckResult loss_id{"lemma_a1_loss", true, 0, 0.0, 1e-8, {}};
  CheckResult risk_id{"lemma_a1_risk", true, 0, 0.0, 1e-8, {}};
  CheckResult tail_id{"tail_transform", true, 0, 0.0, 1e-8, {}};
  CheckResult a2{"lemma_a2", true, 0, 0.0, 1e-10, {}};
  CheckResult ex1_loss{"example1_loss_weights", true, 0, 0.0, 1e-9, {}};
  CheckResult ex1_risk{"example1_risk_weights", true, 0, 0.0, 1e-9, {}};
  CheckResult idem{"projection_idempotent", true, 0, 0.0, 1e-12, {}};
  CheckResult determinism{"determinism", true, 0, 0.0, 0.0, {}};

  Rng rng(rep_seed(seed, 0));

  for (int i = 0; i < options.instances; ++i) {
    const Instance in = random_instance(rng);
    const NestedDesign design = NestedDesign::factorize(in.x, in.sizes);
    const ProjectionCoefficients c_y = coords(design, in.y);
    const ProjectionCoefficients c_mu = coords(design, in.mu);
    const ProjectionCoefficients c_e = coords(design, in.e);
    const double s2hat = sigma_hat(design, c_y);
    const int num = design.num_models();

    SeparableSimplexObjective objs[] = {build_criterion(design, c_y, in.phi, s2hat),
                                        build_loss(design, c_y, c_mu),
                                        build_risk(design, c_mu, in.sigma2)};
    const SeparableSimplexObjective& obj = objs[i % 3];

    // Exact solver against the generic projected-gradient oracle.
    const SolveReport iso = solve_simplex(obj);
    try {
      const SolveReport qp = solve_generic_qp(obj);
      record(solver, std::abs(iso.objective_value - qp.objective_value),
             describe(i) + " (" + to_string(obj.kind) + ")");
    } catch (const std::exception& ex) {
      record(solver, std::numeric_limits<double>::quiet_NaN(), describe(i) + ": " + ex.what());
    }

    // No vertex or random simplex point does better.
    double worst_vertex = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < num; ++m) {
      std::vector<double> e(static_cast<std::size_t>(num), 0.0);
      e[static_cast<std::size_t>(m)] = 1.0;
      worst_vertex = std::max(worst_vertex, (iso.objective_value - obj.evaluate(e)) /
                                                (1.0 + std::abs(obj.evaluate(e))));
    }
    for (int r = 0; r < 1000; ++r) {
      const std::vector<double> w = random_simplex_point(num, rng);
      worst_vertex = std::max(worst_vertex, (iso.objective_value - obj.evaluate(w)) /
                                                (1.0 + std::abs(obj.evaluate(w))));
    }
    record(vertex, std::max(worst_vertex, 0.0), describe(i));

    // Loss and risk decompositions against dense recomputation.
    const std::vector<double> w = random_simplex_point(num, rng);
    const Vector fit_y = dense_averaged_fit(in, w, in.y);
    const Vector fit_mu = dense_averaged_fit(in, w, in.mu);
    const double dense_loss = (in.mu - fit_y).squaredNorm();
    const double dense_risk = (in.mu - fit_mu).squaredNorm() + in.sigma2 * trace_sq(in.sizes, w);
    record(loss_id, relative_gap(loss_decomposition(design, c_y, c_e, in.m0, w), dense_loss),
           describe(i));
    record(risk_id, relative_gap(risk_decomposition(design, c_mu, in.sigma2, in.m0, w), dense_risk),
           describe(i));

    // Tail-weight form against the w-space definitions.
    SeparableSimplexObjective crit = objs[0];
    if (options.corrupt_quadratic_sign) crit.quad = -crit.quad;
    double sum_wk = 0.0;
    for (int m = 0; m < num; ++m) sum_wk += w[static_cast<std::size_t>(m)] * in.sizes[static_cast<std::size_t>(m)];
    const double dense_crit = (in.y - fit_y).squaredNorm() + in.phi * s2hat * sum_wk;
    double tail_gap = relative_gap(crit.evaluate(w), dense_crit);
    tail_gap = std::max(tail_gap, relative_gap(objs[1].evaluate(w), dense_loss));
    tail_gap = std::max(tail_gap, relative_gap(objs[2].evaluate(w), dense_risk));
    record(tail_id, tail_gap, describe(i));

    // Simplex projection is idempotent.
    Vector v(num);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int m = 0; m < num; ++m) v(m) = normal(rng);
    const Vector p1 = project_to_simplex(v);
    const Vector p2 = project_to_simplex(p1);
    const Vector q1 = design.project(in.y, 1 + i % num);
    const Vector q2 = design.project(q1, 1 + i % num);
    record(idem,
           std::max((p1 - p2).lpNorm<Eigen::Infinity>(),
                    (q1 - q2).lpNorm<Eigen::Infinity>() / (1.0 + q1.lpNorm<Eigen::Infinity>())),
           describe(i));
  }

  // Lower eigenvalue bound on the under-fitting signal.
  for (int i = 0; i < options.lemma_a2_instances; ++i) {
    const Instance in = random_instance(rng);
    const NestedDesign design = NestedDesign::factorize(in.x, in.sizes);
    const ProjectionCoefficients c_mu = coords(design, in.mu);
    for (int m = 1; m <= in.m0; ++m) {
      const InequalitySides s = lemma_a2_gap(design, c_mu, in.beta, in.m0, m);
      record(a2, std::max(0.0, (s.rhs - s.lhs) / (1.0 + std::abs(s.rhs))),
             describe(i) + " m=" + std::to_string(m));
    }
  }

  // Toy closed forms on orthonormalized covariates (column norms sqrt(n)).
  {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> n_dist(20, 400);
    for (int i = 0; i < options.instances / 5; ++i) {
      const int n = n_dist(rng);
      const Matrix g = gen_covariates(n, 3, 0.0, rng);
      Eigen::HouseholderQR<Matrix> qr(g);
      const Matrix x = std::sqrt(static_cast<double>(n)) *
                       (qr.householderQ() * Matrix::Identity(n, 3));
      const double beta2 = (i % 2 == 0) ? 0.1 : 0.1 + 0.5 * std::abs(normal(rng));
      const Vector mu = -1.0 * x.col(0) + beta2 * x.col(1);
      const double sigma2 = 1.0;
      Vector e(n);
      for (int r = 0; r < n; ++r) e(r) = normal(rng);
      const Vector y = mu + e;
      const NestedDesign design = NestedDesign::factorize(x, {1, 2, 3});
      const ProjectionCoefficients c_y = coords(design, y);
      const ProjectionCoefficients c_mu = coords(design, mu);

      const double s = x.col(1).dot(e);
      const double nd = static_cast<double>(n);
      const double w1_opt = (s * s / nd + beta2 * s) / ((nd * beta2 + s) * (nd * beta2 + s) / nd);
      const double w1 = std::clamp(w1_opt, 0.0, 1.0);
      const SolveReport wl = solve_simplex(build_loss(design, c_y, c_mu));
      record(ex1_loss,
             std::max({std::abs(wl.weights.w[0] - w1), std::abs(wl.weights.w[1] - (1.0 - w1)),
                       std::abs(wl.weights.w[2])}),
             describe(i));

      const double w1r = sigma2 / (nd * beta2 * beta2 + sigma2);
      const SolveReport wr = solve_simplex(build_risk(design, c_mu, sigma2));
      record(ex1_risk,
             std::max({std::abs(wr.weights.w[0] - w1r), std::abs(wr.weights.w[1] - (1.0 - w1r)),
                       std::abs(wr.weights.w[2])}),
             describe(i));
    }
  }

  // Summary tables agree bit for bit across thread budgets.
  {
    const std::vector<ScenarioSpec> grid{make_scenario(ScenarioName::toy, 60, std::nullopt),
                                         make_scenario(ScenarioName::fixed, 40, 0.5)};
    const ExperimentResult one = run_experiment(grid, 12, seed, 1);
    const ExperimentResult four = run_experiment(grid, 12, seed, 4);
    bool same = one.table.size() == four.table.size();
    for (std::size_t r = 0; same && r < one.table.size(); ++r) {
      same = one.table[r].mean == four.table[r].mean && one.table[r].mc_se == four.table[r].mc_se;
    }
    record(determinism, same ? 0.0 : 1.0, "thread budgets 1 and 4 disagree");
  }

  VerifyReport report;
  report.checks = {solver, vertex, loss_id, risk_id, tail_id, a2, ex1_loss, ex1_risk, idem,
                   determinism};
  return report;
}

}  // namespace nestavg
