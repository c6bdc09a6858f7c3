#include "nestavg/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "nestavg/errors.hpp"
#include "nestavg/stats.hpp"

namespace nestavg {

Penalty Penalty::numeric(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ArgumentError("numeric penalty factor must be positive and finite");
  }
  return {Kind::numeric, value};
}

Penalty Penalty::parse(const std::string& text) {
  if (text == "mma") return mma();
  if (text == "logn") return logn();
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ArgumentError("penalty must be mma, logn or a positive number, got '" + text + "'");
  }
  return numeric(value);
}

double Penalty::resolve(int n) const {
  switch (kind) {
    case Kind::mma:
      return 2.0;
    case Kind::logn:
      return std::log(static_cast<double>(n));
    case Kind::numeric:
      return value;
  }
  return value;
}

std::string Penalty::label() const {
  switch (kind) {
    case Kind::mma:
      return "mma";
    case Kind::logn:
      return "logn";
    case Kind::numeric: {
      std::ostringstream os;
      os << "phi=" << value;
      return os.str();
    }
  }
  return "phi";
}

WeightSetRequest WeightSetRequest::parse(const std::string& text) {
  WeightSetRequest req;
  if (text == "simplex") return req;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ArgumentError("bad number in weight set '" + text + "'");
    return v;
  };
  if (text.rfind("discrete:", 0) == 0) {
    const double grid = number(text.substr(9));
    if (grid < 1 || grid != std::floor(grid)) {
      throw ArgumentError("discrete weight set needs an integer N >= 1");
    }
    req.kind = WeightSet::Kind::discrete;
    req.grid = static_cast<int>(grid);
    return req;
  }
  if (text.rfind("restricted:", 0) == 0) {
    const std::string body = text.substr(11);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw ArgumentError("restricted weight set is restricted:delta,tau0");
    req.kind = WeightSet::Kind::restricted;
    req.delta = number(body.substr(0, comma));
    req.tau0 = number(body.substr(comma + 1));
    if (!(req.delta > 0.0) || !(req.tau0 > 0.0)) {
      throw ArgumentError("restricted weight set needs delta > 0 and tau0 > 0");
    }
    return req;
  }
  throw ArgumentError("unknown weight set '" + text + "' (simplex|discrete:N|restricted:delta,tau0)");
}

std::string WeightSetRequest::label() const {
  WeightSet s;
  s.kind = kind;
  s.grid = grid;
  s.delta = delta;
  s.tau0 = tau0;
  return s.label();
}

const EstimatorOutcome& RepOutcome::estimator(const std::string& label) const {
  for (const auto& e : estimators) {
    if (e.label == label) return e;
  }
  throw ArgumentError("no estimator labelled '" + label + "'");
}

namespace {

double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

SolveReport solve_over(const SeparableSimplexObjective& obj, const WeightSetRequest& req,
                       const ScenarioSpec& spec) {
  switch (req.kind) {
    case WeightSet::Kind::simplex:
      return solve_simplex(obj);
    case WeightSet::Kind::discrete:
      return solve_discrete(obj, req.grid);
    case WeightSet::Kind::restricted:
      return solve_restricted(obj, req.delta, req.tau0, spec.m0, spec.n);
  }
  return solve_simplex(obj);
}

}  // namespace

RepOutcome run_rep(const ScenarioSpec& spec, std::uint64_t rep_index,
                   std::uint64_t master_seed, const RunOptions& options) {
  try {
    const GeneratedData data = generate(spec, rep_index, master_seed);
    const NestedDesign design = NestedDesign::factorize(data.x, spec.sizes);
    const ProjectionCoefficients c_y = coords(design, data.y);
    const ProjectionCoefficients c_mu = coords(design, data.mu);
    const double s2hat = sigma_hat(design, c_y);

    const SeparableSimplexObjective loss = build_loss(design, c_y, c_mu);
    const SeparableSimplexObjective risk = build_risk(design, c_mu, data.sigma2);
    const int num = design.num_models();
    const int truth = std::clamp(spec.m0 + 1, 1, num);
    std::vector<double> vertex(static_cast<std::size_t>(num), 0.0);
    vertex[static_cast<std::size_t>(truth - 1)] = 1.0;

    RepOutcome out;
    out.rep_index = rep_index;
    const SolveReport w_loss = solve_simplex(loss);
    const SolveReport w_risk = solve_simplex(risk);
    out.w_loss = w_loss.weights.w;
    out.w_risk = w_risk.weights.w;
    out.loss_true = loss.evaluate(vertex);
    out.risk_true = risk.evaluate(vertex);
    // The inf can only be attained below the vertex value.
    out.loss_inf = std::min(w_loss.objective_value, out.loss_true);
    out.risk_inf = std::min(w_risk.objective_value, out.risk_true);
    out.loss_ratio_true = safe_ratio(out.loss_true, out.loss_inf);
    out.risk_ratio_true = safe_ratio(out.risk_true, out.risk_inf);
    out.loss_ratio_optimal_inverse = safe_ratio(out.loss_inf, out.loss_true);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < vertex.size(); ++i) {
      max_dev = std::max(max_dev, std::abs(out.w_loss[i] - vertex[i]));
    }
    out.wl_equals_true = max_dev <= 1e-10;

    for (const Penalty& phi : options.phis) {
      const SeparableSimplexObjective crit =
          build_criterion(design, c_y, phi.resolve(spec.n), s2hat);
      for (const WeightSetRequest& req : options.weight_sets) {
        const SolveReport sel = solve_over(crit, req, spec);
        EstimatorOutcome est;
        est.label = phi.label();
        if (req.kind != WeightSet::Kind::simplex) est.label += "@" + req.label();
        est.weights = sel.weights.w;
        est.loss_ratio = safe_ratio(loss.evaluate(est.weights), out.loss_inf);
        est.risk_ratio = safe_ratio(risk.evaluate(est.weights), out.risk_inf);
        out.estimators.push_back(std::move(est));
      }
    }
    for (const WeightSetRequest& req : options.weight_sets) {
      if (req.kind == WeightSet::Kind::simplex) continue;
      const SolveReport inf = solve_over(loss, req, spec);
      SetOutcome so;
      so.label = req.label();
      so.inf_loss = std::min(inf.objective_value, out.loss_true);
      so.attained_at_true = inf.objective_value >= out.loss_true * (1.0 - 1e-10);
      out.sets.push_back(std::move(so));
    }
    return out;
  } catch (const std::exception& ex) {
    throw std::runtime_error("rep " + std::to_string(rep_index) + ": " + ex.what());
  }
}

SummaryTable summarize(const CellResult& cell) {
  SummaryTable table;
  if (cell.outcomes.empty()) return table;
  const auto reps = static_cast<int>(cell.outcomes.size());
  auto emit = [&](const std::string& estimator, const std::string& metric, auto getter) {
    std::vector<double> values;
    values.reserve(cell.outcomes.size());
    for (const RepOutcome& o : cell.outcomes) values.push_back(getter(o));
    const MeanSe ms = mean_and_se(values);
    table.push_back({to_string(cell.spec.name), cell.spec.r2, cell.spec.n, estimator, metric,
                     ms.mean, ms.se, reps});
  };

  emit("true", "loss_ratio", [](const RepOutcome& o) { return o.loss_ratio_true; });
  emit("true", "risk_ratio", [](const RepOutcome& o) { return o.risk_ratio_true; });
  const RepOutcome& first = cell.outcomes.front();
  for (std::size_t e = 0; e < first.estimators.size(); ++e) {
    const std::string& label = first.estimators[e].label;
    emit(label, "loss_ratio", [e](const RepOutcome& o) { return o.estimators[e].loss_ratio; });
    emit(label, "risk_ratio", [e](const RepOutcome& o) { return o.estimators[e].risk_ratio; });
  }
  emit("oracle_loss", "equals_true",
       [](const RepOutcome& o) { return o.wl_equals_true ? 1.0 : 0.0; });
  emit("oracle_loss", "inf_over_true",
       [](const RepOutcome& o) { return o.loss_ratio_optimal_inverse; });
  for (std::size_t s = 0; s < first.sets.size(); ++s) {
    emit("inf@" + first.sets[s].label, "attained_at_true",
         [s](const RepOutcome& o) { return o.sets[s].attained_at_true ? 1.0 : 0.0; });
  }
  return table;
}

ExperimentResult run_experiment(const std::vector<ScenarioSpec>& grid, int reps,
                                std::uint64_t master_seed, int threads,
                                const RunOptions& options) {
  if (reps < 1) throw ArgumentError("reps must be >= 1");
  ExperimentResult result;
  result.cells.resize(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    result.cells[c].spec = grid[c];
    result.cells[c].outcomes.resize(static_cast<std::size_t>(reps));
  }

  const std::size_t total = grid.size() * static_cast<std::size_t>(reps);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::size_t error_task = total;
  std::string error_message;

  auto worker = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::size_t task = next.fetch_add(1);
      if (task >= total) return;
      const std::size_t cell = task / static_cast<std::size_t>(reps);
      const std::size_t rep = task % static_cast<std::size_t>(reps);
      try {
        result.cells[cell].outcomes[rep] = run_rep(grid[cell], rep, master_seed, options);
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (task < error_task) {
          error_task = task;
          error_message = "scenario " + to_string(grid[cell].name) + " n=" +
                          std::to_string(grid[cell].n) + ", " + ex.what();
        }
        failed.store(true);
      }
    }
  };

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(total)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error("experiment aborted: " + error_message);

  for (const CellResult& cell : result.cells) {
    SummaryTable rows = summarize(cell);
    result.table.insert(result.table.end(), rows.begin(), rows.end());
  }
  return result;
}

}  // namespace nestavg
