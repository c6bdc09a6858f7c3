#ifndef NESTAVG_MONTECARLO_HPP
#define NESTAVG_MONTECARLO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nestavg/dgp.hpp"
#include "nestavg/simplex_solver.hpp"

namespace nestavg {

/// Penalty factor phi: `mma` (2), `logn` (natural log of n) or a positive number.
struct Penalty {
  enum class Kind { mma, logn, numeric };
  Kind kind = Kind::mma;
  double value = 2.0;

  static Penalty mma() { return {Kind::mma, 2.0}; }
  static Penalty logn() { return {Kind::logn, 0.0}; }
  static Penalty numeric(double value);
  static Penalty parse(const std::string& text);

  double resolve(int n) const;
  std::string label() const;
};

/// One selected-weight estimator (a penalty over one weight set) in one replication.
struct EstimatorOutcome {
  std::string label;  ///< "mma", "logn", "phi=3" with "@<set>" for non-simplex sets
  std::vector<double> weights;
  double loss_ratio = 1.0;  ///< L_n(w_hat) / inf over the simplex of L_n
  double risk_ratio = 1.0;  ///< R_n(w_hat) / inf over the simplex of R_n
};

/// Oracle loss minimum over a restricted or discrete weight set.
struct SetOutcome {
  std::string label;
  double inf_loss = 0.0;
  bool attained_at_true = false;
};

struct RepOutcome {
  std::uint64_t rep_index = 0;
  double loss_true = 0.0;  ///< L_n(w_{M0+1}^0)
  double loss_inf = 0.0;   ///< inf over the simplex of L_n
  double risk_true = 0.0;
  double risk_inf = 0.0;
  double loss_ratio_true = 1.0;
  double risk_ratio_true = 1.0;
  double loss_ratio_optimal_inverse = 1.0;  ///< inf L_n / L_n(w_{M0+1}^0)
  bool wl_equals_true = false;              ///< w^L = w_{M0+1}^0 in max norm 1e-10
  std::vector<double> w_loss;               ///< w^L
  std::vector<double> w_risk;               ///< w^R
  std::vector<EstimatorOutcome> estimators;
  std::vector<SetOutcome> sets;

  const EstimatorOutcome& estimator(const std::string& label) const;
};

/// Weight sets requested for the criterion; M0 and n are taken from the scenario.
struct WeightSetRequest {
  WeightSet::Kind kind = WeightSet::Kind::simplex;
  int grid = 0;
  double delta = 0.0;
  double tau0 = 0.0;

  static WeightSetRequest parse(const std::string& text);
  std::string label() const;
};

struct RunOptions {
  std::vector<Penalty> phis{Penalty::mma(), Penalty::logn()};
  std::vector<WeightSetRequest> weight_sets{WeightSetRequest{}};
};

RepOutcome run_rep(const ScenarioSpec& spec, std::uint64_t rep_index,
                   std::uint64_t master_seed, const RunOptions& options = {});

struct SummaryRow {
  std::string scenario;
  std::optional<double> r2;
  int n = 0;
  std::string estimator;
  std::string metric;
  double mean = 0.0;
  double mc_se = 0.0;
  int reps = 0;
};

using SummaryTable = std::vector<SummaryRow>;

struct CellResult {
  ScenarioSpec spec;
  std::vector<RepOutcome> outcomes;  ///< indexed by replication
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  SummaryTable table;
};

/// Reduces per-rep outcomes of one cell into summary rows, in rep order.
SummaryTable summarize(const CellResult& cell);

/**
 * Runs `reps` replications of every scenario in `grid` on up to `threads`
 * worker threads. Results land in a rep-indexed buffer and are reduced
 * sequentially, so the output does not depend on the thread count. The first
 * failing replication aborts the run; the error names its rep index.
 */
ExperimentResult run_experiment(const std::vector<ScenarioSpec>& grid, int reps,
                                std::uint64_t master_seed, int threads,
                                const RunOptions& options = {});

}  // namespace nestavg

#endif  // NESTAVG_MONTECARLO_HPP
