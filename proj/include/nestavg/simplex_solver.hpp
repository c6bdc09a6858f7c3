#ifndef NESTAVG_SIMPLEX_SOLVER_HPP
#define NESTAVG_SIMPLEX_SOLVER_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nestavg/objectives.hpp"

namespace nestavg {

/// Which weight set a vector was optimized over.
struct WeightSet {
  enum class Kind { simplex, discrete, restricted };

  Kind kind = Kind::simplex;
  int grid = 0;        ///< N for discrete
  double delta = 0.0;  ///< restricted: under-fit mass is 0 or >= delta n^-tau0
  double tau0 = 0.0;
  int m0 = 0;
  int n = 0;

  static WeightSet simplex() { return {}; }
  static WeightSet discrete(int grid);
  static WeightSet restricted(double delta, double tau0, int m0, int n);

  /// delta * n^-tau0
  double min_underfit_mass() const;
  /// "simplex", "discrete:N", "restricted:delta,tau0"
  std::string label() const;
};

struct WeightVector {
  std::vector<double> w;
  WeightSet set;
};

/// Throws ArgumentError if `wv` violates the invariants of its set tag.
void check_weight_vector(const WeightVector& wv);

enum class SolveMethod { isotonic, generic_qp, enumeration, restricted_two_phase };

std::string to_string(SolveMethod method);

struct SolveReport {
  WeightVector weights;
  double objective_value = 0.0;
  SolveMethod method = SolveMethod::isotonic;
  /// Relative Frank-Wolfe gap (w'g - min over feasible vertices of v'g) / (1 + |f|).
  double kkt_residual = 0.0;
  /// Restricted solve whose lower mass bound is >= 1: only phase (a) was run.
  bool restriction_infeasible = false;
};

/// Weighted antitonic (nonincreasing) least-squares fit by pool-adjacent-violators.
Vector antitonic_regression(const Vector& values, const Vector& weights);

/// Euclidean projection onto the unit simplex (sort-and-threshold).
Vector project_to_simplex(const Vector& v);

/// Exact minimizer over the simplex through the tail transform and PAVA.
SolveReport solve_simplex(const SeparableSimplexObjective& obj);

/**
 * Projected-gradient minimizer in w-space, used as an independent oracle.
 *
 * `tail_caps`, when given, adds t_m <= cap_m (entries >= 1 are inactive).
 * Throws SolverFailure when the KKT residual is still >= 1e-6 at the
 * iteration cap.
 */
SolveReport solve_generic_qp(const SeparableSimplexObjective& obj,
                             const std::optional<Vector>& tail_caps = std::nullopt);

/// Exact minimum over the grid {w : N w_m integer}; lexicographically smallest on ties.
SolveReport solve_discrete(const SeparableSimplexObjective& obj, int grid);

/// Number of points of the discrete grid with M models and denominator N.
double discrete_grid_size(int num_models, int grid);

/// Minimum over the restricted set with under-fit mass 0 or >= delta n^-tau0.
SolveReport solve_restricted(const SeparableSimplexObjective& obj, double delta,
                             double tau0, int m0, int n);

}  // namespace nestavg

#endif  // NESTAVG_SIMPLEX_SOLVER_HPP
