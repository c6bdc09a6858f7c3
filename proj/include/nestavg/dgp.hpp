#ifndef NESTAVG_DGP_HPP
#define NESTAVG_DGP_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nestavg/nested_projection.hpp"

namespace nestavg {

/// Simulation scenarios: the three-covariate toy model, a fixed true
/// dimension, and two diverging-dimension designs; `custom` is user supplied.
enum class ScenarioName { toy, fixed, div1, div2, custom };

std::string to_string(ScenarioName name);
ScenarioName scenario_from_string(const std::string& text);

struct ScenarioSpec {
  ScenarioName name = ScenarioName::custom;
  int n = 0;
  double rho = 0.0;
  std::optional<double> r2;  ///< target population R^2; unset when sigma2 is given directly
  double sigma2 = 1.0;
  std::vector<double> beta;  ///< beta_j for j = 1..k_{M0+1}; zero beyond
  std::vector<int> sizes;    ///< k_1 < ... < k_M
  int m0 = 0;                ///< true model is M0 + 1

  int num_models() const noexcept { return static_cast<int>(sizes.size()); }
  int max_size() const noexcept { return sizes.empty() ? 0 : sizes.back(); }
};

/// Checks the truth-window invariants and derives nothing; throws ArgumentError.
void validate(const ScenarioSpec& spec);

/// Smallest M0 such that beta vanishes beyond k_{M0+1}. Throws if it is 0 or
/// leaves no over-fitted model.
int derive_m0(std::span<const double> beta, const std::vector<int>& sizes);

struct GeneratedData {
  Matrix x;
  Vector mu;
  Vector y;
  double sigma2 = 0.0;
  ScenarioSpec spec;
};

using Rng = std::mt19937_64;

/// n x p rows of a stationary Gaussian AR(1) with corr(x_k, x_l) = rho^|k-l|.
Matrix gen_covariates(int n, int p, double rho, Rng& rng);

/// sigma^2 such that beta' Sigma beta / (beta' Sigma beta + sigma^2) = r2.
double sigma2_from_r2(std::span<const double> beta, double rho, double r2);

/// Builds a named scenario. `r2` is required except for `toy`, which must not
/// receive one. `rho` overrides the scenario default (0.5; toy uses 0).
ScenarioSpec make_scenario(ScenarioName name, int n, std::optional<double> r2,
                           std::optional<double> rho = std::nullopt);

/// User-defined scenario; exactly one of r2 / sigma2 must be set.
ScenarioSpec make_custom_scenario(int n, std::vector<double> beta, std::vector<int> sizes,
                                  double rho, std::optional<double> r2,
                                  std::optional<double> sigma2);

/// 64-bit stream seed for replication `rep_index` (splitmix64 of the pair).
std::uint64_t rep_seed(std::uint64_t master_seed, std::uint64_t rep_index);

/// One replication: covariates row by row, then errors, from a rep-local engine.
GeneratedData generate(const ScenarioSpec& spec, std::uint64_t rep_index,
                       std::uint64_t master_seed);

}  // namespace nestavg

#endif  // NESTAVG_DGP_HPP
