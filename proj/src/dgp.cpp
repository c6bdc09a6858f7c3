#include "nestavg/dgp.hpp"

#include <cmath>
#include <sstream>

#include "nestavg/errors.hpp"

namespace nestavg {

std::string to_string(ScenarioName name) {
  switch (name) {
    case ScenarioName::toy:
      return "toy";
    case ScenarioName::fixed:
      return "fixed";
    case ScenarioName::div1:
      return "div1";
    case ScenarioName::div2:
      return "div2";
    case ScenarioName::custom:
      return "custom";
  }
  return "custom";
}

ScenarioName scenario_from_string(const std::string& text) {
  if (text == "toy") return ScenarioName::toy;
  if (text == "fixed") return ScenarioName::fixed;
  if (text == "div1") return ScenarioName::div1;
  if (text == "div2") return ScenarioName::div2;
  if (text == "custom") return ScenarioName::custom;
  throw ArgumentError("unknown scenario '" + text + "' (toy|fixed|div1|div2|custom)");
}

int derive_m0(std::span<const double> beta, const std::vector<int>& sizes) {
  if (sizes.empty()) throw ArgumentError("scenario needs at least one model");
  int last_nonzero = 0;  // 1-based index of the last nonzero coefficient
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) last_nonzero = static_cast<int>(j) + 1;
  }
  if (last_nonzero == 0) throw ArgumentError("all coefficients are zero");
  int truth = 0;
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    if (sizes[m] >= last_nonzero) {
      truth = static_cast<int>(m) + 1;
      break;
    }
  }
  if (truth == 0) {
    throw ArgumentError("no candidate model contains all nonzero coefficients");
  }
  const int m0 = truth - 1;
  if (m0 < 1) throw ArgumentError("scenario needs at least one under-fitted model (M0 >= 1)");
  if (static_cast<int>(sizes.size()) <= m0 + 1) {
    throw ArgumentError("scenario needs at least one over-fitted model (M > M0 + 1)");
  }
  return m0;
}

void validate(const ScenarioSpec& spec) {
  if (spec.sizes.empty()) throw ArgumentError("scenario has no models");
  for (std::size_t i = 0; i < spec.sizes.size(); ++i) {
    if (spec.sizes[i] < 1 || (i > 0 && spec.sizes[i] <= spec.sizes[i - 1])) {
      throw ArgumentError("nesting sizes must be positive and strictly increasing");
    }
  }
  if (spec.max_size() >= spec.n) {
    throw ArgumentError("n=" + std::to_string(spec.n) + " must exceed largest model size " +
                        std::to_string(spec.max_size()));
  }
  if (!(std::abs(spec.rho) < 1.0)) throw ArgumentError("|rho| must be < 1");
  if (!(spec.sigma2 > 0.0)) throw ArgumentError("sigma2 must be positive");
  const int m0 = derive_m0(spec.beta, spec.sizes);
  if (m0 != spec.m0) {
    throw ArgumentError("declared M0=" + std::to_string(spec.m0) +
                        " differs from derived M0=" + std::to_string(m0));
  }
  if (static_cast<int>(spec.beta.size()) > spec.max_size()) {
    throw ArgumentError("more coefficients than covariates in the largest model");
  }
}

Matrix gen_covariates(int n, int p, double rho, Rng& rng) {
  if (!(std::abs(rho) < 1.0)) throw ArgumentError("|rho| must be < 1");
  if (n < 0 || p < 0) throw ArgumentError("dimensions must be nonnegative");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation = std::sqrt(1.0 - rho * rho);
  Matrix x(n, p);
  for (int i = 0; i < n; ++i) {
    double prev = 0.0;
    for (int j = 0; j < p; ++j) {
      const double z = normal(rng);
      prev = (j == 0) ? z : rho * prev + innovation * z;
      x(i, j) = prev;
    }
  }
  return x;
}

double sigma2_from_r2(std::span<const double> beta, double rho, double r2) {
  if (!(r2 > 0.0 && r2 < 1.0)) throw ArgumentError("r2 must lie in (0, 1)");
  if (!(std::abs(rho) < 1.0)) throw ArgumentError("|rho| must be < 1");
  double var_mu = 0.0;
  for (std::size_t k = 0; k < beta.size(); ++k) {
    for (std::size_t l = 0; l < beta.size(); ++l) {
      const auto lag = static_cast<double>(k > l ? k - l : l - k);
      var_mu += beta[k] * beta[l] * std::pow(rho, lag);
    }
  }
  if (!(var_mu > 0.0)) throw ArgumentError("beta must not be all zero");
  return var_mu * (1.0 - r2) / r2;
}

namespace {

void require_r2(ScenarioName name, const std::optional<double>& r2) {
  if (!r2) throw ArgumentError("scenario " + to_string(name) + " requires r2");
}

void require_n(bool ok, ScenarioName name, int n, const std::string& bound) {
  if (!ok) {
    throw ArgumentError("n=" + std::to_string(n) + " too small for scenario " +
                        to_string(name) + ": needs " + bound);
  }
}

}  // namespace

ScenarioSpec make_scenario(ScenarioName name, int n, std::optional<double> r2,
                           std::optional<double> rho) {
  ScenarioSpec spec;
  spec.name = name;
  spec.n = n;
  switch (name) {
    case ScenarioName::toy: {
      if (r2) throw ArgumentError("the toy scenario fixes sigma2 = 1 and takes no r2");
      require_n(n > 3, name, n, "n > 3");
      spec.rho = rho.value_or(0.0);
      spec.beta = {-1.0, 0.1};
      spec.sizes = {1, 2, 3};
      spec.sigma2 = 1.0;
      break;
    }
    case ScenarioName::fixed: {
      require_r2(name, r2);
      require_n(n > 11, name, n, "n > 11");
      spec.rho = rho.value_or(0.5);
      spec.beta = {1.0, -2.0, 3.0, 1.5, 4.0};
      for (int k = 1; k <= 11; ++k) spec.sizes.push_back(k);
      break;
    }
    case ScenarioName::div1: {
      require_r2(name, r2);
      const int p = static_cast<int>(std::floor(2.0 * std::cbrt(static_cast<double>(n)) + 1e-9));
      require_n(p - 3 >= 1, name, n, "floor(2 n^(1/3)) >= 4");
      require_n(p + 5 < n, name, n, "floor(2 n^(1/3)) + 5 < n");
      spec.rho = rho.value_or(0.5);
      for (int j = 1; j < p; ++j) spec.beta.push_back(1.0 / j);
      spec.beta.push_back(1.0);
      for (int k = p - 3; k <= p + 5; ++k) spec.sizes.push_back(k);
      break;
    }
    case ScenarioName::div2: {
      require_r2(name, r2);
      const double logn = std::log(static_cast<double>(n));
      const int p = static_cast<int>(std::floor(logn + 1e-12));
      require_n(p >= 2 && std::log(logn) > 0.0, name, n, "floor(log n) >= 2");
      require_n(p + 3 < n, name, n, "floor(log n) + 3 < n");
      spec.rho = rho.value_or(0.5);
      for (int j = 1; j < p; ++j) spec.beta.push_back(1.0 / j);
      spec.beta.push_back(5.0 / std::log(logn));
      for (int k = 1; k <= p + 3; ++k) spec.sizes.push_back(k);
      break;
    }
    case ScenarioName::custom:
      throw ArgumentError("custom scenarios are built with make_custom_scenario");
  }
  if (r2) {
    spec.r2 = r2;
    spec.sigma2 = sigma2_from_r2(spec.beta, spec.rho, *r2);
  }
  spec.m0 = derive_m0(spec.beta, spec.sizes);
  validate(spec);
  return spec;
}

ScenarioSpec make_custom_scenario(int n, std::vector<double> beta, std::vector<int> sizes,
                                  double rho, std::optional<double> r2,
                                  std::optional<double> sigma2) {
  if (r2.has_value() == sigma2.has_value()) {
    throw ArgumentError("custom scenario needs exactly one of r2 or sigma2");
  }
  while (!beta.empty() && beta.back() == 0.0) beta.pop_back();
  ScenarioSpec spec;
  spec.name = ScenarioName::custom;
  spec.n = n;
  spec.rho = rho;
  spec.beta = std::move(beta);
  spec.sizes = std::move(sizes);
  spec.r2 = r2;
  spec.sigma2 = r2 ? sigma2_from_r2(spec.beta, rho, *r2) : *sigma2;
  spec.m0 = derive_m0(spec.beta, spec.sizes);
  validate(spec);
  return spec;
}

std::uint64_t rep_seed(std::uint64_t master_seed, std::uint64_t rep_index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master_seed) ^ (rep_index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

GeneratedData generate(const ScenarioSpec& spec, std::uint64_t rep_index,
                       std::uint64_t master_seed) {
  Rng rng(rep_seed(master_seed, rep_index));
  GeneratedData data;
  data.spec = spec;
  data.sigma2 = spec.sigma2;
  data.x = gen_covariates(spec.n, spec.max_size(), spec.rho, rng);
  const auto nb = static_cast<Eigen::Index>(spec.beta.size());
  const Eigen::Map<const Vector> beta(spec.beta.data(), nb);
  data.mu = data.x.leftCols(nb) * beta;
  std::normal_distribution<double> normal(0.0, std::sqrt(spec.sigma2));
  data.y.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) data.y(i) = data.mu(i) + normal(rng);
  return data;
}

}  // namespace nestavg
