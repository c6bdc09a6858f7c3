#include <doctest.h>

#include <cmath>

#include "nestavg/dgp.hpp"
#include "nestavg/errors.hpp"
#include "nestavg/objectives.hpp"

using namespace nestavg;

TEST_CASE("scenario shapes") {
  const ScenarioSpec fixed = make_scenario(ScenarioName::fixed, 100, 0.5);
  CHECK(fixed.num_models() == 11);
  CHECK(fixed.m0 == 4);
  CHECK(fixed.rho == 0.5);

  const ScenarioSpec d1 = make_scenario(ScenarioName::div1, 1000, 0.5);
  REQUIRE(d1.num_models() == 9);
  CHECK(d1.sizes.front() == 17);
  CHECK(d1.sizes.back() == 25);
  CHECK(d1.m0 == 3);
  CHECK(d1.beta.size() == 20);
  CHECK(d1.beta.back() == 1.0);

  const ScenarioSpec d2 = make_scenario(ScenarioName::div2, 1000, 0.5);
  REQUIRE(d2.num_models() == 9);
  CHECK(d2.sizes.front() == 1);
  CHECK(d2.m0 == 5);
  CHECK(d2.beta.back() == doctest::Approx(5.0 / std::log(std::log(1000.0))));

  const ScenarioSpec toy = make_scenario(ScenarioName::toy, 50, std::nullopt);
  CHECK(toy.sizes == std::vector<int>{1, 2, 3});
  CHECK(toy.m0 == 1);
  CHECK(toy.sigma2 == 1.0);
  CHECK(toy.rho == 0.0);
}

TEST_CASE("scenario arguments are validated") {
  CHECK_THROWS_AS((void)make_scenario(ScenarioName::fixed, 11, 0.5), ArgumentError);
  CHECK_THROWS_AS((void)make_scenario(ScenarioName::fixed, 100, std::nullopt), ArgumentError);
  CHECK_THROWS_AS((void)make_scenario(ScenarioName::toy, 100, 0.5), ArgumentError);
  CHECK_THROWS_AS((void)make_scenario(ScenarioName::toy, 3, std::nullopt), ArgumentError);
  CHECK_THROWS_AS((void)make_scenario(ScenarioName::div1, 8, 0.5), ArgumentError);
  CHECK_THROWS_AS((void)make_scenario(ScenarioName::fixed, 100, 1.0), ArgumentError);
  CHECK_THROWS_AS((void)make_custom_scenario(100, {1.0}, {1, 2}, 0.0, 0.5, 1.0), ArgumentError);
  // truth is the largest model: no over-fitted candidate
  CHECK_THROWS_AS((void)make_custom_scenario(100, {1.0, 1.0}, {1, 2}, 0.0, std::nullopt, 1.0),
                  ArgumentError);
  const ScenarioSpec c = make_custom_scenario(100, {1.0, 2.0, 0.0}, {1, 2, 4}, 0.2, std::nullopt, 2.0);
  CHECK(c.m0 == 1);
  CHECK(c.sigma2 == 2.0);
  CHECK(c.beta.size() == 2);
}

TEST_CASE("sigma2 from r2 for independent and correlated covariates") {
  const std::vector<double> b{1.0, 2.0};
  CHECK(sigma2_from_r2(b, 0.0, 0.5) == doctest::Approx(5.0));
  // beta' Sigma beta = 1 + 4 + 2*2*0.5 = 7
  CHECK(sigma2_from_r2(b, 0.5, 0.5) == doctest::Approx(7.0));
  CHECK(sigma2_from_r2(b, 0.5, 0.9) == doctest::Approx(7.0 / 9.0));
}

TEST_CASE("replications are reproducible and distinct") {
  const ScenarioSpec spec = make_scenario(ScenarioName::fixed, 60, 0.5);
  const GeneratedData a = generate(spec, 3, 99);
  const GeneratedData b = generate(spec, 3, 99);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  const GeneratedData c = generate(spec, 4, 99);
  CHECK(a.x != c.x);
  const GeneratedData d = generate(spec, 3, 100);
  CHECK(a.y != d.y);
  CHECK(rep_seed(1, 2) != rep_seed(2, 1));
  CHECK(a.x.rows() == 60);
  CHECK(a.x.cols() == 11);
}

TEST_CASE("toy mean function") {
  const ScenarioSpec spec = make_scenario(ScenarioName::toy, 40, std::nullopt);
  const GeneratedData g = generate(spec, 0, 5);
  for (int i = 0; i < 40; ++i) CHECK(g.mu(i) == doctest::Approx(-g.x(i, 0) + 0.1 * g.x(i, 1)));
  CHECK(g.sigma2 == 1.0);
}

TEST_CASE("large-sample moments match the population targets") {
  const ScenarioSpec spec = make_scenario(ScenarioName::fixed, 100000, 0.5);
  const GeneratedData g = generate(spec, 0, 7);
  const double n = 100000.0;
  const double var_mu = g.mu.squaredNorm() / n - std::pow(g.mu.mean(), 2);
  const Vector e = g.y - g.mu;
  const double var_e = e.squaredNorm() / n;
  CHECK(std::abs(var_mu / (var_mu + var_e) - 0.5) < 0.01);
  // AR(1) lag-one and lag-two correlations
  const Vector x0 = g.x.col(0), x1 = g.x.col(1), x2 = g.x.col(2);
  CHECK(std::abs(x0.dot(x1) / n - 0.5) < 0.02);
  CHECK(std::abs(x0.dot(x2) / n - 0.25) < 0.02);
  CHECK(std::abs(x0.squaredNorm() / n - 1.0) < 0.02);
}

TEST_CASE("eta per scenario") {
  const ScenarioSpec fixed = make_scenario(ScenarioName::fixed, 100, 0.5);
  CHECK(eta(fixed.beta, fixed.sizes, fixed.m0) == doctest::Approx(16.0));
  const ScenarioSpec d1 = make_scenario(ScenarioName::div1, 1000, 0.5);
  CHECK(eta(d1.beta, d1.sizes, d1.m0) == doctest::Approx(1.0));
  const ScenarioSpec d2 = make_scenario(ScenarioName::div2, 1000, 0.5);
  CHECK(eta(d2.beta, d2.sizes, d2.m0) ==
        doctest::Approx(std::pow(5.0 / std::log(std::log(1000.0)), 2)));
}

TEST_CASE("covariate generator") {
  Rng rng(3);
  const Matrix x = gen_covariates(5, 0, 0.3, rng);
  CHECK(x.rows() == 5);
  CHECK(x.cols() == 0);
  CHECK_THROWS_AS((void)gen_covariates(5, 2, 1.0, rng), ArgumentError);
}
