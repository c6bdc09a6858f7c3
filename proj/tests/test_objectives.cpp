#include <doctest.h>

#include <numeric>

#include "nestavg/errors.hpp"
#include "nestavg/objectives.hpp"
#include "nestavg/simplex_solver.hpp"
#include "test_support.hpp"

using namespace nestavg;
using namespace testing_support;

namespace {

struct Case {
  Matrix x;
  std::vector<int> sizes;
  std::vector<double> beta;
  int m0;
  Vector mu, e, y;
  double sigma2;
};

Case make_case(std::mt19937_64& rng, int n, std::vector<int> sizes, int m0, double sigma2 = 1.5) {
  Case c;
  c.x = gaussian(n, sizes.back(), rng);
  c.sizes = std::move(sizes);
  c.m0 = m0;
  const int k = c.sizes[static_cast<std::size_t>(m0)];
  const Vector b = gaussian_vector(k, rng);
  c.beta.assign(b.data(), b.data() + k);
  c.mu = c.x.leftCols(k) * b;
  c.sigma2 = sigma2;
  c.e = gaussian_vector(n, rng, std::sqrt(sigma2));
  c.y = c.mu + c.e;
  return c;
}

double dense_criterion(const Case& c, std::span<const double> w, double phi, double s2) {
  const Matrix p = dense_averaged_hat(c.x, c.sizes, w);
  double wk = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) wk += w[m] * c.sizes[m];
  return (c.y - p * c.y).squaredNorm() + phi * s2 * wk;
}

double dense_loss(const Case& c, std::span<const double> w) {
  const Matrix p = dense_averaged_hat(c.x, c.sizes, w);
  return (c.mu - p * c.y).squaredNorm();
}

double dense_risk(const Case& c, std::span<const double> w) {
  const Matrix p = dense_averaged_hat(c.x, c.sizes, w);
  return (c.mu - p * c.mu).squaredNorm() + c.sigma2 * (p * p).trace();
}

std::vector<double> vertex(int num, int m) {
  std::vector<double> w(static_cast<std::size_t>(num), 0.0);
  w[static_cast<std::size_t>(m - 1)] = 1.0;
  return w;
}

}  // namespace

TEST_CASE("tail weights round trip") {
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  const Vector t = tail_weights(w);
  CHECK(t(0) == doctest::Approx(1.0));
  CHECK(t(1) == doctest::Approx(0.9));
  CHECK(t(3) == doctest::Approx(0.4));
  const Vector back = weights_from_tail(t);
  for (int i = 0; i < 4; ++i) CHECK(back(i) == doctest::Approx(w[static_cast<std::size_t>(i)]));
}

TEST_CASE("criterion: single model and phi = 0 at the largest model") {
  std::mt19937_64 rng(11);
  const Case c = make_case(rng, 30, {3}, 0);
  const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
  const ProjectionCoefficients cy = coords(d, c.y);
  const double s2 = sigma_hat(d, cy);
  const SeparableSimplexObjective g = build_criterion(d, cy, 2.0, s2);
  const double expected = (c.y - dense_hat(c.x, 3) * c.y).squaredNorm() + 2.0 * s2 * 3;
  CHECK(rel(g.evaluate(std::vector<double>{1.0}), expected) < 1e-10);

  const Case c4 = make_case(rng, 30, {1, 2, 4}, 1);
  const NestedDesign d4 = NestedDesign::factorize(c4.x, c4.sizes);
  const ProjectionCoefficients cy4 = coords(d4, c4.y);
  const SeparableSimplexObjective g0 = build_criterion(d4, cy4, 0.0, 1.0);
  CHECK(rel(g0.evaluate(vertex(3, 3)), c4.y.squaredNorm() - quad_form(cy4, 3)) < 1e-12);
  CHECK_THROWS_AS((void)build_criterion(d4, cy4, -1.0, 1.0), ArgumentError);
  CHECK_THROWS_AS((void)build_criterion(d4, cy4, 1.0, -1.0), ArgumentError);
}

TEST_CASE("all three objectives match dense definitions through the tail transform") {
  std::mt19937_64 rng(12);
  for (int n : {30, 40, 80}) {
    for (const std::vector<int>& sizes :
         {std::vector<int>{1, 2, 4}, std::vector<int>{2, 3, 5, 6}, std::vector<int>{1, 2, 3, 5, 7, 9}}) {
      const Case c = make_case(rng, n, sizes, 1);
      const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
      const ProjectionCoefficients cy = coords(d, c.y), cmu = coords(d, c.mu);
      const double s2 = sigma_hat(d, cy);
      const auto g = build_criterion(d, cy, 2.7, s2);
      const auto l = build_loss(d, cy, cmu);
      const auto r = build_risk(d, cmu, c.sigma2);
      for (int k = 0; k < 5; ++k) {
        const auto w = random_simplex(d.num_models(), rng);
        CHECK(rel(g.evaluate(w), dense_criterion(c, w, 2.7, s2)) < 1e-9);
        CHECK(rel(l.evaluate(w), dense_loss(c, w)) < 1e-9);
        CHECK(rel(r.evaluate(w), dense_risk(c, w)) < 1e-9);
      }
      for (int m = 0; m < d.num_models(); ++m) {
        CHECK(r.quad(m) > 0.0);
        CHECK(l.quad(m) >= 0.0);
        CHECK(g.quad(m) >= 0.0);
      }
    }
  }
}

TEST_CASE("gradient matches finite differences") {
  std::mt19937_64 rng(13);
  const Case c = make_case(rng, 40, {1, 2, 3, 5}, 1);
  const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
  const auto g = build_criterion(d, coords(d, c.y), 2.0, 1.0);
  const auto w = random_simplex(4, rng);
  const Vector grad = g.gradient(w);
  for (int i = 0; i < 4; ++i) {
    auto wp = w, wm = w;
    wp[static_cast<std::size_t>(i)] += 1e-6;
    wm[static_cast<std::size_t>(i)] -= 1e-6;
    // evaluate accepts off-simplex points through the tail map
    const double fd = (g.evaluate_tail(tail_weights(wp)) - g.evaluate_tail(tail_weights(wm))) / 2e-6;
    CHECK(grad(i) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("loss vanishes for exact fits") {
  std::mt19937_64 rng(14);
  Case c = make_case(rng, 25, {1, 2, 4}, 1);
  const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
  // mu = y in span of X_M
  const ProjectionCoefficients cmu = coords(d, c.mu);
  const auto l_exact = build_loss(d, cmu, cmu);
  CHECK(std::abs(l_exact.evaluate(vertex(3, 3))) < 1e-10 * c.mu.squaredNorm());
  // e = 0: any weights on models m >= M0+1 fit mu exactly
  CHECK(std::abs(l_exact.evaluate(std::vector<double>{0.0, 0.3, 0.7})) < 1e-10 * c.mu.squaredNorm());
}

TEST_CASE("risk at the true model is sigma^2 k_{M0+1}") {
  std::mt19937_64 rng(15);
  const Case c = make_case(rng, 50, {1, 3, 4, 6}, 1, 2.5);
  const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
  const ProjectionCoefficients cmu = coords(d, c.mu);
  const auto r = build_risk(d, cmu, c.sigma2);
  CHECK(rel(r.evaluate(vertex(4, 2)), 2.5 * 3) < 1e-10);
  CHECK(rel(risk_decomposition(d, cmu, c.sigma2, 1, vertex(4, 2)), 2.5 * 3) < 1e-10);
  CHECK_THROWS_AS((void)build_risk(d, cmu, 0.0), ArgumentError);
}

TEST_CASE("risk agrees with the average loss over fresh errors") {
  std::mt19937_64 rng(16);
  const Case c = make_case(rng, 20, {1, 2, 3}, 1, 1.0);
  const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
  const auto r = build_risk(d, coords(d, c.mu), c.sigma2);
  const std::vector<double> w{0.2, 0.5, 0.3};
  const Matrix p = dense_averaged_hat(c.x, c.sizes, w);
  const Vector bias = c.mu - p * c.mu;
  double sum = 0.0, sumsq = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const Vector e = gaussian_vector(20, rng);
    const double loss = (bias - p * e).squaredNorm();
    sum += loss;
    sumsq += loss * loss;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sumsq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - r.evaluate(w)) < 3.0 * se);
}

TEST_CASE("Example 1 risk closed form on orthonormal covariates") {
  std::mt19937_64 rng(17);
  const int n = 200;
  const Matrix g = gaussian(n, 3, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix x = std::sqrt(double(n)) * (qr.householderQ() * Matrix::Identity(n, 3));
  const Vector mu = -1.0 * x.col(0) + 0.1 * x.col(1);
  const double sigma2 = 1.0;
  const NestedDesign d = NestedDesign::factorize(x, {1, 2, 3});
  const ProjectionCoefficients cmu = coords(d, mu);
  const auto r = build_risk(d, cmu, sigma2);
  const double nb2 = n * 0.01;
  for (double w1 : {0.0, 0.1, 0.5, 0.9}) {
    for (double w3 : {0.0, 0.05}) {
      const std::vector<double> w{w1, 1.0 - w1 - w3, w3};
      const double closed = 2.0 * sigma2 + w1 * w1 * (nb2 + sigma2) - 2.0 * w1 * sigma2 + w3 * w3 * sigma2;
      CHECK(rel(r.evaluate(w), closed) < 1e-10);
      CHECK(rel(risk_decomposition(d, cmu, sigma2, 1, w), closed) < 1e-10);
    }
  }
}

TEST_CASE("Lemma A.1 loss identity, Example 1 rewrite and random instances") {
  std::mt19937_64 rng(18);
  {
    const Case c = make_case(rng, 40, {1, 2, 3}, 1);
    const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
    const ProjectionCoefficients cy = coords(d, c.y), ce = coords(d, c.e);
    const Matrix p1 = dense_hat(c.x, 1), p2 = dense_hat(c.x, 2), p3 = dense_hat(c.x, 3);
    const double l_true = c.e.dot(p2 * c.e);
    CHECK(rel(loss_decomposition(d, cy, ce, 1, vertex(3, 2)), l_true) < 1e-12);
    const std::vector<double> w{0.3, 0.5, 0.2};
    const double newl = l_true + w[0] * w[0] * c.y.dot((p2 - p1) * c.y) -
                        2 * w[0] * c.y.dot((p2 - p1) * c.e) + w[2] * w[2] * c.e.dot((p3 - p2) * c.e);
    CHECK(rel(loss_decomposition(d, cy, ce, 1, w), newl) < 1e-9);
  }
  for (int rep = 0; rep < 30; ++rep) {
    const Case c = make_case(rng, 45, {1, 2, 4, 5, 7, 8}, 1 + rep % 4);
    const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
    const ProjectionCoefficients cy = coords(d, c.y), ce = coords(d, c.e), cmu = coords(d, c.mu);
    const auto l = build_loss(d, cy, cmu);
    const auto r = build_risk(d, cmu, c.sigma2);
    const auto w = random_simplex(6, rng);
    CHECK(rel(loss_decomposition(d, cy, ce, c.m0, w), l.evaluate(w)) < 1e-8);
    CHECK(rel(risk_decomposition(d, cmu, c.sigma2, c.m0, w), r.evaluate(w)) < 1e-8);
  }
  const Case c = make_case(rng, 30, {1, 2, 3}, 1);
  const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
  const auto cy = coords(d, c.y), ce = coords(d, c.e);
  CHECK_THROWS_AS((void)loss_decomposition(d, cy, ce, 2, vertex(3, 1)), ArgumentError);
  CHECK_THROWS_AS((void)loss_decomposition(d, cy, ce, 0, vertex(3, 1)), ArgumentError);
}

TEST_CASE("eta sums the squared coefficients of the truth window") {
  std::vector<int> fixed_sizes(11);
  std::iota(fixed_sizes.begin(), fixed_sizes.end(), 1);
  const std::vector<double> fixed_beta{1, -2, 3, 1.5, 4};
  CHECK(eta(fixed_beta, fixed_sizes, 4) == doctest::Approx(16.0));
  // div1 at n = 1000: p = 20, K = 17..25, M0 = 3, beta_20 = 1
  std::vector<double> div1_beta;
  for (int j = 1; j < 20; ++j) div1_beta.push_back(1.0 / j);
  div1_beta.push_back(1.0);
  std::vector<int> div1_sizes;
  for (int k = 17; k <= 25; ++k) div1_sizes.push_back(k);
  CHECK(eta(div1_beta, div1_sizes, 3) == doctest::Approx(1.0));
  CHECK(eta(std::vector<double>{1, 0, 0}, {1, 2, 3}, 1) == 0.0);
}

TEST_CASE("psi(K) hand computation and single model") {
  // sizes (1,2,4), M0 = 1, increments (2,1,0):
  // 1 + 1/4 + 2/8 + 2/(4*1) = 2, times (1 + log 3)^2
  const double expected = 2.0 * std::pow(1.0 + std::log(3.0), 2);
  CHECK(psi_k({1, 2, 4}, std::vector<double>{2, 1, 0}, 1) == doctest::Approx(expected));
  CHECK(psi_k({5}, std::vector<double>{1}, 0) == 1.0);
  // min with M caps the bracket
  CHECK(psi_k({1, 50, 60}, std::vector<double>{1, 1, 0}, 1) ==
        doctest::Approx(3.0 * std::pow(1.0 + std::log(3.0), 2)));
}

TEST_CASE("diagnostics: orthonormal v, kappa0 oracle, degenerate truth") {
  std::mt19937_64 rng(19);
  const int n = 120;
  const Matrix g = gaussian(n, 5, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix x = std::sqrt(double(n)) * (qr.householderQ() * Matrix::Identity(n, 5));
  const Vector mu = x.leftCols(3) * Vector::Constant(3, 0.7);
  const NestedDesign d = NestedDesign::factorize(x, {1, 2, 3, 4, 5});
  const Diagnostics diag = diagnostics(d, coords(d, mu), 1.0, 2);
  REQUIRE(diag.v.size() == 3);
  CHECK(std::abs(diag.v(0)) < 1e-10);
  CHECK(std::abs(diag.v(1)) < 1e-10);
  CHECK(std::abs(std::abs(diag.v(2)) - 1.0) < 1e-10);
  CHECK(diag.kappa0 == doctest::Approx(1.0).epsilon(1e-10));

  const Matrix xr = gaussian(60, 6, rng) + 0.3 * Matrix::Ones(60, 6);
  const Vector mur = xr.leftCols(4) * gaussian_vector(4, rng);
  const NestedDesign dr = NestedDesign::factorize(xr, {2, 4, 6});
  const Diagnostics dg = diagnostics(dr, coords(dr, mur), 2.0, 1);
  const Matrix gram = xr.leftCols(4).transpose() * xr.leftCols(4) / 60.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  CHECK(rel(dg.kappa0, eig.eigenvalues()(0)) < 1e-8);
  CHECK(std::abs(dg.v.norm() - 1.0) < 1e-12);
  CHECK(dg.xi_n == doctest::Approx(solve_simplex(build_risk(dr, coords(dr, mur), 2.0)).objective_value));
  CHECK(dg.xi_n <= 2.0 * 4 + 1e-9);

  const Vector flat = xr.leftCols(2) * gaussian_vector(2, rng);
  CHECK_THROWS_AS((void)diagnostics(dr, coords(dr, flat), 1.0, 1), DegenerateTruthError);
}

TEST_CASE("Lemma A.2 inequality") {
  std::mt19937_64 rng(20);
  {
    const Matrix x = gaussian(40, 4, rng);
    const NestedDesign d = NestedDesign::factorize(x, {1, 2, 3, 4});
    const std::vector<double> beta{1.0, 0.0};
    const Vector mu = x.col(0);
    const InequalitySides s = lemma_a2_gap(d, coords(d, mu), beta, 1, 1);
    CHECK(std::abs(s.lhs) < 1e-12);
    CHECK(s.rhs == 0.0);
  }
  {
    const ScenarioSpec spec = make_scenario(ScenarioName::fixed, 300, 0.5);
    const GeneratedData data = generate(spec, 0, 99);
    const NestedDesign d = NestedDesign::factorize(data.x, spec.sizes);
    const ProjectionCoefficients cmu = coords(d, data.mu);
    const InequalitySides s = lemma_a2_gap(d, cmu, spec.beta, 4, 4);
    const Diagnostics diag = diagnostics(d, cmu, spec.sigma2, 4);
    CHECK(s.rhs == doctest::Approx(diag.kappa0 * 300 * 16.0));
    CHECK(s.lhs >= s.rhs);
  }
  for (int rep = 0; rep < 100; ++rep) {
    const Case c = make_case(rng, 30 + rep % 20, {1, 3, 4, 6, 7}, 1 + rep % 3);
    const NestedDesign d = NestedDesign::factorize(c.x, c.sizes);
    const ProjectionCoefficients cmu = coords(d, c.mu);
    for (int m = 1; m <= c.m0; ++m) {
      const InequalitySides s = lemma_a2_gap(d, cmu, c.beta, c.m0, m);
      CHECK(s.lhs >= s.rhs - 1e-8 * std::abs(s.lhs));
    }
  }
}
