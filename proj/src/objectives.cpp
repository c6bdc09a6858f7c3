#include "nestavg/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nestavg/errors.hpp"
#include "nestavg/simplex_solver.hpp"

namespace nestavg {

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::criterion:
      return "criterion";
    case ObjectiveKind::loss:
      return "loss";
    case ObjectiveKind::risk:
      return "risk";
  }
  return "unknown";
}

Vector tail_weights(std::span<const double> w) {
  const auto m = static_cast<Eigen::Index>(w.size());
  Vector t(m);
  double acc = 0.0;
  for (Eigen::Index i = m - 1; i >= 0; --i) {
    acc += w[static_cast<std::size_t>(i)];
    t(i) = acc;
  }
  return t;
}

Vector weights_from_tail(const Vector& t) {
  const Eigen::Index m = t.size();
  Vector w(m);
  for (Eigen::Index i = 0; i < m; ++i) w(i) = t(i) - (i + 1 < m ? t(i + 1) : 0.0);
  return w;
}

double SeparableSimplexObjective::evaluate_tail(const Vector& t) const {
  if (t.size() != quad.size()) throw ArgumentError("tail weight length mismatch");
  return constant + quad.dot(t.cwiseProduct(t)) + lin.dot(t);
}

double SeparableSimplexObjective::evaluate(std::span<const double> w) const {
  if (static_cast<Eigen::Index>(w.size()) != quad.size()) {
    throw ArgumentError("weight length " + std::to_string(w.size()) +
                        " does not match objective size " +
                        std::to_string(quad.size()));
  }
  return evaluate_tail(tail_weights(w));
}

Vector SeparableSimplexObjective::gradient(std::span<const double> w) const {
  const Vector t = tail_weights(w);
  const Vector dt = 2.0 * quad.cwiseProduct(t) + lin;
  // d f / d w_l = sum_{m <= l} d f / d t_m
  Vector g(dt.size());
  double acc = 0.0;
  for (Eigen::Index l = 0; l < dt.size(); ++l) {
    acc += dt(l);
    g(l) = acc;
  }
  return g;
}

namespace {

// First differences of m -> u'P_m v over the nested family.
Vector increments(const ProjectionCoefficients& u, const ProjectionCoefficients& v) {
  const auto count = static_cast<Eigen::Index>(u.sizes.size());
  Vector out(count);
  double prev = 0.0;
  for (Eigen::Index m = 0; m < count; ++m) {
    const double cur = cross_form(u, v, static_cast<int>(m + 1));
    out(m) = cur - prev;
    prev = cur;
  }
  return out;
}

Vector size_increments(const std::vector<int>& sizes) {
  Vector out(static_cast<Eigen::Index>(sizes.size()));
  int prev = 0;
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    out(static_cast<Eigen::Index>(m)) = sizes[m] - prev;
    prev = sizes[m];
  }
  return out;
}

void check_design(const NestedDesign& design, const ProjectionCoefficients& c) {
  if (c.n != design.n() || c.sizes != design.sizes()) {
    throw ArgumentError("coordinates do not belong to this design");
  }
}

void check_decomposition_args(int m0, int num_models, std::span<const double> w) {
  if (m0 < 1 || m0 >= num_models - 1) {
    throw ArgumentError("M0=" + std::to_string(m0) + " must satisfy 1 <= M0 < M-1 (M=" +
                        std::to_string(num_models) + ")");
  }
  if (static_cast<int>(w.size()) != num_models) {
    throw ArgumentError("weight length does not match number of models");
  }
}

}  // namespace

SeparableSimplexObjective build_criterion(const NestedDesign& design,
                                          const ProjectionCoefficients& c_y, double phi,
                                          double s2hat) {
  if (!(phi >= 0.0)) throw ArgumentError("penalty factor phi must be nonnegative");
  if (!(s2hat >= 0.0)) throw ArgumentError("variance estimate must be nonnegative");
  check_design(design, c_y);
  const Vector da = increments(c_y, c_y);
  SeparableSimplexObjective obj;
  obj.kind = ObjectiveKind::criterion;
  obj.quad = da.cwiseMax(0.0);
  obj.lin = -2.0 * da + phi * s2hat * size_increments(design.sizes());
  obj.constant = c_y.sq_norm;
  return obj;
}

SeparableSimplexObjective build_loss(const NestedDesign& design,
                                     const ProjectionCoefficients& c_y,
                                     const ProjectionCoefficients& c_mu) {
  check_design(design, c_y);
  check_design(design, c_mu);
  SeparableSimplexObjective obj;
  obj.kind = ObjectiveKind::loss;
  obj.quad = increments(c_y, c_y).cwiseMax(0.0);
  obj.lin = -2.0 * increments(c_mu, c_y);
  obj.constant = c_mu.sq_norm;
  return obj;
}

SeparableSimplexObjective build_risk(const NestedDesign& design,
                                     const ProjectionCoefficients& c_mu, double sigma2) {
  if (!(sigma2 > 0.0)) throw ArgumentError("error variance sigma2 must be positive");
  check_design(design, c_mu);
  const Vector dg = increments(c_mu, c_mu);
  SeparableSimplexObjective obj;
  obj.kind = ObjectiveKind::risk;
  obj.quad = dg.cwiseMax(0.0) + sigma2 * size_increments(design.sizes());
  obj.lin = -2.0 * dg;
  obj.constant = c_mu.sq_norm;
  return obj;
}

double loss_decomposition(const NestedDesign& design, const ProjectionCoefficients& c_y,
                          const ProjectionCoefficients& c_e, int m0,
                          std::span<const double> w) {
  check_design(design, c_y);
  check_design(design, c_e);
  const int num = design.num_models();
  check_decomposition_args(m0, num, w);
  const int truth = m0 + 1;

  const double yy_truth = quad_form(c_y, truth);
  const double ye_truth = cross_form(c_y, c_e, truth);
  const double ee_truth = quad_form(c_e, truth);

  double value = ee_truth;
  double head = 0.0;  // sum_{l < m} w_l
  for (int m = 1; m <= m0; ++m) {
    const double wm = w[static_cast<std::size_t>(m - 1)];
    value += (wm * wm + 2.0 * wm * head) * (yy_truth - quad_form(c_y, m));
    value -= 2.0 * wm * (ye_truth - cross_form(c_y, c_e, m));
    head += wm;
  }
  double tail = 0.0;  // sum_{l > m} w_l
  for (int m = num; m > truth; --m) {
    const double wm = w[static_cast<std::size_t>(m - 1)];
    value += (wm * wm + 2.0 * wm * tail) * (quad_form(c_e, m) - ee_truth);
    tail += wm;
  }
  return value;
}

double risk_decomposition(const NestedDesign& design, const ProjectionCoefficients& c_mu,
                          double sigma2, int m0, std::span<const double> w) {
  if (!(sigma2 > 0.0)) throw ArgumentError("error variance sigma2 must be positive");
  check_design(design, c_mu);
  const int num = design.num_models();
  check_decomposition_args(m0, num, w);
  const int truth = m0 + 1;
  const double k_truth = design.size(truth);
  const double g_truth = quad_form(c_mu, truth);

  // R_n(w_{M0+1}^0); the bias term vanishes when mu lies in span X_{M0+1}.
  double value = (c_mu.sq_norm - g_truth) + sigma2 * k_truth;
  double head = 0.0;
  for (int m = 1; m <= m0; ++m) {
    const double wm = w[static_cast<std::size_t>(m - 1)];
    const double gap = k_truth - design.size(m);
    value += (wm * wm + 2.0 * wm * head) * ((g_truth - quad_form(c_mu, m)) + sigma2 * gap);
    value -= 2.0 * sigma2 * wm * gap;
    head += wm;
  }
  double tail = 0.0;
  for (int m = num; m > truth; --m) {
    const double wm = w[static_cast<std::size_t>(m - 1)];
    value += sigma2 * (wm * wm + 2.0 * wm * tail) * (design.size(m) - k_truth);
    tail += wm;
  }
  return value;
}

double eta(std::span<const double> beta, const std::vector<int>& sizes, int m0) {
  if (m0 < 1 || m0 >= static_cast<int>(sizes.size())) {
    throw ArgumentError("M0=" + std::to_string(m0) + " outside 1..M-1");
  }
  const auto lo = static_cast<std::size_t>(sizes[static_cast<std::size_t>(m0 - 1)]);
  const auto hi = static_cast<std::size_t>(sizes[static_cast<std::size_t>(m0)]);
  double sum = 0.0;
  for (std::size_t j = lo; j < hi && j < beta.size(); ++j) sum += beta[j] * beta[j];
  return sum;
}

double psi_k(const std::vector<int>& sizes, std::span<const double> mu_increments,
             int m0) {
  const int num = static_cast<int>(sizes.size());
  if (num == 0) throw ArgumentError("psi_k needs at least one model");
  const double log_factor = std::pow(1.0 + std::log(static_cast<double>(num)), 2);
  if (num == 1) return 1.0 * log_factor;
  if (m0 < 0 || m0 >= num) throw ArgumentError("M0 outside 0..M-1");
  if (static_cast<int>(mu_increments.size()) != num) {
    throw ArgumentError("mu_increments must have one entry per model");
  }

  double inner = 1.0;
  for (int m = 1; m < num; ++m) {
    inner += static_cast<double>(sizes[static_cast<std::size_t>(m)] -
                                 sizes[static_cast<std::size_t>(m - 1)]) /
             (4.0 * sizes[static_cast<std::size_t>(m - 1)]);
  }
  // mu'(P_{M0+1} - P_m)mu = sum of increments m+1..M0+1
  for (int m = 1; m <= m0; ++m) {
    double remaining = 0.0;
    for (int l = m + 1; l <= m0 + 1; ++l) remaining += mu_increments[static_cast<std::size_t>(l - 1)];
    inner += mu_increments[static_cast<std::size_t>(m - 1)] / (4.0 * remaining);
  }
  return std::min(static_cast<double>(num), inner) * log_factor;
}

namespace {

double smallest_gram_eigenvalue(const NestedDesign& design, int k) {
  const Matrix rk = design.r().topLeftCorner(k, k);
  const Matrix gram = (rk.transpose() * rk) / static_cast<double>(design.n());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

}  // namespace

Diagnostics diagnostics(const NestedDesign& design, const ProjectionCoefficients& c_mu,
                        double sigma2, int m0) {
  check_design(design, c_mu);
  const int num = design.num_models();
  if (m0 < 1 || m0 >= num) {
    throw ArgumentError("M0=" + std::to_string(m0) + " must satisfy 1 <= M0 <= M-1");
  }
  const int k_lo = design.size(m0);
  const int k_hi = design.size(m0 + 1);

  const double window = c_mu.d.segment(k_lo, k_hi - k_lo).squaredNorm();
  if (!(window > 1e-20 * std::max(1.0, c_mu.sq_norm))) {
    throw DegenerateTruthError(
        "mu has no component in the true-model window; v is undefined");
  }

  Diagnostics out;
  out.kappa0 = smallest_gram_eigenvalue(design, k_hi);
  out.xi_n = solve_simplex(build_risk(design, c_mu, sigma2)).objective_value;

  std::vector<double> dg(static_cast<std::size_t>(num));
  double prev = 0.0;
  for (int m = 1; m <= num; ++m) {
    const double cur = quad_form(c_mu, m);
    dg[static_cast<std::size_t>(m - 1)] = cur - prev;
    prev = cur;
  }
  out.psi_k = psi_k(design.sizes(), dg, m0);

  // Plug-in Q = X'X/n on the true model; beta recovered from R beta = Q'mu.
  const Matrix rk = design.r().topLeftCorner(k_hi, k_hi);
  const Vector beta = rk.triangularView<Eigen::Upper>().solve(c_mu.d.head(k_hi));
  const Matrix q = (rk.transpose() * rk) / static_cast<double>(design.n());
  const int k_c = k_hi - k_lo;
  const Matrix q11 = q.topLeftCorner(k_lo, k_lo);
  const Matrix q12 = q.topRightCorner(k_lo, k_c);
  const Matrix q22 = q.bottomRightCorner(k_c, k_c);
  const Matrix schur = q22 - q12.transpose() * q11.ldlt().solve(q12);
  const Vector beta_c = beta.tail(k_c);
  const double scale = beta_c.dot(schur * beta_c);
  if (!(scale > 0.0)) {
    throw DegenerateTruthError("true-model window coefficients are numerically zero");
  }
  Vector u = Vector::Zero(k_hi);
  u.tail(k_c) = schur * beta_c;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
  const Matrix inv_sqrt = eig.operatorInverseSqrt();
  out.v = inv_sqrt * u / std::sqrt(scale);
  out.v /= out.v.norm();
  return out;
}

InequalitySides lemma_a2_gap(const NestedDesign& design,
                             const ProjectionCoefficients& c_mu,
                             std::span<const double> beta, int m0, int m) {
  check_design(design, c_mu);
  if (m0 < 1 || m0 >= design.num_models()) throw ArgumentError("M0 outside 1..M-1");
  if (m < 1 || m > m0) {
    throw ArgumentError("m=" + std::to_string(m) + " must lie in 1..M0=" +
                        std::to_string(m0));
  }
  const int k_m = design.size(m);
  const int k_truth = design.size(m0 + 1);
  double tail = 0.0;
  for (int j = k_m; j < k_truth && j < static_cast<int>(beta.size()); ++j) {
    tail += beta[static_cast<std::size_t>(j)] * beta[static_cast<std::size_t>(j)];
  }
  InequalitySides sides;
  sides.lhs = quad_form(c_mu, m0 + 1) - quad_form(c_mu, m);
  sides.rhs = smallest_gram_eigenvalue(design, k_truth) * design.n() * tail;
  return sides;
}

}  // namespace nestavg
