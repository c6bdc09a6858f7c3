#ifndef NESTAVG_OBJECTIVES_HPP
#define NESTAVG_OBJECTIVES_HPP

#include <span>
#include <string>
#include <vector>

#include "nestavg/nested_projection.hpp"

namespace nestavg {

enum class ObjectiveKind { criterion, loss, risk };

std::string to_string(ObjectiveKind kind);

/**
 * A quadratic over the simplex written in tail-weight coordinates.
 *
 * With t_m = sum_{l >= m} w_l (so t_1 = 1 >= t_2 >= ... >= t_M >= 0) and the
 * mutually orthogonal increments D_m = P_m - P_{m-1} (P_0 = 0), one has
 * P(w) = sum_m t_m D_m. Every objective below therefore separates:
 *
 *   f(t) = constant + sum_m (quad_m t_m^2 + lin_m t_m).
 *
 * Writing a_m = y'P_m y, c_m = mu'P_m y, g_m = mu'P_m mu and Delta for first
 * differences in m (a_0 = c_0 = g_0 = k_0 = 0):
 *
 *   criterion  quad = Da,             lin = -2 Da + phi s2hat Dk,  const = |y|^2
 *   loss       quad = Da,             lin = -2 Dc,                 const = |mu|^2
 *   risk       quad = Dg + sigma2 Dk, lin = -2 Dg,                 const = |mu|^2
 *
 * The w-space Hessian is the min-matrix 2 * (cumsum quad)_{min(m,l)}.
 */
struct SeparableSimplexObjective {
  ObjectiveKind kind = ObjectiveKind::criterion;
  Vector quad;
  Vector lin;
  double constant = 0.0;

  int num_models() const noexcept { return static_cast<int>(quad.size()); }
  /// f(t(w)) for a weight vector on the simplex.
  double evaluate(std::span<const double> w) const;
  /// f(t) for tail weights with t_1 = 1.
  double evaluate_tail(const Vector& t) const;
  /// Gradient of w -> f(t(w)).
  Vector gradient(std::span<const double> w) const;
};

Vector tail_weights(std::span<const double> w);
Vector weights_from_tail(const Vector& t);

SeparableSimplexObjective build_criterion(const NestedDesign& design,
                                          const ProjectionCoefficients& c_y, double phi,
                                          double s2hat);
SeparableSimplexObjective build_loss(const NestedDesign& design,
                                     const ProjectionCoefficients& c_y,
                                     const ProjectionCoefficients& c_mu);
SeparableSimplexObjective build_risk(const NestedDesign& design,
                                     const ProjectionCoefficients& c_mu, double sigma2);

/// L_n(w) as the true-model loss plus under- and over-fitting corrections.
double loss_decomposition(const NestedDesign& design, const ProjectionCoefficients& c_y,
                          const ProjectionCoefficients& c_e, int m0,
                          std::span<const double> w);
/// R_n(w) as sigma2 k_{M0+1} plus under- and over-fitting corrections.
double risk_decomposition(const NestedDesign& design, const ProjectionCoefficients& c_mu,
                          double sigma2, int m0, std::span<const double> w);

/// Sum of beta_j^2 over j in (k_{M0}, k_{M0+1}] (1-based j).
double eta(std::span<const double> beta, const std::vector<int>& sizes, int m0);

/// Over-fitting and signal-ratio complexity term psi(K).
/// `mu_increments[m-1]` = mu'(P_m - P_{m-1})mu for m = 1..M.
double psi_k(const std::vector<int>& sizes, std::span<const double> mu_increments,
             int m0);

struct Diagnostics {
  double kappa0 = 0.0;  ///< lambda_min(X_{M0+1}'X_{M0+1} / n)
  double xi_n = 0.0;    ///< inf of the risk over the simplex
  double psi_k = 0.0;
  Vector v;             ///< unit vector of the limiting loss-ratio law
};

/// Throws DegenerateTruthError if mu'(P_{M0+1} - P_{M0})mu == 0.
Diagnostics diagnostics(const NestedDesign& design, const ProjectionCoefficients& c_mu,
                        double sigma2, int m0);

struct InequalitySides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// mu'(P_{M0+1} - P_m)mu versus kappa0 n sum_{j in (k_m, k_{M0+1}]} beta_j^2.
InequalitySides lemma_a2_gap(const NestedDesign& design,
                             const ProjectionCoefficients& c_mu,
                             std::span<const double> beta, int m0, int m);

}  // namespace nestavg

#endif  // NESTAVG_OBJECTIVES_HPP
