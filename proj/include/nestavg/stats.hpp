#ifndef NESTAVG_STATS_HPP
#define NESTAVG_STATS_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nestavg/dgp.hpp"

namespace nestavg {

/// Regularized incomplete beta I_x(a, b).
double beta_cdf(double a, double b, double x);

/// Beta(a, b) density; +inf at an integrable endpoint singularity.
double beta_pdf(double a, double b, double x);

/// Kolmogorov-Smirnov distance sup_x |F_m(x) - cdf(x)|.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Gaussian kernel density estimate with bandwidth
/// 1.06 min(sd, IQR / 1.34) m^(-1/5); sd alone is used when the IQR is 0.
std::vector<double> kde(std::span<const double> samples, std::span<const double> grid);

double silverman_bandwidth(std::span<const double> samples);

/// Empirical Pr{sample >= z} at each point of a sorted grid.
std::vector<double> survival_curve(std::span<const double> samples,
                                   std::span<const double> z_grid);

/// Sample mean and its Monte Carlo standard error (0 for one sample).
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_and_se(std::span<const double> samples);

/// Reference laws: "beta_mixture" is U + (1 - U) Beta(1/2, 1/2) with U a fair
/// coin; "one_plus_half_Vsq" is 1 + V^2/2 with V = max(1 - 1/chi2_1, 0);
/// "beta" draws Beta(a, b).
enum class ReferenceLaw { beta_mixture, one_plus_half_vsq, beta };

ReferenceLaw reference_law_from_string(const std::string& text);

std::vector<double> sample_reference_law(ReferenceLaw law, std::size_t count, Rng& rng,
                                         double a = 0.5, double b = 0.5);

}  // namespace nestavg

#endif  // NESTAVG_STATS_HPP
