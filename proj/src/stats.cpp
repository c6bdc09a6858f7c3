#include "nestavg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nestavg/errors.hpp"

namespace nestavg {

namespace {

// Continued fraction for I_x(a, b), modified Lentz; converges for x < (a+1)/(a+b+2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double beta_cdf(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("beta shapes must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ArgumentError("beta_cdf argument must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double beta_pdf(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("beta shapes must be positive");
  if (x < 0.0 || x > 1.0) return 0.0;
  if ((x == 0.0 && a < 1.0) || (x == 1.0 && b < 1.0)) {
    return std::numeric_limits<double>::infinity();
  }
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  return std::exp(log_norm + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x));
}

double ks_distance(std::span<const double> samples,
                   const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ArgumentError("ks_distance needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto m = static_cast<double>(sorted.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double above = static_cast<double>(i + 1) / m - f;
    const double below = f - static_cast<double>(i) / m;
    dist = std::max({dist, above, below});
  }
  return dist;
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) throw ArgumentError("bandwidth needs at least two samples");
  const MeanSe ms = mean_and_se(samples);
  const double sd = ms.se * std::sqrt(static_cast<double>(samples.size()));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  if (!(sd > 0.0)) throw ArgumentError("kde needs samples with nonzero spread");
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 1.06 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

std::vector<double> kde(std::span<const double> samples, std::span<const double> grid) {
  const double h = silverman_bandwidth(samples);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h *
                             std::sqrt(2.0 * std::numbers::pi));
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) {
    double acc = 0.0;
    for (double s : samples) {
      const double u = (g - s) / h;
      acc += std::exp(-0.5 * u * u);
    }
    out.push_back(acc * norm);
  }
  return out;
}

std::vector<double> survival_curve(std::span<const double> samples,
                                   std::span<const double> z_grid) {
  if (samples.empty()) throw ArgumentError("survival_curve needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto m = static_cast<double>(sorted.size());
  std::vector<double> out;
  out.reserve(z_grid.size());
  for (double z : z_grid) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), z) - sorted.begin();
    out.push_back((m - static_cast<double>(below)) / m);
  }
  return out;
}

MeanSe mean_and_se(std::span<const double> samples) {
  MeanSe out;
  if (samples.empty()) return out;
  double sum = 0.0;
  for (double s : samples) sum += s;
  out.mean = sum / static_cast<double>(samples.size());
  if (samples.size() < 2) return out;
  double ss = 0.0;
  for (double s : samples) ss += (s - out.mean) * (s - out.mean);
  const auto m = static_cast<double>(samples.size());
  out.se = std::sqrt(ss / (m - 1.0) / m);
  return out;
}

ReferenceLaw reference_law_from_string(const std::string& text) {
  if (text == "beta_mixture") return ReferenceLaw::beta_mixture;
  if (text == "one_plus_half_Vsq" || text == "one_plus_half_vsq") {
    return ReferenceLaw::one_plus_half_vsq;
  }
  if (text == "beta") return ReferenceLaw::beta;
  throw ArgumentError("unknown reference law '" + text + "'");
}

std::vector<double> sample_reference_law(ReferenceLaw law, std::size_t count, Rng& rng,
                                         double a, double b) {
  if (count < 1) throw ArgumentError("count must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out;
  out.reserve(count);
  switch (law) {
    case ReferenceLaw::beta_mixture: {
      std::bernoulli_distribution coin(0.5);
      for (std::size_t i = 0; i < count; ++i) {
        const bool u = coin(rng);
        // chi2_1 / (chi2_1 + chi2_1) ~ Beta(1/2, 1/2)
        const double z1 = normal(rng);
        const double z2 = normal(rng);
        const double beta_draw = z1 * z1 / (z1 * z1 + z2 * z2);
        out.push_back(u ? 1.0 : beta_draw);
      }
      break;
    }
    case ReferenceLaw::one_plus_half_vsq: {
      for (std::size_t i = 0; i < count; ++i) {
        const double z = normal(rng);
        const double v = std::max(1.0 - 1.0 / (z * z), 0.0);
        out.push_back(1.0 + 0.5 * v * v);
      }
      break;
    }
    case ReferenceLaw::beta: {
      if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("beta shapes must be positive");
      std::gamma_distribution<double> ga(a, 1.0);
      std::gamma_distribution<double> gb(b, 1.0);
      for (std::size_t i = 0; i < count; ++i) {
        const double x = ga(rng);
        const double y = gb(rng);
        out.push_back(x / (x + y));
      }
      break;
    }
  }
  return out;
}

}  // namespace nestavg
