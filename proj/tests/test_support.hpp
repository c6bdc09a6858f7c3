#ifndef NESTAVG_TEST_SUPPORT_HPP
#define NESTAVG_TEST_SUPPORT_HPP

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "nestavg/dgp.hpp"
#include "nestavg/nested_projection.hpp"

namespace testing_support {

using nestavg::Matrix;
using nestavg::Vector;

inline Matrix gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = z(rng);
  return m;
}

inline Vector gaussian_vector(int n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

// Explicit hat matrix X_k (X_k'X_k)^{-1} X_k' through the normal equations.
inline Matrix dense_hat(const Matrix& x, int k) {
  const Matrix xk = x.leftCols(k);
  const Matrix gram = xk.transpose() * xk;
  return xk * gram.ldlt().solve(xk.transpose());
}

inline Matrix dense_averaged_hat(const Matrix& x, const std::vector<int>& sizes,
                                 std::span<const double> w) {
  Matrix p = Matrix::Zero(x.rows(), x.rows());
  for (std::size_t m = 0; m < sizes.size(); ++m) p += w[m] * dense_hat(x, sizes[m]);
  return p;
}

inline std::vector<double> random_simplex(int m, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(static_cast<std::size_t>(m));
  double s = 0.0;
  for (double& x : w) s += (x = e(rng));
  for (double& x : w) x /= s;
  return w;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testing_support

#endif
