#ifndef NESTAVG_NESTED_PROJECTION_HPP
#define NESTAVG_NESTED_PROJECTION_HPP

#include <vector>

#include <Eigen/Dense>

namespace nestavg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * A nested family of least-squares designs sharing one QR factorization.
 *
 * Candidate model m (1-based, m = 1..M) uses the first k_m columns of the
 * largest design X. With X = Q R (Q thin, orthonormal columns), the hat
 * matrix of model m is P_m = Q_{:,1..k_m} Q_{:,1..k_m}^T, so every quadratic
 * form v^T P_m u reduces to a prefix sum over the coordinates Q^T v and Q^T u.
 * No dense projection is ever formed.
 */
class NestedDesign {
 public:
  /// Factorizes `x` (n x k_M) with nesting sizes k_1 < ... < k_M = x.cols().
  /// Throws ArgumentError for bad sizes and RankError on a dependent column.
  static NestedDesign factorize(const Matrix& x, std::vector<int> sizes);

  int n() const noexcept { return n_; }
  int num_models() const noexcept { return static_cast<int>(sizes_.size()); }
  int max_size() const noexcept { return sizes_.back(); }
  /// k_m for 1-based model index m.
  int size(int m) const;
  const std::vector<int>& sizes() const noexcept { return sizes_; }

  /// Upper-triangular k_M x k_M factor.
  const Matrix& r() const noexcept { return r_; }
  /// Explicit n x k_M orthonormal factor (materialized on demand).
  Matrix thin_q() const;

  /// First k_M entries of Q^T v.
  Vector apply_qt(const Vector& v) const;
  /// P_m v computed through the Q prefix.
  Vector project(const Vector& v, int m) const;

 private:
  NestedDesign() = default;

  int n_ = 0;
  std::vector<int> sizes_;
  Eigen::HouseholderQR<Matrix> qr_;
  Matrix r_;
};

/// Orthonormal coordinates d = Q^T v of one vector plus its squared norm.
struct ProjectionCoefficients {
  Vector d;
  double sq_norm = 0.0;
  int n = 0;
  std::vector<int> sizes;
};

ProjectionCoefficients coords(const NestedDesign& design, const Vector& v);

/// v^T P_m v, m in 1..M.
double quad_form(const ProjectionCoefficients& c, int m);
/// u^T P_m v from the coordinates of u and v.
double cross_form(const ProjectionCoefficients& c1, const ProjectionCoefficients& c2,
                  int m);
/// Residual variance estimate y^T (I - P_M) y / (n - k_M), clamped at 0.
double sigma_hat(const NestedDesign& design, const ProjectionCoefficients& c_y);

}  // namespace nestavg

#endif  // NESTAVG_NESTED_PROJECTION_HPP
