#include "nestavg/nested_projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nestavg/errors.hpp"

namespace nestavg {

namespace {

void check_sizes(const std::vector<int>& sizes, int n, int cols) {
  if (sizes.empty()) throw ArgumentError("nesting sizes must be nonempty");
  if (sizes.front() < 1) throw ArgumentError("nesting sizes must be positive");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw ArgumentError("nesting sizes must be strictly increasing (k_" +
                          std::to_string(i) + "=" + std::to_string(sizes[i - 1]) +
                          ", k_" + std::to_string(i + 1) + "=" +
                          std::to_string(sizes[i]) + ")");
    }
  }
  if (sizes.back() != cols) {
    throw ArgumentError("largest nesting size " + std::to_string(sizes.back()) +
                        " does not match design columns " + std::to_string(cols));
  }
  if (sizes.back() >= n) {
    throw ArgumentError("largest model size " + std::to_string(sizes.back()) +
                        " must be smaller than n=" + std::to_string(n));
  }
}

}  // namespace

NestedDesign NestedDesign::factorize(const Matrix& x, std::vector<int> sizes) {
  const int n = static_cast<int>(x.rows());
  const int k = static_cast<int>(x.cols());
  check_sizes(sizes, n, k);

  NestedDesign design;
  design.n_ = n;
  design.sizes_ = std::move(sizes);
  design.qr_.compute(x);
  design.r_ = design.qr_.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  for (int j = 0; j < k; ++j) {
    const double col_norm = x.col(j).norm();
    if (std::abs(design.r_(j, j)) < 1e-12 * col_norm || col_norm == 0.0) {
      throw RankError(static_cast<std::size_t>(j),
                      "design is rank deficient at column " + std::to_string(j + 1) +
                          " (|R_jj|=" + std::to_string(std::abs(design.r_(j, j))) +
                          ")");
    }
  }
  return design;
}

int NestedDesign::size(int m) const {
  if (m < 1 || m > num_models()) {
    throw ArgumentError("model index " + std::to_string(m) + " outside 1.." +
                        std::to_string(num_models()));
  }
  return sizes_[static_cast<std::size_t>(m - 1)];
}

Matrix NestedDesign::thin_q() const {
  Matrix q = Matrix::Identity(n_, max_size());
  return qr_.householderQ() * q;
}

Vector NestedDesign::apply_qt(const Vector& v) const {
  if (v.size() != n_) {
    throw ArgumentError("vector length " + std::to_string(v.size()) +
                        " does not match n=" + std::to_string(n_));
  }
  Vector full = qr_.householderQ().adjoint() * v;
  return full.head(max_size());
}

Vector NestedDesign::project(const Vector& v, int m) const {
  const int km = size(m);
  Vector d = apply_qt(v);
  Vector padded = Vector::Zero(n_);
  padded.head(km) = d.head(km);
  return qr_.householderQ() * padded;
}

ProjectionCoefficients coords(const NestedDesign& design, const Vector& v) {
  ProjectionCoefficients c;
  c.d = design.apply_qt(v);
  c.sq_norm = v.squaredNorm();
  c.n = design.n();
  c.sizes = design.sizes();
  return c;
}

double quad_form(const ProjectionCoefficients& c, int m) {
  if (m < 1 || m > static_cast<int>(c.sizes.size())) {
    throw ArgumentError("model index " + std::to_string(m) + " outside 1.." +
                        std::to_string(c.sizes.size()));
  }
  return c.d.head(c.sizes[static_cast<std::size_t>(m - 1)]).squaredNorm();
}

double cross_form(const ProjectionCoefficients& c1, const ProjectionCoefficients& c2,
                  int m) {
  if (c1.n != c2.n || c1.sizes != c2.sizes || c1.d.size() != c2.d.size()) {
    throw ArgumentError("coordinate sets come from different designs");
  }
  if (m < 1 || m > static_cast<int>(c1.sizes.size())) {
    throw ArgumentError("model index " + std::to_string(m) + " outside 1.." +
                        std::to_string(c1.sizes.size()));
  }
  const int km = c1.sizes[static_cast<std::size_t>(m - 1)];
  return c1.d.head(km).dot(c2.d.head(km));
}

double sigma_hat(const NestedDesign& design, const ProjectionCoefficients& c_y) {
  const int dof = design.n() - design.max_size();
  if (dof <= 0) throw ArgumentError("sigma_hat needs n > k_M");
  const double resid = c_y.sq_norm - c_y.d.squaredNorm();
  return std::max(resid, 0.0) / dof;
}

}  // namespace nestavg
