#ifndef NESTAVG_ERRORS_HPP
#define NESTAVG_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nestavg {

/// Bad argument: shape mismatch, out-of-range index, invalid parameter.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Design matrix is numerically rank deficient at `column` (0-based).
class RankError : public std::runtime_error {
 public:
  RankError(std::size_t column, const std::string& what)
      : std::runtime_error(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// mu has no component in the true-model window, so v is undefined.
class DegenerateTruthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enumeration would exceed its budget.
class CapacityError : public std::runtime_error {
 public:
  CapacityError(double count, const std::string& what)
      : std::runtime_error(what), count_(count) {}
  double count() const noexcept { return count_; }

 private:
  double count_;
};

/// Iterative solver hit its cap without meeting the KKT tolerance.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(std::vector<double> best, double residual, const std::string& what)
      : std::runtime_error(what), best_(std::move(best)), residual_(residual) {}
  const std::vector<double>& best_iterate() const noexcept { return best_; }
  double residual() const noexcept { return residual_; }

 private:
  std::vector<double> best_;
  double residual_;
};

/// Invalid experiment configuration; `fields` lists the offending keys.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::vector<std::string> fields, const std::string& what)
      : std::runtime_error(what), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

/// Output file or directory could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nestavg

#endif  // NESTAVG_ERRORS_HPP
