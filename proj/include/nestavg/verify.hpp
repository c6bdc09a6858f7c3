#ifndef NESTAVG_VERIFY_HPP
#define NESTAVG_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace nestavg {

struct CheckResult {
  std::string name;
  bool passed = true;
  int instances = 0;
  double worst = 0.0;      ///< largest observed violation measure
  double tolerance = 0.0;
  std::string detail;      ///< first failing instance, if any
};

struct VerifyOptions {
  int instances = 500;
  int lemma_a2_instances = 100;
  /// Test hook: flips the sign of the quadratic tail coefficients before the
  /// tail-transform comparison, which must then fail.
  bool corrupt_quadratic_sign = false;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  /// One fixed-width line per check.
  std::string format() const;
};

/// Seeded invariant suite over random nested designs.
VerifyReport run_verification(std::uint64_t seed, const VerifyOptions& options = {});

}  // namespace nestavg

#endif  // NESTAVG_VERIFY_HPP
