#include "nestavg/simplex_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "nestavg/errors.hpp"

namespace nestavg {

namespace {

constexpr double kSnap = 1e-14;
constexpr double kDegenerateCurvature = 1e-12;

double tie_tolerance(double value) { return 1e-12 * (1.0 + std::abs(value)); }

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Entries below kSnap become exact zeros; the rest are rescaled to sum to 1.
std::vector<double> snap_and_normalize(const Vector& w) {
  std::vector<double> out = to_std(w);
  for (double& x : out) {
    if (x < kSnap) x = 0.0;
  }
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (total > 0.0) {
    for (double& x : out) x /= total;
  }
  return out;
}

double relative_gap(const SeparableSimplexObjective& obj, std::span<const double> w,
                    double feasible_min) {
  const Vector g = obj.gradient(w);
  double wg = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) wg += w[i] * g(static_cast<Eigen::Index>(i));
  const double f = obj.evaluate(w);
  return std::max(0.0, wg - feasible_min) / (1.0 + std::abs(f));
}

double simplex_gap(const SeparableSimplexObjective& obj, std::span<const double> w) {
  return relative_gap(obj, w, obj.gradient(w).minCoeff());
}

// Antitonic fit of targets on tail coordinates [first, last] (0-based), clipped
// to [lo, hi]. For constant bounds clipping the unconstrained fit is exact.
void fit_tail_block(const SeparableSimplexObjective& obj, Eigen::Index first,
                    Eigen::Index last, double lo, double hi, Vector& t) {
  if (last < first) return;
  const Eigen::Index len = last - first + 1;
  Vector targets(len);
  Vector weights(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    const double a = obj.quad(first + i);
    weights(i) = a;
    targets(i) = -obj.lin(first + i) / (2.0 * a);
  }
  const Vector fitted = antitonic_regression(targets, weights);
  for (Eigen::Index i = 0; i < len; ++i) t(first + i) = std::clamp(fitted(i), lo, hi);
}

bool has_degenerate_curvature(const SeparableSimplexObjective& obj, Eigen::Index first) {
  if (first >= obj.quad.size()) return false;
  const double top = obj.quad.tail(obj.quad.size() - first).maxCoeff();
  if (!(top > 0.0)) return true;
  for (Eigen::Index m = first; m < obj.quad.size(); ++m) {
    if (obj.quad(m) < kDegenerateCurvature * top) return true;
  }
  return false;
}

SolveReport make_report(const SeparableSimplexObjective& obj, std::vector<double> w,
                        WeightSet set, SolveMethod method) {
  SolveReport rep;
  rep.weights.w = std::move(w);
  rep.weights.set = set;
  rep.method = method;
  rep.objective_value = obj.evaluate(rep.weights.w);
  return rep;
}

// Dense w-space form: f(w) = c + 0.5 w'Hw + q'w with H_{lk} = 2 S_{min(l,k)}.
struct DenseQuadratic {
  Matrix hessian;
  Vector linear;
  double constant = 0.0;

  double value(const Vector& w) const {
    return constant + 0.5 * w.dot(hessian * w) + linear.dot(w);
  }
  Vector grad(const Vector& w) const { return hessian * w + linear; }
  /// f(to) - f(from) for two simplex points, from the step alone; this avoids
  /// the cancellation in value(). Both points sum to one only up to rounding,
  /// so the gradient is shifted by its mean over the moved coordinates.
  double change(const Vector& from, const Vector& to) const {
    const Vector d = to - from;
    const Vector g = grad(from);
    double shift = 0.0;
    int moved = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d(i) != 0.0) {
        shift += g(i);
        ++moved;
      }
    }
    if (moved == 0) return 0.0;
    shift /= moved;
    return (g.array() - shift).matrix().dot(d) + 0.5 * d.dot(hessian * d);
  }
};

DenseQuadratic dense_form(const SeparableSimplexObjective& obj) {
  const Eigen::Index m = obj.quad.size();
  DenseQuadratic dq;
  dq.hessian.resize(m, m);
  dq.linear.resize(m);
  double s = 0.0;
  double b = 0.0;
  Vector cum(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    s += obj.quad(i);
    b += obj.lin(i);
    cum(i) = s;
    dq.linear(i) = b;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) dq.hessian(i, j) = 2.0 * cum(std::min(i, j));
  }
  dq.constant = obj.constant;
  return dq;
}

double largest_eigenvalue(const Matrix& h) {
  Vector x = Vector::Ones(h.rows()) / std::sqrt(static_cast<double>(h.rows()));
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector y = h * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    lambda = x.dot(y);
    x = y / norm;
  }
  return lambda;
}

// Projection onto the simplex intersected with {t_m <= cap_m}, by Dykstra's
// alternating projections over the simplex and each active halfspace.
Vector project_capped(const Vector& v, const Vector& caps) {
  const Eigen::Index m = v.size();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (caps(i) < 1.0) active.push_back(i);
  }
  if (active.empty()) return project_to_simplex(v);

  const std::size_t sets = active.size() + 1;
  std::vector<Vector> increments(sets, Vector::Zero(m));
  Vector x = v;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    const Vector before = x;
    {
      const Vector z = x + increments[0];
      x = project_to_simplex(z);
      increments[0] = z - x;
    }
    for (std::size_t s = 0; s < active.size(); ++s) {
      const Eigen::Index first = active[s];
      const Vector z = x + increments[s + 1];
      const double excess = z.tail(m - first).sum() - caps(first);
      Vector proj = z;
      if (excess > 0.0) proj.tail(m - first).array() -= excess / static_cast<double>(m - first);
      increments[s + 1] = z - proj;
      x = proj;
    }
    if ((x - before).lpNorm<Eigen::Infinity>() < 1e-16) break;
  }
  return x;
}

// Stationary point of the quadratic on the affine face {w_i = 0, i not in
// support, sum w = 1}; entries may be negative.
std::optional<Vector> face_minimizer(const DenseQuadratic& dq,
                                     const std::vector<Eigen::Index>& support) {
  const auto s = static_cast<Eigen::Index>(support.size());
  Matrix kkt = Matrix::Zero(s + 1, s + 1);
  Vector rhs(s + 1);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) kkt(i, j) = dq.hessian(support[i], support[j]);
    kkt(i, s) = 1.0;
    kkt(s, i) = 1.0;
    rhs(i) = -dq.linear(support[i]);
  }
  rhs(s) = 1.0;
  const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  if (!sol.allFinite()) return std::nullopt;
  Vector w = Vector::Zero(dq.linear.size());
  for (Eigen::Index i = 0; i < s; ++i) w(support[i]) = sol(i);
  if (std::abs(w.sum() - 1.0) > 1e-9) return std::nullopt;
  return w;
}

// Primal active-set refinement from a projected-gradient iterate: move toward
// the face stationary point, dropping coordinates that reach zero, and add
// the most negative reduced-gradient coordinate once the face is optimal.
Vector polish(const DenseQuadratic& dq, const Vector& start) {
  const Eigen::Index m = start.size();
  Vector w = start.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (w(i) <= 1e-10) w(i) = 0.0;
  }
  if (!(w.sum() > 0.0)) return start;
  w /= w.sum();
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (w(i) > 0.0) support.push_back(i);
  }
  for (Eigen::Index iter = 0; iter < 20 * (m + 1); ++iter) {
    const auto target = face_minimizer(dq, support);
    if (!target) break;
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i : support) {
      if ((*target)(i) < 0.0) {
        const double a = w(i) / (w(i) - (*target)(i));
        if (a < alpha) {
          alpha = a;
          blocking = i;
        }
      }
    }
    const Vector moved = w + alpha * (*target - w);
    // A singular face can make the stationary point a non-descent direction.
    if (dq.change(w, moved) > 0.0) break;
    w = moved;
    if (blocking >= 0) {
      w(blocking) = 0.0;
      support.erase(std::find(support.begin(), support.end(), blocking));
      w = w.cwiseMax(0.0);
      w /= w.sum();
      continue;
    }
    w = w.cwiseMax(0.0);
    w /= w.sum();
    const Vector g = dq.grad(w);
    double lambda = 0.0;
    for (Eigen::Index i : support) lambda += g(i);
    lambda /= static_cast<double>(support.size());
    Eigen::Index entering = -1;
    double most_negative = -1e-12 * (1.0 + g.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::find(support.begin(), support.end(), i) != support.end()) continue;
      if (g(i) - lambda < most_negative) {
        most_negative = g(i) - lambda;
        entering = i;
      }
    }
    if (entering < 0) break;
    support.push_back(entering);
    std::sort(support.begin(), support.end());
  }
  return dq.change(start, w) <= 0.0 ? w : start;
}

}  // namespace

WeightSet WeightSet::discrete(int grid) {
  if (grid < 1) throw ArgumentError("discrete grid denominator must be >= 1");
  WeightSet s;
  s.kind = Kind::discrete;
  s.grid = grid;
  return s;
}

WeightSet WeightSet::restricted(double delta, double tau0, int m0, int n) {
  if (!(delta > 0.0) || !(tau0 > 0.0)) {
    throw ArgumentError("restricted set needs delta > 0 and tau0 > 0");
  }
  if (m0 < 1) throw ArgumentError("restricted set needs M0 >= 1");
  if (n < 1) throw ArgumentError("restricted set needs n >= 1");
  WeightSet s;
  s.kind = Kind::restricted;
  s.delta = delta;
  s.tau0 = tau0;
  s.m0 = m0;
  s.n = n;
  return s;
}

double WeightSet::min_underfit_mass() const {
  return delta * std::pow(static_cast<double>(n), -tau0);
}

std::string WeightSet::label() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::simplex:
      os << "simplex";
      break;
    case Kind::discrete:
      os << "discrete:" << grid;
      break;
    case Kind::restricted:
      os << "restricted:" << delta << "," << tau0;
      break;
  }
  return os.str();
}

void check_weight_vector(const WeightVector& wv) {
  double total = 0.0;
  for (double x : wv.w) {
    if (!(x >= 0.0)) throw ArgumentError("weights must be nonnegative");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("weights must sum to 1");
  if (wv.set.kind == WeightSet::Kind::discrete) {
    for (double x : wv.w) {
      const double scaled = x * wv.set.grid;
      if (std::abs(scaled - std::round(scaled)) > 1e-9) {
        throw ArgumentError("weight is not a multiple of 1/" + std::to_string(wv.set.grid));
      }
    }
  } else if (wv.set.kind == WeightSet::Kind::restricted) {
    if (wv.set.m0 >= static_cast<int>(wv.w.size())) {
      throw ArgumentError("restricted tag M0 exceeds number of models");
    }
    double under = 0.0;
    for (int m = 0; m < wv.set.m0; ++m) under += wv.w[static_cast<std::size_t>(m)];
    if (under > 1e-12 && under < wv.set.min_underfit_mass() - 1e-12) {
      throw ArgumentError("under-fitted mass lies strictly between 0 and delta n^-tau0");
    }
  }
}

std::string to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::isotonic:
      return "isotonic";
    case SolveMethod::generic_qp:
      return "generic_qp";
    case SolveMethod::enumeration:
      return "enumeration";
    case SolveMethod::restricted_two_phase:
      return "restricted_two_phase";
  }
  return "unknown";
}

Vector antitonic_regression(const Vector& values, const Vector& weights) {
  if (values.size() != weights.size()) {
    throw ArgumentError("values and weights must have equal length");
  }
  struct Block {
    double weight;
    double mean;
    Eigen::Index count;
  };
  std::vector<Block> blocks;
  blocks.reserve(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(weights(i) > 0.0)) throw ArgumentError("PAVA weights must be positive");
    blocks.push_back({weights(i), values(i), 1});
    // Nonincreasing: a block may not exceed its left neighbour.
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean < blocks.back().mean) {
      const Block right = blocks.back();
      blocks.pop_back();
      Block& left = blocks.back();
      const double w = left.weight + right.weight;
      left.mean = (left.weight * left.mean + right.weight * right.mean) / w;
      left.weight = w;
      left.count += right.count;
    }
  }
  Vector out(values.size());
  Eigen::Index pos = 0;
  for (const Block& b : blocks) {
    out.segment(pos, b.count).setConstant(b.mean);
    pos += b.count;
  }
  return out;
}

Vector project_to_simplex(const Vector& v) {
  const Eigen::Index m = v.size();
  if (m == 0) throw ArgumentError("cannot project an empty vector");
  std::vector<double> sorted(v.data(), v.data() + m);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    cumulative += sorted[static_cast<std::size_t>(i)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

SolveReport solve_simplex(const SeparableSimplexObjective& obj) {
  const Eigen::Index m = obj.quad.size();
  if (m == 0 || obj.lin.size() != m) throw ArgumentError("malformed objective");
  if (m == 1) {
    SolveReport rep = make_report(obj, {1.0}, WeightSet::simplex(), SolveMethod::isotonic);
    return rep;
  }
  if (has_degenerate_curvature(obj, 1)) return solve_generic_qp(obj);

  Vector t(m);
  t(0) = 1.0;
  fit_tail_block(obj, 1, m - 1, 0.0, 1.0, t);
  SolveReport rep = make_report(obj, snap_and_normalize(weights_from_tail(t)),
                                WeightSet::simplex(), SolveMethod::isotonic);
  rep.kkt_residual = simplex_gap(obj, rep.weights.w);
  return rep;
}

SolveReport solve_generic_qp(const SeparableSimplexObjective& obj,
                             const std::optional<Vector>& tail_caps) {
  const Eigen::Index m = obj.quad.size();
  if (m == 0 || obj.lin.size() != m) throw ArgumentError("malformed objective");
  if (tail_caps && tail_caps->size() != m) throw ArgumentError("cap vector length mismatch");
  const bool capped = tail_caps && (tail_caps->array() < 1.0).any();
  auto project = [&](const Vector& v) {
    return capped ? project_capped(v, *tail_caps) : project_to_simplex(v);
  };

  const DenseQuadratic dq = dense_form(obj);
  const double lipschitz = 1.01 * largest_eigenvalue(dq.hessian);
  Vector x = project(Vector::Constant(m, 1.0 / static_cast<double>(m)));
  if (lipschitz <= 0.0) {
    // Linear objective: the best vertex (or capped LP) is reached by one long step.
    x = project(x - 1e12 * dq.grad(x));
  } else {
    Vector y = x;
    double theta = 1.0;
    double fx = dq.value(x);
    std::vector<double> history{fx};
    const long max_iter = 1000000;
    for (long it = 0; it < max_iter; ++it) {
      const Vector next = project(y - dq.grad(y) / lipschitz);
      const double fnext = dq.value(next);
      if (fnext > fx) {
        // Adaptive restart keeps the accelerated iterates monotone.
        y = x;
        theta = 1.0;
        history.push_back(fx);
      } else {
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        y = next + ((theta - 1.0) / theta_next) * (next - x);
        theta = theta_next;
        x = next;
        fx = fnext;
        history.push_back(fx);
      }
      if (history.size() > 10) {
        const double drop = history[history.size() - 11] - history.back();
        if (drop < 1e-14 * (1.0 + std::abs(fx))) break;
      }
    }
  }
  if (!capped) x = polish(dq, x);

  std::vector<double> w = snap_and_normalize(x);
  if (capped) w = to_std(x.cwiseMax(0.0));
  SolveReport rep = make_report(obj, w, WeightSet::simplex(), SolveMethod::generic_qp);
  if (capped) {
    const Vector xv = Eigen::Map<const Vector>(rep.weights.w.data(), m);
    const Vector step = xv - project(xv - dq.grad(xv) / std::max(lipschitz, 1e-300));
    rep.kkt_residual = (lipschitz > 0.0 ? lipschitz : 1.0) * step.lpNorm<Eigen::Infinity>() /
                       (1.0 + std::abs(rep.objective_value));
  } else {
    rep.kkt_residual = simplex_gap(obj, rep.weights.w);
  }
  if (rep.kkt_residual >= 1e-6) {
    throw SolverFailure(rep.weights.w, rep.kkt_residual,
                        "projected gradient did not converge (KKT residual " +
                            std::to_string(rep.kkt_residual) + ")");
  }
  return rep;
}

double discrete_grid_size(int num_models, int grid) {
  // C(N + M - 1, M - 1) computed in floating point
  double count = 1.0;
  const int k = num_models - 1;
  for (int i = 1; i <= k; ++i) count = count * (grid + i) / i;
  return std::round(count);
}

SolveReport solve_discrete(const SeparableSimplexObjective& obj, int grid) {
  const int m = obj.num_models();
  if (m == 0) throw ArgumentError("malformed objective");
  const WeightSet set = WeightSet::discrete(grid);
  const double count = discrete_grid_size(m, grid);
  if (count > 1e7) {
    std::ostringstream os;
    os << "discrete grid has " << count << " points, above the 1e7 enumeration budget";
    throw CapacityError(count, os.str());
  }

  std::vector<int> parts(static_cast<std::size_t>(m), 0);
  parts.back() = grid;
  std::vector<int> best_parts = parts;
  double best = std::numeric_limits<double>::infinity();
  Vector t(m);
  const double inv = 1.0 / grid;
  for (;;) {
    int acc = 0;
    for (int i = m - 1; i >= 0; --i) {
      acc += parts[static_cast<std::size_t>(i)];
      t(i) = acc * inv;
    }
    const double value = obj.evaluate_tail(t);
    if (value < best - tie_tolerance(best) || !std::isfinite(best)) {
      best = value;
      best_parts = parts;
    }
    // Next composition in increasing lexicographic order.
    int j = m - 2;
    int right = parts.back();
    while (j >= 0 && right == 0) {
      right += parts[static_cast<std::size_t>(j)];
      --j;
    }
    if (j < 0) break;
    int head = 0;
    for (int i = 0; i <= j; ++i) head += parts[static_cast<std::size_t>(i)];
    parts[static_cast<std::size_t>(j)] += 1;
    for (int i = j + 1; i < m - 1; ++i) parts[static_cast<std::size_t>(i)] = 0;
    parts.back() = grid - head - 1;
  }

  std::vector<double> w(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    w[static_cast<std::size_t>(i)] = best_parts[static_cast<std::size_t>(i)] * inv;
  }
  SolveReport rep = make_report(obj, std::move(w), set, SolveMethod::enumeration);
  return rep;
}

SolveReport solve_restricted(const SeparableSimplexObjective& obj, double delta,
                             double tau0, int m0, int n) {
  const int m = obj.num_models();
  if (m0 < 1 || m0 >= m) {
    throw ArgumentError("M0=" + std::to_string(m0) + " must satisfy 1 <= M0 <= M-1");
  }
  const WeightSet set = WeightSet::restricted(delta, tau0, m0, n);
  const double s0 = set.min_underfit_mass();
  const Eigen::Index truth = m0;  // 0-based index of model M0+1

  // Phase (a): no under-fitted weight; a simplex problem over models M0+1..M.
  SeparableSimplexObjective reduced;
  reduced.kind = obj.kind;
  reduced.quad = obj.quad.tail(m - m0);
  reduced.lin = obj.lin.tail(m - m0);
  reduced.constant = obj.constant + obj.quad.head(m0).sum() + obj.lin.head(m0).sum();
  const SolveReport sub = solve_simplex(reduced);
  std::vector<double> wa(static_cast<std::size_t>(m), 0.0);
  std::copy(sub.weights.w.begin(), sub.weights.w.end(), wa.begin() + m0);
  SolveReport phase_a = make_report(obj, std::move(wa), set, SolveMethod::restricted_two_phase);
  {
    const Vector g = obj.gradient(phase_a.weights.w);
    phase_a.kkt_residual = relative_gap(obj, phase_a.weights.w, g.tail(m - m0).minCoeff());
  }

  if (s0 >= 1.0) {
    phase_a.restriction_infeasible = true;
    return phase_a;
  }

  // Phase (b): under-fitted mass >= s0, i.e. t_{M0+1} <= 1 - s0.
  const double cap = 1.0 - s0;
  std::vector<double> wb;
  if (has_degenerate_curvature(obj, 1)) {
    Vector caps = Vector::Ones(m);
    caps(truth) = cap;
    wb = solve_generic_qp(obj, caps).weights.w;
  } else {
    Vector t(m);
    t(0) = 1.0;
    fit_tail_block(obj, 1, m - 1, 0.0, 1.0, t);
    if (t(truth) > cap) {
      // The cap binds, which splits the chain at t_{M0+1} = cap.
      fit_tail_block(obj, 1, truth - 1, cap, 1.0, t);
      t(truth) = cap;
      fit_tail_block(obj, truth + 1, m - 1, 0.0, cap, t);
    }
    wb = snap_and_normalize(weights_from_tail(t));
  }
  SolveReport phase_b = make_report(obj, std::move(wb), set, SolveMethod::restricted_two_phase);
  {
    const Vector g = obj.gradient(phase_b.weights.w);
    const double under_min = g.head(m0).minCoeff();
    const double over_min = g.tail(m - m0).minCoeff();
    const double vertex_min = std::min(under_min, s0 * under_min + (1.0 - s0) * over_min);
    phase_b.kkt_residual = relative_gap(obj, phase_b.weights.w, vertex_min);
  }

  if (phase_b.objective_value < phase_a.objective_value - tie_tolerance(phase_a.objective_value)) {
    return phase_b;
  }
  return phase_a;
}

}  // namespace nestavg
