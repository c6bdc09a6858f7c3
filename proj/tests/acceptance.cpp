// Desk-scale acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nestavg/report.hpp"
#include "nestavg/stats.hpp"
#include "nestavg/verify.hpp"

using namespace nestavg;

namespace {

constexpr std::uint64_t kSeed = 20240607;

int worker_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail, double seconds) {
  if (!ok) ++failures;
  std::printf("%s  criterion %d: %s | %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str(), seconds);
  std::fflush(stdout);
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

CellResult run_cell(const ScenarioSpec& spec, int reps, const RunOptions& options = {}) {
  return std::move(run_experiment({spec}, reps, kSeed, worker_threads(), options).cells.front());
}

MeanSe column(const CellResult& cell, double (*get)(const RepOutcome&)) {
  std::vector<double> v;
  for (const RepOutcome& o : cell.outcomes) v.push_back(get(o));
  return mean_and_se(v);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Ratio columns (true, mma, logn) for one metric.
struct Triple {
  MeanSe v[3];
};

Triple ratios(const CellResult& cell, bool loss) {
  Triple t;
  std::vector<double> cols[3];
  for (const RepOutcome& o : cell.outcomes) {
    cols[0].push_back(loss ? o.loss_ratio_true : o.risk_ratio_true);
    cols[1].push_back(loss ? o.estimator("mma").loss_ratio : o.estimator("mma").risk_ratio);
    cols[2].push_back(loss ? o.estimator("logn").loss_ratio : o.estimator("logn").risk_ratio);
  }
  for (int i = 0; i < 3; ++i) t.v[i] = mean_and_se(cols[i]);
  return t;
}

bool within(const Triple& t, const double target[3], double tol, std::string& detail) {
  bool ok = true;
  std::ostringstream os;
  const char* names[3] = {"true", "mma", "logn"};
  for (int i = 0; i < 3; ++i) {
    const double dev = std::abs(t.v[i].mean - target[i]);
    ok = ok && dev <= tol;
    os << names[i] << "=" << fmt("%.4f", t.v[i].mean) << " (target " << fmt("%.3f", target[i])
       << ") ";
  }
  detail = os.str();
  return ok;
}

void criteria_1_2() {
  Timer timer;
  const CellResult cell = run_cell(make_scenario(ScenarioName::toy, 2000, std::nullopt), 10000);
  int hits = 0;
  std::vector<double> below;
  for (const RepOutcome& o : cell.outcomes) {
    hits += o.wl_equals_true;
    if (o.loss_ratio_optimal_inverse < 1.0 - 1e-9) below.push_back(o.loss_ratio_optimal_inverse);
  }
  const double p = hits / 10000.0;
  const double t = timer.seconds();
  report(1, p >= 0.47 && p <= 0.53, "toy n=2000, 1e4 reps: Pr(w^L = w_2^0) in [0.47, 0.53]",
         fmt("observed %.4f", p), t);
  const double ks = ks_distance(below, [](double x) { return beta_cdf(0.5, 0.5, std::clamp(x, 0.0, 1.0)); });
  report(2, ks <= 0.05, "toy n=2000, 1e4 reps: KS(ratio < 1-1e-9, Beta(1/2,1/2)) <= 0.05",
         fmt("KS %.4f over %.0f samples", ks, static_cast<double>(below.size())), 0.0);
}

void criterion_3() {
  Timer timer;
  const CellResult half = run_cell(make_scenario(ScenarioName::fixed, 1000, 0.5), 5000);
  const CellResult high = run_cell(make_scenario(ScenarioName::fixed, 1000, 0.9), 5000);
  const double t_half[3] = {1.003, 1.081, 1.022};
  const double t_high[3] = {1.000, 1.080, 1.004};
  std::string d1, d2;
  const bool ok1 = within(ratios(half, false), t_half, 0.02, d1);
  const bool ok2 = within(ratios(high, false), t_high, 0.02, d2);
  const Triple loss = ratios(high, true);
  const bool ok3 = loss.v[0].mean + 3 * loss.v[0].se > 1.5 &&
                   loss.v[2].mean + 3 * loss.v[2].se > 1.5 &&
                   loss.v[1].mean + 3 * loss.v[1].se > 2.0;
  const std::string d3 = fmt("loss r2=0.9: true %.3f (se %.3f), mma %.3f (se %.3f)", loss.v[0].mean,
                             loss.v[0].se, loss.v[1].mean, loss.v[1].se) +
                         fmt(", logn %.3f (se %.3f)", loss.v[2].mean, loss.v[2].se);
  report(3, ok1 && ok2 && ok3,
         "fixed n=1000, 5000 reps: risk ratios within 0.02 at r2=0.5 and 0.9; loss ratio claims at r2=0.9",
         "r2=0.5 " + d1 + "| r2=0.9 " + d2 + "| " + d3, timer.seconds());
}

void criterion_4() {
  Timer timer;
  const CellResult cell = run_cell(make_scenario(ScenarioName::div1, 10000, 0.5), 3000);
  const double risk_t[3] = {1.000, 1.008, 1.001};
  const double loss_t[3] = {1.018, 1.043, 1.021};
  std::string dr, dl;
  const bool ok_r = within(ratios(cell, false), risk_t, 0.01, dr);
  const bool ok_l = within(ratios(cell, true), loss_t, 0.02, dl);
  report(4, ok_r && ok_l,
         "div1 r2=0.5 n=10000, 3000 reps: risk ratios within 0.01, loss ratios within 0.02",
         "risk " + dr + "| loss " + dl, timer.seconds());
}

void criterion_5() {
  Timer timer;
  const CellResult cell = run_cell(make_scenario(ScenarioName::div2, 1000, 0.5), 3000);
  const double risk_t[3] = {1.005, 1.038, 1.034};
  std::string d;
  const bool ok = within(ratios(cell, false), risk_t, 0.02, d);
  report(5, ok, "div2 r2=0.5 n=1000, 3000 reps: risk ratios within 0.02", "risk " + d,
         timer.seconds());
}

void criterion_6() {
  Timer timer;
  const ScenarioSpec spec = make_scenario(ScenarioName::fixed, 1000, 0.5, 0.0);
  const CellResult cell = run_cell(spec, 10000);
  std::vector<double> r_true, r_logn, z;
  for (const RepOutcome& o : cell.outcomes) {
    r_true.push_back(o.loss_ratio_true);
    r_logn.push_back(o.estimator("logn").loss_ratio);
  }
  std::sort(r_true.begin(), r_true.end());
  std::sort(r_logn.begin(), r_logn.end());
  for (int i = 101; i <= 500; ++i) z.push_back(i / 100.0);
  const auto s_true = survival_curve(r_true, z);
  const auto s_logn = survival_curve(r_logn, z);
  const double reps = static_cast<double>(cell.outcomes.size());
  const double half_k = spec.sizes[static_cast<std::size_t>(spec.m0 - 1)] / 2.0;
  double worst = std::numeric_limits<double>::infinity();
  double worst_z = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double ref = 0.5 * (1.0 - beta_cdf(0.5, half_k, 1.0 - 1.0 / z[i]));
    for (double s : {s_true[i], s_logn[i]}) {
      const double se = std::sqrt(s * (1.0 - s) / reps);
      const double margin = s - (ref - 3.0 * se);
      if (margin < worst) {
        worst = margin;
        worst_z = z[i];
      }
    }
  }
  report(6, worst >= 0.0,
         "fixed rho=0 r2=0.5 n=1000, 1e4 reps: survival >= half-Beta(1/2,2) bound - 3 SE on z=1.01..5",
         fmt("smallest margin %.4f at z=%.2f", worst, worst_z), timer.seconds());
}

void criterion_7() {
  Timer timer;
  RunOptions options;
  options.weight_sets = {WeightSetRequest::parse("simplex"), WeightSetRequest::parse("discrete:2"),
                         WeightSetRequest::parse("restricted:0.1,0.25")};
  const CellResult cell = run_cell(make_scenario(ScenarioName::fixed, 2000, 0.5), 5000, options);
  int disc = 0, restr = 0;
  for (const RepOutcome& o : cell.outcomes) {
    for (const SetOutcome& s : o.sets) {
      if (s.label == "discrete:2") disc += s.attained_at_true;
      else restr += s.attained_at_true;
    }
  }
  const double fd = disc / 5000.0, fr = restr / 5000.0;
  report(7, fd >= 0.95 && fr >= 0.95,
         "fixed r2=0.5 n=2000, 5000 reps: inf over H_n(2) and over H_n^delta attained at the true vertex >= 0.95",
         fmt("discrete:2 %.4f, restricted:0.1,0.25 %.4f", fd, fr), timer.seconds());
}

void criterion_8() {
  Timer timer;
  const VerifyReport rep = run_verification(kSeed);
  std::string failed;
  for (const CheckResult& c : rep.checks) {
    if (!c.passed) failed += c.name + " ";
  }
  report(8, rep.all_passed(), "solver property suite, 500 random instances",
         failed.empty() ? std::to_string(rep.checks.size()) + " checks passed" : "failed: " + failed,
         timer.seconds());
}

void criterion_9() {
  Timer timer;
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "nestavg_acceptance_determinism";
  std::vector<std::string> contents;
  for (int threads : {1, 4, 8}) {
    ExperimentConfig config;
    config.scenario = ScenarioName::fixed;
    config.n_values = {200, 400};
    config.r2_values = {0.5, 0.9};
    config.reps = 300;
    config.seed = kSeed;
    config.threads = threads;
    config.weight_sets = {WeightSetRequest::parse("simplex"), WeightSetRequest::parse("discrete:2")};
    config.out = (base / std::to_string(threads)).string();
    fs::remove_all(config.out);
    (void)simulate(config);
    std::ifstream is(fs::path(config.out) / "summary.csv", std::ios::binary);
    std::ostringstream buf;
    buf << is.rdbuf();
    contents.push_back(buf.str());
  }
  fs::remove_all(base);
  const bool ok = !contents[0].empty() && contents[0] == contents[1] && contents[0] == contents[2];
  report(9, ok, "summary.csv bit-identical across 1, 4 and 8 threads",
         fmt("%.0f bytes each", static_cast<double>(contents[0].size())), timer.seconds());
}

}  // namespace

int main() {
  std::printf("acceptance run, master seed %llu, %d worker threads\n",
              static_cast<unsigned long long>(kSeed), worker_threads());
  try {
    criteria_1_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
  } catch (const std::exception& ex) {
    std::printf("FAIL  aborted: %s\n", ex.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
