#ifndef NESTAVG_REPORT_HPP
#define NESTAVG_REPORT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nestavg/montecarlo.hpp"

namespace nestavg {

inline constexpr const char* kVersion = "1.0.0";

/**
 * Experiment configuration. The file form is flat `key = value` lines with
 * `#` comments. Keys: scenario, n, r2, reps, seed, phi, weight_set, threads,
 * out, rho, full, and for custom scenarios beta, sizes, sigma2. Lists in n,
 * r2, phi, beta and sizes are comma separated; weight_set entries are
 * separated by ';' or whitespace (restricted:delta,tau0 contains a comma).
 */
struct ExperimentConfig {
  ScenarioName scenario = ScenarioName::fixed;
  std::vector<int> n_values{1000};
  std::vector<double> r2_values;  ///< empty for toy (and custom with sigma2)
  int reps = 1000;
  std::uint64_t seed = 20240607;
  std::vector<Penalty> phis{Penalty::mma(), Penalty::logn()};
  std::vector<WeightSetRequest> weight_sets{WeightSetRequest{}};
  int threads = 1;
  std::string out = "out";
  std::optional<double> rho;
  bool full = false;
  std::vector<double> beta;
  std::vector<int> sizes;
  std::optional<double> sigma2;

  /// Sets one key from its text form; throws ArgumentError naming the key.
  void set(const std::string& key, const std::string& value);
  /// Canonical text form; parse(serialize()) reproduces the config.
  std::string serialize() const;
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Expands the (n, r2) grid into validated scenarios. Throws ValidationError
/// listing every offending field, including the desk caps n <= 1e4 and
/// reps <= 1e4 that apply unless `full` is set.
std::vector<ScenarioSpec> expand_grid(const ExperimentConfig& config);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

std::string sample_key(const ScenarioSpec& spec);

void write_summary_csv(const std::filesystem::path& path, const SummaryTable& table);
void write_samples_csv(const std::filesystem::path& path, const CellResult& cell);
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const std::string& command);

/// Writes summary.csv, samples_<key>.csv and manifest.txt under config.out.
ExperimentResult simulate(const ExperimentConfig& config);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static 800 x 600 SVG with one polyline per series and axis ticks.
std::string svg_plot(const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<Series>& series);

enum class Figure { fig1a, fig1b, fig2 };
Figure figure_from_string(const std::string& text);
std::string to_string(Figure figure);

struct FigureData {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<Series> series;
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// fig1a: Pr(w^L = w_2^0) for the toy scenario at n = 100..2000 step 100.
FigureData figure1a(const ExperimentConfig& config);
/// fig1b: KDE of L_n(w^L)/L_n(w_2^0) (ties at 1 removed) at n in {100, 1000, 2000}
/// with the Beta(1/2, 1/2) density.
FigureData figure1b(const ExperimentConfig& config);
/// fig2: survival of L_n(w_{M0+1}^0)/inf L_n and L_n(w_logn)/inf L_n for the
/// fixed scenario with rho = 0, plus the half-Beta reference line.
FigureData figure2(const ExperimentConfig& config);

/// Computes a figure and writes <name>.csv and <name>.svg under config.out.
FigureData write_figure(const ExperimentConfig& config, Figure figure);

/// Numeric CSV; a first row that does not parse as numbers is taken as a header.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const std::vector<std::string>& header);

struct Selection {
  std::vector<double> weights;
  double criterion = 0.0;   ///< G_n at the selected weights
  double sigma2_hat = 0.0;
  std::vector<double> a;    ///< y'P_m y
  std::vector<int> sizes;
  SolveMethod method = SolveMethod::isotonic;
};

/// Minimizes G_n with penalty `phi` over the requested weight set. `m0` is
/// only used by the restricted set.
Selection select_weights(const Matrix& x, const Vector& y, const std::vector<int>& sizes,
                         const Penalty& phi, const WeightSetRequest& set, int m0 = 0);

}  // namespace nestavg

#endif  // NESTAVG_REPORT_HPP
