// Command-line front end: simulate, figures, verify, solve, generate.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "nestavg/errors.hpp"
#include "nestavg/report.hpp"
#include "nestavg/verify.hpp"

namespace {

using namespace nestavg;

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  bool full = false;
};

void add_config_flags(CLI::App* app, ConfigFlags& flags) {
  app->add_option("--config", flags.config_path, "flat key = value config file");
  static const char* keys[][2] = {
      {"scenario", "toy | fixed | div1 | div2 | custom"},
      {"n", "sample sizes, comma separated"},
      {"r2", "population R^2 values, comma separated (none for toy)"},
      {"reps", "replications per cell"},
      {"seed", "master seed"},
      {"phi", "penalties: mma, logn or numbers, comma separated"},
      {"weight-set", "simplex | discrete:N | restricted:delta,tau0; ';' separated"},
      {"threads", "worker threads"},
      {"out", "output directory"},
      {"rho", "AR(1) covariate correlation"},
      {"beta", "custom coefficients, comma separated"},
      {"sizes", "custom nesting sizes, comma separated"},
      {"sigma2", "custom error variance"},
  };
  for (const auto& k : keys) {
    const std::string key = k[0];
    app->add_option("--" + key, flags.values[key], k[1]);
  }
  app->add_flag("--full", flags.full, "lift the desk caps n <= 1e4 and reps <= 1e4");
}

ExperimentConfig resolve_config(const CLI::App* app, const ConfigFlags& flags) {
  ExperimentConfig config;
  if (!flags.config_path.empty()) config = ExperimentConfig::load(flags.config_path);
  for (const auto& [key, value] : flags.values) {
    if (app->count("--" + key) > 0) config.set(key, value);
  }
  if (flags.full) config.full = true;
  return config;
}

std::vector<int> parse_sizes(const std::string& text) {
  ExperimentConfig scratch;
  scratch.set("sizes", text);
  return scratch.sizes;
}

int run_solve(const std::string& design_path, const std::string& response_path,
              const std::string& sizes_text, const std::string& phi_text,
              const std::string& set_text, int m0, const std::string& out_path) {
  const Matrix x = read_matrix_csv(design_path);
  const Matrix y = read_matrix_csv(response_path);
  if (y.cols() != 1) throw ArgumentError("response CSV must have exactly one column");
  const std::vector<int> sizes =
      sizes_text.empty() ? std::vector<int>{static_cast<int>(x.cols())} : parse_sizes(sizes_text);
  const Selection sel = select_weights(x, y.col(0), sizes, Penalty::parse(phi_text),
                                       WeightSetRequest::parse(set_text), m0);
  std::FILE* f = out_path.empty() ? stdout : std::fopen(out_path.c_str(), "w");
  if (f == nullptr) throw IoError("cannot write " + out_path);
  std::fprintf(f, "# G_n = %.17g\n# sigma2_hat = %.17g\n# method = %s\n", sel.criterion,
               sel.sigma2_hat, to_string(sel.method).c_str());
  std::fprintf(f, "model,k,a,weight\n");
  for (std::size_t m = 0; m < sel.weights.size(); ++m) {
    std::fprintf(f, "%zu,%d,%.17g,%.17g\n", m + 1, sel.sizes[m], sel.a[m], sel.weights[m]);
  }
  if (f != stdout) {
    std::fclose(f);
    std::printf("G_n = %.10g  sigma2_hat = %.10g  written to %s\n", sel.criterion,
                sel.sigma2_hat, out_path.c_str());
  }
  return 0;
}

int run_generate(const ExperimentConfig& config, std::uint64_t rep, const std::string& dir) {
  const std::vector<ScenarioSpec> grid = expand_grid(config);
  if (grid.size() != 1) throw ArgumentError("generate needs exactly one n and at most one r2");
  const GeneratedData data = generate(grid.front(), rep, config.seed);
  std::filesystem::create_directories(dir);
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) header.push_back("x" + std::to_string(j + 1));
  write_matrix_csv(std::filesystem::path(dir) / "design.csv", data.x, header);
  write_matrix_csv(std::filesystem::path(dir) / "response.csv", data.y, {"y"});
  write_matrix_csv(std::filesystem::path(dir) / "mean.csv", data.mu, {"mu"});
  std::string sizes;
  for (int k : grid.front().sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(k);
  std::printf("wrote %s/{design,response,mean}.csv  sizes=%s  m0=%d\n", dir.c_str(),
              sizes.c_str(), grid.front().m0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested least-squares model averaging: weight selection and simulations"};
  app.require_subcommand(1);

  ConfigFlags sim_flags;
  CLI::App* sim = app.add_subcommand("simulate", "run replicated experiments");
  add_config_flags(sim, sim_flags);

  ConfigFlags fig_flags;
  std::string figure = "fig1a";
  CLI::App* fig = app.add_subcommand("figures", "compute figure data and SVG plots");
  add_config_flags(fig, fig_flags);
  fig->add_option("--figure", figure, "fig1a | fig1b | fig2")->required();

  std::uint64_t verify_seed = 1;
  int verify_instances = 500;
  bool corrupt = false;
  CLI::App* ver = app.add_subcommand("verify", "run the invariant suite");
  ver->add_option("--seed", verify_seed, "seed for random instances");
  ver->add_option("--instances", verify_instances, "random instances");
  ver->add_flag("--corrupt-quadratic-sign", corrupt, "fault injection for the suite itself");

  std::string design_path, response_path, sizes_text, phi_text = "mma", set_text = "simplex",
                                                     out_path;
  int m0 = 0;
  CLI::App* sol = app.add_subcommand("solve", "select weights for a data set");
  sol->add_option("--design", design_path, "design CSV (n x k_M)")->required();
  sol->add_option("--response", response_path, "response CSV (n x 1)")->required();
  sol->add_option("--sizes", sizes_text, "nesting sizes k_1,...,k_M (default: one model)");
  sol->add_option("--phi", phi_text, "mma | logn | number");
  sol->add_option("--weight-set", set_text, "simplex | discrete:N | restricted:delta,tau0");
  sol->add_option("--m0", m0, "number of under-fitted models (restricted set only)");
  sol->add_option("--out", out_path, "weight CSV (default: stdout)");

  ConfigFlags gen_flags;
  std::uint64_t gen_rep = 0;
  CLI::App* gen = app.add_subcommand("generate", "export one simulated data set as CSV");
  add_config_flags(gen, gen_flags);
  gen->add_option("--rep", gen_rep, "replication index");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const ExperimentConfig config = resolve_config(sim, sim_flags);
      const ExperimentResult res = simulate(config);
      std::printf("%-8s %-6s %-7s %-28s %-16s %12s %10s\n", "scenario", "r2", "n", "estimator",
                  "metric", "mean", "mc_se");
      for (const SummaryRow& r : res.table) {
        std::printf("%-8s %-6s %-7d %-28s %-16s %12.5f %10.5f\n", r.scenario.c_str(),
                    r.r2 ? std::to_string(*r.r2).substr(0, 4).c_str() : "-", r.n,
                    r.estimator.c_str(), r.metric.c_str(), r.mean, r.mc_se);
      }
      std::printf("wrote %s/summary.csv\n", config.out.c_str());
    } else if (fig->parsed()) {
      const ExperimentConfig config = resolve_config(fig, fig_flags);
      write_figure(config, figure_from_string(figure));
      std::printf("wrote %s/%s.csv and %s.svg\n", config.out.c_str(), figure.c_str(),
                  figure.c_str());
    } else if (ver->parsed()) {
      VerifyOptions opt;
      opt.instances = verify_instances;
      opt.corrupt_quadratic_sign = corrupt;
      const VerifyReport report = run_verification(verify_seed, opt);
      std::fputs(report.format().c_str(), stdout);
      return report.all_passed() ? 0 : 1;
    } else if (sol->parsed()) {
      return run_solve(design_path, response_path, sizes_text, phi_text, set_text, m0, out_path);
    } else if (gen->parsed()) {
      ExperimentConfig config = resolve_config(gen, gen_flags);
      if (gen_flags.values["out"].empty() && gen->count("--out") == 0) config.out = "data";
      return run_generate(config, gen_rep, config.out);
    }
  } catch (const ValidationError& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
