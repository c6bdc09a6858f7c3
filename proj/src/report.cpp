#include "nestavg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "nestavg/errors.hpp"
#include "nestavg/stats.hpp"

namespace nestavg {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& text, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (seps.find(c) != std::string::npos) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw ArgumentError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw ArgumentError(key + ": expected an integer, got '" + text + "'");
  }
  return static_cast<int>(v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

std::string penalty_text(const Penalty& p) {
  return p.kind == Penalty::Kind::numeric ? fmt(p.value) : p.label();
}

std::string weight_set_text(const WeightSetRequest& w) {
  switch (w.kind) {
    case WeightSet::Kind::simplex:
      return "simplex";
    case WeightSet::Kind::discrete:
      return "discrete:" + std::to_string(w.grid);
    case WeightSet::Kind::restricted:
      return "restricted:" + fmt(w.delta) + "," + fmt(w.tau0);
  }
  return "simplex";
}

template <class T, class F>
std::string join(const std::vector<T>& items, const std::string& sep, F f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += f(items[i]);
  }
  return out;
}

RunOptions run_options(const ExperimentConfig& config) {
  RunOptions opt;
  opt.phis = config.phis;
  opt.weight_sets = config.weight_sets;
  return opt;
}

void check_common(const ExperimentConfig& config, std::vector<std::string>& fields,
                  std::vector<std::string>& messages) {
  auto bad = [&](const std::string& field, const std::string& msg) {
    fields.push_back(field);
    messages.push_back(field + ": " + msg);
  };
  if (config.reps < 1) bad("reps", "must be >= 1");
  if (!config.full && config.reps > 10000) bad("reps", "exceeds the desk cap 10000 (use --full)");
  if (config.threads < 1) bad("threads", "must be >= 1");
  if (config.out.empty()) bad("out", "must not be empty");
  if (config.rho && !(std::abs(*config.rho) < 1.0)) bad("rho", "|rho| must be < 1");
}

[[noreturn]] void throw_validation(const std::vector<std::string>& fields,
                                   const std::vector<std::string>& messages) {
  std::string what = "invalid configuration:";
  for (const auto& m : messages) what += "\n  " + m;
  throw ValidationError(fields, what);
}

}  // namespace

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string value = trim(raw_value);
  if (key == "scenario") {
    scenario = scenario_from_string(value);
  } else if (key == "n") {
    n_values.clear();
    for (const auto& s : split(value, ",")) n_values.push_back(parse_int(key, s));
  } else if (key == "r2") {
    r2_values.clear();
    if (value != "none") {
      for (const auto& s : split(value, ",")) r2_values.push_back(parse_double(key, s));
    }
  } else if (key == "reps") {
    reps = parse_int(key, value);
  } else if (key == "seed") {
    std::size_t used = 0;
    try {
      seed = std::stoull(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw ArgumentError("seed: expected an unsigned integer, got '" + value + "'");
    }
  } else if (key == "phi") {
    phis.clear();
    for (const auto& s : split(value, ",")) phis.push_back(Penalty::parse(s));
  } else if (key == "weight_set") {
    weight_sets.clear();
    for (const auto& s : split(value, "; \t")) weight_sets.push_back(WeightSetRequest::parse(s));
  } else if (key == "threads") {
    threads = parse_int(key, value);
  } else if (key == "out") {
    out = value;
  } else if (key == "rho") {
    if (value.empty() || value == "default") {
      rho.reset();
    } else {
      rho = parse_double(key, value);
    }
  } else if (key == "full") {
    if (value == "true" || value == "1") {
      full = true;
    } else if (value == "false" || value == "0") {
      full = false;
    } else {
      throw ArgumentError("full: expected true or false");
    }
  } else if (key == "beta") {
    beta.clear();
    for (const auto& s : split(value, ",")) beta.push_back(parse_double(key, s));
  } else if (key == "sizes") {
    sizes.clear();
    for (const auto& s : split(value, ",")) sizes.push_back(parse_int(key, s));
  } else if (key == "sigma2") {
    if (value.empty()) {
      sigma2.reset();
    } else {
      sigma2 = parse_double(key, value);
    }
  } else {
    throw ArgumentError("unknown configuration key '" + key + "'");
  }
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream os;
  os << "scenario = " << to_string(scenario) << "\n";
  os << "n = " << join(n_values, ",", [](int v) { return std::to_string(v); }) << "\n";
  os << "r2 = " << (r2_values.empty() ? "none" : join(r2_values, ",", fmt)) << "\n";
  os << "reps = " << reps << "\n";
  os << "seed = " << seed << "\n";
  os << "phi = " << join(phis, ",", penalty_text) << "\n";
  os << "weight_set = " << join(weight_sets, ";", weight_set_text) << "\n";
  os << "threads = " << threads << "\n";
  os << "out = " << out << "\n";
  os << "full = " << (full ? "true" : "false") << "\n";
  if (rho) os << "rho = " << fmt(*rho) << "\n";
  if (!beta.empty()) os << "beta = " << join(beta, ",", fmt) << "\n";
  if (!sizes.empty()) {
    os << "sizes = " << join(sizes, ",", [](int v) { return std::to_string(v); }) << "\n";
  }
  if (sigma2) os << "sigma2 = " << fmt(*sigma2) << "\n";
  return os.str();
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig config;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    config.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse(buf.str());
}

std::vector<ScenarioSpec> expand_grid(const ExperimentConfig& config) {
  std::vector<std::string> fields;
  std::vector<std::string> messages;
  auto bad = [&](const std::string& field, const std::string& msg) {
    fields.push_back(field);
    messages.push_back(field + ": " + msg);
  };
  check_common(config, fields, messages);
  if (config.n_values.empty()) bad("n", "at least one sample size is required");
  if (config.phis.empty()) bad("phi", "at least one penalty is required");
  if (config.weight_sets.empty()) bad("weight_set", "at least one weight set is required");
  for (int n : config.n_values) {
    if (!config.full && n > 10000) bad("n", std::to_string(n) + " exceeds the desk cap 10000 (use --full)");
  }

  std::vector<std::optional<double>> r2s;
  if (config.scenario == ScenarioName::toy) {
    if (!config.r2_values.empty()) bad("r2", "the toy scenario fixes sigma2 = 1 and takes no r2");
    r2s.push_back(std::nullopt);
  } else if (config.scenario == ScenarioName::custom) {
    if (config.beta.empty()) bad("beta", "custom scenario needs beta");
    if (config.sizes.empty()) bad("sizes", "custom scenario needs sizes");
    if (config.sigma2) {
      if (!config.r2_values.empty()) bad("r2", "give either r2 or sigma2, not both");
      r2s.push_back(std::nullopt);
    } else {
      if (config.r2_values.empty()) bad("r2", "custom scenario needs r2 or sigma2");
      for (double r : config.r2_values) r2s.push_back(r);
    }
  } else {
    if (config.r2_values.empty()) bad("r2", "scenario " + to_string(config.scenario) + " requires r2");
    for (double r : config.r2_values) r2s.push_back(r);
  }

  std::vector<ScenarioSpec> grid;
  if (fields.empty()) {
    for (const auto& r2 : r2s) {
      for (int n : config.n_values) {
        try {
          if (config.scenario == ScenarioName::custom) {
            grid.push_back(make_custom_scenario(n, config.beta, config.sizes,
                                                config.rho.value_or(0.0), r2, config.sigma2));
          } else {
            grid.push_back(make_scenario(config.scenario, n, r2, config.rho));
          }
        } catch (const ArgumentError& ex) {
          bad(std::string(std::string(ex.what()).find("r2") != std::string::npos ? "r2" : "n"),
              ex.what());
        }
      }
    }
  }
  if (!fields.empty()) throw_validation(fields, messages);
  return grid;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string sample_key(const ScenarioSpec& spec) {
  std::string key = to_string(spec.name);
  if (spec.r2) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_r2-%g", *spec.r2);
    key += buf;
  }
  return key + "_n" + std::to_string(spec.n);
}

void write_summary_csv(const fs::path& path, const SummaryTable& table) {
  std::ofstream os = open_for_write(path);
  os << "scenario,r2,n,estimator,metric,mean,mc_se,reps\n";
  for (const SummaryRow& r : table) {
    os << csv_field(r.scenario) << "," << (r.r2 ? fmt(*r.r2) : "") << "," << r.n << ","
       << csv_field(r.estimator) << "," << csv_field(r.metric) << "," << fmt(r.mean) << ","
       << fmt(r.mc_se) << "," << r.reps << "\n";
  }
  if (!os) throw IoError("failed writing " + path.string());
}

void write_samples_csv(const fs::path& path, const CellResult& cell) {
  std::ofstream os = open_for_write(path);
  os << "rep,loss_ratio_true,risk_ratio_true,inf_over_true,wl_equals_true";
  if (!cell.outcomes.empty()) {
    for (const auto& e : cell.outcomes.front().estimators) {
      os << "," << csv_field(e.label + ":loss_ratio") << "," << csv_field(e.label + ":risk_ratio");
    }
    for (const auto& s : cell.outcomes.front().sets) {
      os << "," << csv_field("inf@" + s.label + ":attained_at_true");
    }
  }
  os << "\n";
  for (const RepOutcome& o : cell.outcomes) {
    os << o.rep_index << "," << fmt(o.loss_ratio_true) << "," << fmt(o.risk_ratio_true) << ","
       << fmt(o.loss_ratio_optimal_inverse) << "," << (o.wl_equals_true ? 1 : 0);
    for (const auto& e : o.estimators) os << "," << fmt(e.loss_ratio) << "," << fmt(e.risk_ratio);
    for (const auto& s : o.sets) os << "," << (s.attained_at_true ? 1 : 0);
    os << "\n";
  }
  if (!os) throw IoError("failed writing " + path.string());
}

void write_manifest(const fs::path& dir, const ExperimentConfig& config,
                    const std::string& command) {
  const std::string body = config.serialize();
  std::ofstream os = open_for_write(dir / "manifest.txt");
  os << "# nestavg " << kVersion << "\n";
  os << "# command = " << command << "\n";
  os << "# config_hash = " << fnv1a_hex(body) << "\n";
  os << "# reproduce with: nestavg " << command << " --config manifest.txt\n";
  os << body;
  if (!os) throw IoError("failed writing manifest in " + dir.string());
}

ExperimentResult simulate(const ExperimentConfig& config) {
  const std::vector<ScenarioSpec> grid = expand_grid(config);
  const fs::path dir(config.out);
  ensure_dir(dir);
  ExperimentResult result =
      run_experiment(grid, config.reps, config.seed, config.threads, run_options(config));
  write_summary_csv(dir / "summary.csv", result.table);
  for (const CellResult& cell : result.cells) {
    write_samples_csv(dir / ("samples_" + sample_key(cell.spec) + ".csv"), cell);
  }
  write_manifest(dir, config, "simulate");
  return result;
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string svg_plot(const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<Series>& series) {
  constexpr double width = 800, height = 600;
  constexpr double left = 80, right = 200, top = 50, bottom = 70;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) {
    x0 = 0;
    x1 = 1;
    y0 = 0;
    y1 = 1;
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream os;
  char buf[160];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
        "viewBox=\"0 0 800 600\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
     << escape_xml(title) << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                left, top, pw, ph);
  os << buf;
  for (int t = 0; t <= 5; ++t) {
    const double xv = x0 + (x1 - x0) * t / 5.0;
    const double yv = y0 + (y1 - y0) * t / 5.0;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.4g</text>\n",
                  px(xv), top + ph, px(xv), top + ph + 5, px(xv), top + ph + 20, xv);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n",
                  left - 5, py(yv), left, py(yv), left - 8, py(yv) + 4, yv);
    os << buf;
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 25
     << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
  os << "<text transform=\"translate(22," << top + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % 8];
    os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].x[i]) || !std::isfinite(series[s].y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(series[s].x[i]), py(series[s].y[i]));
      os << buf;
    }
    os << "\"/>\n";
    const double ly = top + 15 + 18.0 * static_cast<double>(s);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
                  "stroke-width=\"2\"/>",
                  left + pw + 15, ly, left + pw + 40, ly, color);
    os << buf << "<text x=\"" << left + pw + 45 << "\" y=\"" << ly + 4 << "\">"
       << escape_xml(series[s].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

Figure figure_from_string(const std::string& text) {
  if (text == "fig1a") return Figure::fig1a;
  if (text == "fig1b") return Figure::fig1b;
  if (text == "fig2") return Figure::fig2;
  throw ArgumentError("unknown figure '" + text + "' (fig1a|fig1b|fig2)");
}

std::string to_string(Figure figure) {
  switch (figure) {
    case Figure::fig1a:
      return "fig1a";
    case Figure::fig1b:
      return "fig1b";
    case Figure::fig2:
      return "fig2";
  }
  return "fig";
}

namespace {

void require_toy(const ExperimentConfig& config, const std::string& figure) {
  std::vector<std::string> fields;
  std::vector<std::string> messages;
  check_common(config, fields, messages);
  if (config.scenario != ScenarioName::toy) {
    fields.push_back("scenario");
    messages.push_back("scenario: " + figure + " requires the toy scenario");
  }
  if (!fields.empty()) throw_validation(fields, messages);
}

RunOptions loss_only() {
  RunOptions opt;
  opt.phis.clear();
  opt.weight_sets.clear();
  return opt;
}

}  // namespace

FigureData figure1a(const ExperimentConfig& config) {
  require_toy(config, "fig1a");
  std::vector<ScenarioSpec> grid;
  for (int n = 100; n <= 2000; n += 100) grid.push_back(make_scenario(ScenarioName::toy, n, std::nullopt));
  const ExperimentResult res =
      run_experiment(grid, config.reps, config.seed, config.threads, loss_only());
  FigureData fig;
  fig.title = "Pr(w^L = w_2^0), toy scenario";
  fig.x_label = "n";
  fig.y_label = "probability";
  fig.columns = {"n", "probability", "mc_se"};
  Series s{"empirical", {}, {}};
  Series half{"1/2", {}, {}};
  for (const CellResult& cell : res.cells) {
    std::vector<double> hits;
    for (const RepOutcome& o : cell.outcomes) hits.push_back(o.wl_equals_true ? 1.0 : 0.0);
    const MeanSe ms = mean_and_se(hits);
    fig.rows.push_back({static_cast<double>(cell.spec.n), ms.mean, ms.se});
    s.x.push_back(cell.spec.n);
    s.y.push_back(ms.mean);
    half.x.push_back(cell.spec.n);
    half.y.push_back(0.5);
  }
  fig.series = {s, half};
  return fig;
}

FigureData figure1b(const ExperimentConfig& config) {
  require_toy(config, "fig1b");
  const std::vector<int> ns{100, 1000, 2000};
  std::vector<ScenarioSpec> grid;
  for (int n : ns) grid.push_back(make_scenario(ScenarioName::toy, n, std::nullopt));
  const ExperimentResult res =
      run_experiment(grid, config.reps, config.seed, config.threads, loss_only());
  std::vector<double> xs;
  for (int i = 1; i <= 99; ++i) xs.push_back(i / 100.0);
  FigureData fig;
  fig.title = "Density of inf L_n / L_n(w_2^0), ties at 1 removed";
  fig.x_label = "ratio";
  fig.y_label = "density";
  fig.columns = {"x"};
  std::vector<std::vector<double>> cols;
  for (const CellResult& cell : res.cells) {
    std::vector<double> samples;
    for (const RepOutcome& o : cell.outcomes) {
      if (std::abs(o.loss_ratio_optimal_inverse - 1.0) >= 1e-9) {
        samples.push_back(o.loss_ratio_optimal_inverse);
      }
    }
    fig.columns.push_back("kde_n" + std::to_string(cell.spec.n));
    cols.push_back(kde(samples, xs));
    fig.series.push_back({"n=" + std::to_string(cell.spec.n), xs, cols.back()});
  }
  std::vector<double> density;
  for (double x : xs) density.push_back(beta_pdf(0.5, 0.5, x));
  fig.columns.push_back("beta_density");
  cols.push_back(density);
  fig.series.push_back({"Beta(1/2,1/2)", xs, density});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<double> row{xs[i]};
    for (const auto& c : cols) row.push_back(c[i]);
    fig.rows.push_back(row);
  }
  return fig;
}

FigureData figure2(const ExperimentConfig& config) {
  std::vector<std::string> fields;
  std::vector<std::string> messages;
  if (config.scenario != ScenarioName::fixed) {
    fields.push_back("scenario");
    messages.push_back("scenario: fig2 requires the fixed scenario");
  }
  if (config.rho && *config.rho != 0.0) {
    fields.push_back("rho");
    messages.push_back("rho: fig2 requires rho = 0");
  }
  if (!fields.empty()) throw_validation(fields, messages);
  ExperimentConfig cfg = config;
  cfg.rho = 0.0;
  const std::vector<ScenarioSpec> grid = expand_grid(cfg);
  RunOptions opt;
  opt.phis = {Penalty::logn()};
  opt.weight_sets = {WeightSetRequest{}};
  const ExperimentResult res = run_experiment(grid, cfg.reps, cfg.seed, cfg.threads, opt);

  std::vector<double> zs;
  for (int i = 101; i <= 500; ++i) zs.push_back(i / 100.0);
  const ScenarioSpec& first = grid.front();
  const double b = first.sizes[static_cast<std::size_t>(first.m0 - 1)] / 2.0;
  std::vector<double> reference;
  for (double z : zs) reference.push_back(0.5 * (1.0 - beta_cdf(0.5, b, 1.0 - 1.0 / z)));

  FigureData fig;
  fig.title = "Survival of loss ratios against the half-Beta bound";
  fig.x_label = "z";
  fig.y_label = "Pr(ratio >= z)";
  fig.columns = {"z", "reference"};
  std::vector<std::vector<double>> cols{reference};
  fig.series.push_back({"reference", zs, reference});
  for (const CellResult& cell : res.cells) {
    const std::string key = sample_key(cell.spec);
    std::vector<double> truth;
    std::vector<double> logn;
    for (const RepOutcome& o : cell.outcomes) {
      truth.push_back(o.loss_ratio_true);
      logn.push_back(o.estimator("logn").loss_ratio);
    }
    const double m = static_cast<double>(cell.outcomes.size());
    for (const auto& [name, samples] : {std::pair{"true", truth}, std::pair{"logn", logn}}) {
      const std::vector<double> surv = survival_curve(samples, zs);
      std::vector<double> se;
      for (double p : surv) se.push_back(std::sqrt(p * (1.0 - p) / m));
      fig.columns.push_back(std::string(name) + "_" + key);
      fig.columns.push_back(std::string(name) + "_" + key + "_se");
      cols.push_back(surv);
      cols.push_back(se);
      fig.series.push_back({std::string(name) + " " + key, zs, surv});
    }
  }
  for (std::size_t i = 0; i < zs.size(); ++i) {
    std::vector<double> row{zs[i]};
    for (const auto& c : cols) row.push_back(c[i]);
    fig.rows.push_back(row);
  }
  return fig;
}

FigureData write_figure(const ExperimentConfig& config, Figure figure) {
  FigureData fig;
  switch (figure) {
    case Figure::fig1a:
      fig = figure1a(config);
      break;
    case Figure::fig1b:
      fig = figure1b(config);
      break;
    case Figure::fig2:
      fig = figure2(config);
      break;
  }
  const fs::path dir(config.out);
  ensure_dir(dir);
  const std::string name = to_string(figure);
  {
    std::ofstream os = open_for_write(dir / (name + ".csv"));
    os << join(fig.columns, ",", csv_field) << "\n";
    for (const auto& row : fig.rows) os << join(row, ",", fmt) << "\n";
    if (!os) throw IoError("failed writing " + name + ".csv");
  }
  {
    std::ofstream os = open_for_write(dir / (name + ".svg"));
    os << svg_plot(fig.title, fig.x_label, fig.y_label, fig.series);
    if (!os) throw IoError("failed writing " + name + ".svg");
  }
  write_manifest(dir, config, "figures --figure " + name);
  return fig;
}

Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const std::vector<std::string> cells = split(line, ",");
    std::vector<double> row;
    bool numeric = true;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw ArgumentError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ArgumentError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(rows.front().size()) + " columns, found " +
                          std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ArgumentError(path.string() + ": no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void write_matrix_csv(const fs::path& path, const Matrix& m,
                      const std::vector<std::string>& header) {
  std::ofstream os = open_for_write(path);
  if (!header.empty()) os << join(header, ",", csv_field) << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << fmt(m(i, j));
    os << "\n";
  }
  if (!os) throw IoError("failed writing " + path.string());
}

Selection select_weights(const Matrix& x, const Vector& y, const std::vector<int>& sizes,
                         const Penalty& phi, const WeightSetRequest& set, int m0) {
  if (y.size() != x.rows()) {
    throw ArgumentError("response has " + std::to_string(y.size()) + " rows but design has " +
                        std::to_string(x.rows()));
  }
  if (sizes.empty() || sizes.back() != x.cols()) {
    throw ArgumentError("largest model size must equal the number of design columns (" +
                        std::to_string(x.cols()) + ")");
  }
  const NestedDesign design = NestedDesign::factorize(x, sizes);
  const ProjectionCoefficients c_y = coords(design, y);
  Selection out;
  out.sigma2_hat = sigma_hat(design, c_y);
  out.sizes = sizes;
  for (int m = 1; m <= design.num_models(); ++m) out.a.push_back(quad_form(c_y, m));
  const SeparableSimplexObjective crit =
      build_criterion(design, c_y, phi.resolve(design.n()), out.sigma2_hat);
  SolveReport rep;
  switch (set.kind) {
    case WeightSet::Kind::simplex:
      rep = solve_simplex(crit);
      break;
    case WeightSet::Kind::discrete:
      rep = solve_discrete(crit, set.grid);
      break;
    case WeightSet::Kind::restricted:
      rep = solve_restricted(crit, set.delta, set.tau0, m0, design.n());
      break;
  }
  out.weights = rep.weights.w;
  out.criterion = rep.objective_value;
  out.method = rep.method;
  return out;
}

}  // namespace nestavg
