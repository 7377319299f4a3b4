#include "esim/experiment.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <climits>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <type_traits>

#include <json.hpp>

#include "esim/problems.hpp"

namespace esim {

namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_value(const std::string& key, std::string_view text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  std::from_chars_result r{};
  if constexpr (std::is_floating_point_v<T>)
    r = std::from_chars(first, last, value);
  else
    r = std::from_chars(first, last, value, 10);
  if (r.ec != std::errc{} || r.ptr != last)
    throw ConfigError(key, "cannot parse value '" + std::string(text) + "'");
  return value;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = trim(text.substr(start, comma - start));
    if (!item.empty()) out.emplace_back(item);
    start = comma + 1;
  }
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(std::string(line), "expected key=value");
    const std::string key{trim(line.substr(0, eq))};
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(std::string(line), "missing key before '='");
    if (value.empty()) throw ConfigError(key, "missing value");
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");

    if (key == "problem") {
      cfg.problems = split_list(value);
      if (cfg.problems.empty()) throw ConfigError(key, "empty problem list");
      for (const std::string& name : cfg.problems)
        if (!Problem::is_known(name)) throw ConfigError(key, "unknown problem '" + name + "'");
    } else if (key == "mu") {
      cfg.base.population = parse_value<int>(key, value);
    } else if (key == "islands") {
      cfg.base.islands = parse_value<int>(key, value);
    } else if (key == "generations") {
      cfg.base.generations = parse_value<int>(key, value);
    } else if (key == "migration_interval") {
      cfg.base.migration_interval = parse_value<int>(key, value);
    } else if (key == "swaps") {
      cfg.base.swaps = parse_value<int>(key, value);
    } else if (key == "tau") {
      cfg.base.activity_window = parse_value<int>(key, value);
    } else if (key == "sigma_fraction") {
      cfg.base.sigma_fraction = parse_value<double>(key, value);
    } else if (key == "seed") {
      cfg.base.seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "children_per_species") {
      cfg.base.children_per_species = parse_value<int>(key, value);
    } else if (key == "runs") {
      cfg.runs = parse_value<int>(key, value);
    } else if (key == "scan_pool") {
      cfg.scan_pool = parse_value<int>(key, value);
    } else if (key == "out") {
      cfg.out_dir = std::filesystem::path(std::string(value));
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  return cfg;
}

void apply_overrides(ExperimentConfig& config, const CommonOverrides& overrides) {
  if (overrides.seed) config.base.seed = *overrides.seed;
  if (overrides.runs) config.runs = *overrides.runs;
  if (overrides.out) config.out_dir = std::filesystem::path(*overrides.out);
  if (overrides.swaps) config.base.swaps = *overrides.swaps;
  if (overrides.generations) config.base.generations = *overrides.generations;
  if (overrides.migration_interval) config.base.migration_interval = *overrides.migration_interval;
}

void finalize_experiment(ExperimentConfig& config) {
  if (config.problems.empty()) config.problems = {config.base.problem};
  if (config.out_dir.empty()) config.out_dir = default_out_dir();
  if (config.runs < 1) throw ConfigError("runs", "must be at least 1");
  if (config.scan_pool < 1) throw ConfigError("scan_pool", "must be at least 1");
  for (const std::string& name : config.problems) {
    EsimConfig c = config.base;
    c.problem = name;
    validate(c);
  }
}

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv(kOutDirEnvVar); env != nullptr && *env != '\0')
    return std::filesystem::path(env);
  return std::filesystem::path("esim-out");
}

ProblemBatch run_problem_batch(std::string label, const EsimConfig& config, int runs,
                               int scan_pool, bool keep_history) {
  if (runs < 1) throw ConfigError("runs", "must be at least 1");
  if (scan_pool < 1) throw ConfigError("scan_pool", "must be at least 1");
  validate(config);
  const Problem problem = Problem::by_name(config.problem);

  ProblemBatch batch;
  batch.label = std::move(label);
  batch.config = config;
  batch.runs = runs;
  batch.event_generations = migration_generations(config);
  batch.traces.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    EsimConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(r);
    RunTrace trace = run(problem, c);
    if (!keep_history) trace.phenotype_history.resize(0, 0);
    batch.traces.push_back(std::move(trace));
  }

  const Eigen::Index len = batch.traces.front().activity.values.size();
  batch.mean_activity = Eigen::ArrayXd::Zero(len);
  for (const RunTrace& t : batch.traces) batch.mean_activity += t.activity.values;
  batch.mean_activity /= static_cast<double>(runs);

  if (runs >= 2) {
    std::vector<ActivitySeries> series;
    series.reserve(batch.traces.size());
    for (const RunTrace& t : batch.traces) series.push_back(t.activity);
    batch.significance = significance_scan(series, batch.event_generations,
                                           config.activity_window, 0.01, scan_pool);
    batch.has_significance = true;
  }

  batch.has_events = !batch.traces.front().sensitivity.empty();
  if (batch.has_events) {
    double total = 0.0;
    double first = 0.0;
    for (const RunTrace& t : batch.traces) {
      double run_mean = 0.0;
      for (const SensitivityEvent& e : t.sensitivity) run_mean += e.mean;
      total += run_mean / static_cast<double>(t.sensitivity.size());
      first += t.sensitivity.front().mean;
    }
    batch.mean_s = total / static_cast<double>(runs);
    batch.mean_s_first_event = first / static_cast<double>(runs);
  }
  return batch;
}

std::string format_number(double value) {
  std::array<char, 64> buf;
  const std::to_chars_result r = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), r.ptr);
}

void write_activity_header(std::ostream& os) {
  os << "problem,run,generation,delta_ph,is_migration\n";
}

void append_activity_rows(std::ostream& os, const ProblemBatch& batch) {
  for (int r = 0; r < batch.runs; ++r) {
    const ActivitySeries& s = batch.traces[static_cast<std::size_t>(r)].activity;
    for (int t = s.first_generation; t <= s.last_generation(); ++t) {
      const bool event = std::binary_search(batch.event_generations.begin(),
                                            batch.event_generations.end(), t);
      os << batch.label << ',' << r << ',' << t << ',' << format_number(s.at_generation(t))
         << ',' << (event ? '1' : '0') << '\n';
    }
  }
}

void write_sensitivity_header(std::ostream& os) {
  os << "problem,run,event_generation,species_id,fraction\n";
}

void append_sensitivity_rows(std::ostream& os, const ProblemBatch& batch) {
  if (!batch.has_events) return;
  for (int r = 0; r < batch.runs; ++r) {
    const auto& events = batch.traces[static_cast<std::size_t>(r)].sensitivity;
    double run_mean = 0.0;
    for (const SensitivityEvent& e : events) {
      for (Eigen::Index id = 0; id < e.per_species.size(); ++id)
        os << batch.label << ',' << r << ',' << e.generation << ',' << id << ','
           << format_number(e.per_species[id]) << '\n';
      os << batch.label << ',' << r << ',' << e.generation << ",-1," << format_number(e.mean)
         << '\n';
      run_mean += e.mean;
    }
    os << batch.label << ',' << r << ",-1,-1,"
       << format_number(run_mean / static_cast<double>(events.size())) << '\n';
  }
  const std::size_t n_events = batch.traces.front().sensitivity.size();
  for (std::size_t e = 0; e < n_events; ++e) {
    double mean = 0.0;
    for (const RunTrace& t : batch.traces) mean += t.sensitivity[e].mean;
    os << batch.label << ",-1," << batch.traces.front().sensitivity[e].generation << ",-1,"
       << format_number(mean / static_cast<double>(batch.runs)) << '\n';
  }
  os << batch.label << ",-1,-1,-1," << format_number(batch.mean_s) << '\n';
}

void write_significance_header(std::ostream& os) {
  os << "problem,generation,p_value,flagged,is_migration\n";
}

void append_significance_rows(std::ostream& os, const ProblemBatch& batch) {
  if (!batch.has_significance) return;
  const SignificanceReport& rep = batch.significance;
  for (std::size_t i = 0; i < rep.p_values.size(); ++i) {
    const int t = rep.first_generation + static_cast<int>(i);
    os << batch.label << ',' << t << ',' << format_number(rep.p_values[i]) << ','
       << static_cast<int>(rep.flagged[i]) << ',' << static_cast<int>(rep.migration_attributed[i])
       << '\n';
  }
}

void write_summary_header(std::ostream& os) { os << "problem,mean_s,mean_s_first_event\n"; }

void append_summary_row(std::ostream& os, const ProblemBatch& batch) {
  os << batch.label << ',' << format_number(batch.mean_s) << ','
     << format_number(batch.mean_s_first_event) << '\n';
}

std::vector<PlotSeries> read_activity_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("csv", "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "problem,run,generation,delta_ph,is_migration")
    throw ConfigError("csv", "unrecognized header '" + line + "'");

  struct RawSeries {
    std::map<int, std::vector<std::pair<int, double>>> runs;  // run -> (generation, value)
    std::set<int> events;
  };
  std::vector<std::string> order;
  std::map<std::string, RawSeries, std::less<>> by_label;

  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 5> field;
    std::string_view rest = line;
    for (int i = 0; i < 5; ++i) {
      const std::size_t comma = rest.find(',');
      if (i < 4) {
        if (comma == std::string_view::npos)
          throw ConfigError("csv", "line " + std::to_string(line_no) + ": expected 5 fields");
        field[static_cast<std::size_t>(i)] = rest.substr(0, comma);
        rest = rest.substr(comma + 1);
      } else {
        if (comma != std::string_view::npos)
          throw ConfigError("csv", "line " + std::to_string(line_no) + ": expected 5 fields");
        field[static_cast<std::size_t>(i)] = rest;
      }
    }
    const std::string label{field[0]};
    const int run = parse_value<int>("csv", field[1]);
    const int generation = parse_value<int>("csv", field[2]);
    const double value = parse_value<double>("csv", field[3]);
    const int migration = parse_value<int>("csv", field[4]);
    auto [it, inserted] = by_label.try_emplace(label);
    if (inserted) order.push_back(label);
    it->second.runs[run].emplace_back(generation, value);
    if (migration != 0) it->second.events.insert(generation);
  }

  std::vector<PlotSeries> out;
  for (const std::string& label : order) {
    const RawSeries& raw = by_label.find(label)->second;
    const auto& reference = raw.runs.begin()->second;
    for (const auto& [run, rows] : raw.runs) {
      if (rows.size() != reference.size())
        throw ConfigError("csv", "series '" + label + "': runs cover different generations");
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].first != reference[i].first)
          throw ConfigError("csv", "series '" + label + "': runs cover different generations");
    }
    for (std::size_t i = 1; i < reference.size(); ++i)
      if (reference[i].first != reference[i - 1].first + 1)
        throw ConfigError("csv", "series '" + label + "': generations not contiguous");

    PlotSeries series;
    series.label = label;
    series.first_generation = reference.empty() ? 0 : reference.front().first;
    series.values = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(reference.size()));
    for (const auto& [run, rows] : raw.runs)
      for (std::size_t i = 0; i < rows.size(); ++i)
        series.values[static_cast<Eigen::Index>(i)] += rows[i].second;
    series.values /= static_cast<double>(raw.runs.size());
    series.event_generations.assign(raw.events.begin(), raw.events.end());
    out.push_back(std::move(series));
  }
  return out;
}

namespace {

std::string escape_xml(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

std::string svg_coord(double v) { return format_number(std::round(v * 100.0) / 100.0); }

}  // namespace

void write_activity_svg(std::ostream& os, const std::string& title,
                        const std::vector<PlotSeries>& series) {
  constexpr double unit = 18.0;
  constexpr double margin_left = 130.0;
  constexpr double margin_right = 24.0;
  constexpr double margin_top = 48.0;
  constexpr double axis_height = 36.0;
  constexpr double width = 960.0;
  const double band = kSvgOffsetUnits * unit;
  const double plot_width = width - margin_left - margin_right;
  const double height = margin_top + band * static_cast<double>(series.size()) + axis_height;
  const double axis_y = height - axis_height;

  int t0 = INT_MAX;
  int t1 = INT_MIN;
  std::set<int> events;
  for (const PlotSeries& s : series) {
    if (s.values.size() == 0) continue;
    t0 = std::min(t0, s.first_generation);
    t1 = std::max(t1, s.first_generation + static_cast<int>(s.values.size()) - 1);
    events.insert(s.event_generations.begin(), s.event_generations.end());
  }
  if (t0 > t1) {
    t0 = 0;
    t1 = 1;
  }
  const double span = std::max(1, t1 - t0);
  const auto x_of = [&](double t) { return margin_left + plot_width * (t - t0) / span; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_coord(width) << "\" height=\""
     << svg_coord(height) << "\" viewBox=\"0 0 " << svg_coord(width) << ' ' << svg_coord(height)
     << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << svg_coord(width) << "\" height=\"" << svg_coord(height)
     << "\" fill=\"#ffffff\"/>\n";
  os << "<text x=\"" << svg_coord(margin_left) << "\" y=\"28\" font-family=\"sans-serif\" "
        "font-size=\"16\" fill=\"#202020\">"
     << escape_xml(title) << "</text>\n";

  for (int g : events) {
    if (g < t0 || g > t1) continue;
    const double x = x_of(g);
    os << "<line x1=\"" << svg_coord(x) << "\" y1=\"" << svg_coord(margin_top) << "\" x2=\""
       << svg_coord(x) << "\" y2=\"" << svg_coord(axis_y)
       << "\" stroke=\"#d8d8d8\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
  }

  os << "<line x1=\"" << svg_coord(margin_left) << "\" y1=\"" << svg_coord(axis_y) << "\" x2=\""
     << svg_coord(width - margin_right) << "\" y2=\"" << svg_coord(axis_y)
     << "\" stroke=\"#303030\" stroke-width=\"1\"/>\n";
  std::set<int> ticks = events;
  ticks.insert(t0);
  ticks.insert(t1);
  for (int tick : ticks) {
    if (tick < t0 || tick > t1) continue;
    const double x = x_of(tick);
    os << "<line x1=\"" << svg_coord(x) << "\" y1=\"" << svg_coord(axis_y) << "\" x2=\""
       << svg_coord(x) << "\" y2=\"" << svg_coord(axis_y + 5)
       << "\" stroke=\"#303030\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << svg_coord(x) << "\" y=\"" << svg_coord(axis_y + 20)
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#404040\" "
          "text-anchor=\"middle\">"
       << tick << "</text>\n";
  }
  os << "<text x=\"" << svg_coord(width - margin_right) << "\" y=\"" << svg_coord(axis_y + 34)
     << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#404040\" text-anchor=\"end\">"
        "generation</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    const double base_y = margin_top + band * static_cast<double>(k + 1) - 0.5 * unit;
    os << "<text x=\"8\" y=\"" << svg_coord(base_y - 1.5 * unit)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#202020\">" << escape_xml(s.label)
       << "</text>\n";
    if (s.values.size() == 0) continue;
    const Eigen::ArrayXd logs = s.values.max(kSvgLogFloor).log10();
    const double lmin = logs.minCoeff();
    const double lmax = logs.maxCoeff();
    const double lspan = lmax - lmin;
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
    for (Eigen::Index i = 0; i < logs.size(); ++i) {
      const double level = lspan > 0.0 ? kSvgSpanUnits * (logs[i] - lmin) / lspan : 0.0;
      if (i > 0) os << ' ';
      os << svg_coord(x_of(s.first_generation + static_cast<int>(i))) << ','
         << svg_coord(base_y - level * unit);
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
}

namespace {

/// Removes everything it opened unless commit() was reached.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    for (const std::filesystem::path& p : paths_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  }

  std::ofstream open(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open output file " + p.string());
    paths_.push_back(p);
    return os;
  }
  void commit() { committed_ = true; }

 private:
  std::vector<std::filesystem::path> paths_;
  bool committed_ = false;
};

void ensure_ok(std::ofstream& os, const std::string& name) {
  os.flush();
  if (!os) throw std::runtime_error("write failure: " + name);
}

struct EmitPlan {
  bool activity = false;
  bool sensitivity = false;
  bool significance = false;
  bool summary = false;
  std::optional<std::string> svg_name;
};

struct BatchSpec {
  std::string label;
  EsimConfig config;
};

nlohmann::ordered_json defaults_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["mu"] = cfg.base.population;
  j["islands"] = cfg.base.islands;
  j["generations"] = cfg.base.generations;
  j["migration_interval"] = cfg.base.migration_interval;
  j["swaps"] = cfg.base.swaps;
  j["tau"] = cfg.base.activity_window;
  j["sigma_fraction"] = cfg.base.sigma_fraction;
  j["seed"] = cfg.base.seed;
  j["children_per_species"] = cfg.base.children_per_species;
  j["runs"] = cfg.runs;
  j["scan_pool"] = cfg.scan_pool;
  return j;
}

void execute(const ExperimentConfig& cfg, const std::vector<BatchSpec>& specs,
             const EmitPlan& plan, const std::string& command) {
  std::filesystem::create_directories(cfg.out_dir);
  OutputGuard guard;
  std::ofstream activity;
  std::ofstream sensitivity;
  std::ofstream significance;
  std::ofstream summary;
  std::vector<std::string> outputs;
  if (plan.activity) {
    activity = guard.open(cfg.out_dir / "activity.csv");
    write_activity_header(activity);
    outputs.emplace_back("activity.csv");
  }
  if (plan.sensitivity) {
    sensitivity = guard.open(cfg.out_dir / "sensitivity.csv");
    write_sensitivity_header(sensitivity);
    outputs.emplace_back("sensitivity.csv");
  }
  if (plan.significance) {
    significance = guard.open(cfg.out_dir / "significance.csv");
    write_significance_header(significance);
    outputs.emplace_back("significance.csv");
  }
  if (plan.summary) {
    summary = guard.open(cfg.out_dir / "table2.csv");
    write_summary_header(summary);
    outputs.emplace_back("table2.csv");
  }

  std::vector<PlotSeries> svg_series;
  nlohmann::ordered_json batches = nlohmann::ordered_json::array();
  for (const BatchSpec& spec : specs) {
    ProblemBatch batch = run_problem_batch(spec.label, spec.config, cfg.runs, cfg.scan_pool);
    if (plan.activity) append_activity_rows(activity, batch);
    if (plan.sensitivity) append_sensitivity_rows(sensitivity, batch);
    if (plan.significance) append_significance_rows(significance, batch);
    if (plan.summary) append_summary_row(summary, batch);
    if (plan.svg_name) {
      PlotSeries series;
      series.label = batch.label;
      series.first_generation = batch.traces.front().activity.first_generation;
      series.values = batch.mean_activity;
      series.event_generations = batch.event_generations;
      svg_series.push_back(std::move(series));
    }

    nlohmann::ordered_json bj;
    bj["label"] = batch.label;
    bj["problem"] = spec.config.problem;
    bj["swaps"] = spec.config.swaps;
    bj["runs"] = cfg.runs;
    nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
    for (int r = 0; r < cfg.runs; ++r)
      seeds.push_back(spec.config.seed + static_cast<std::uint64_t>(r));
    bj["seeds"] = std::move(seeds);
    if (batch.has_events) {
      bj["mean_s"] = batch.mean_s;
      bj["mean_s_first_event"] = batch.mean_s_first_event;
    }
    batches.push_back(std::move(bj));

    std::cerr << '[' << command << "] " << batch.label << ": " << cfg.runs << " runs done";
    if (batch.has_events) std::cerr << ", mean S " << format_number(batch.mean_s);
    std::cerr << '\n';
  }

  if (plan.svg_name) {
    std::ofstream svg = guard.open(cfg.out_dir / *plan.svg_name);
    write_activity_svg(svg, command, svg_series);
    ensure_ok(svg, *plan.svg_name);
    outputs.push_back(*plan.svg_name);
  }

  nlohmann::ordered_json manifest;
  manifest["command"] = command;
  manifest["defaults"] = defaults_json(cfg);
  manifest["out_dir"] = cfg.out_dir.string();
  manifest["batches"] = std::move(batches);
  outputs.emplace_back("manifest.json");
  manifest["outputs"] = outputs;
  nlohmann::ordered_json notes;
  notes["activity.is_migration"] = "1 exactly at migration event generations";
  notes["sensitivity.aggregates"] =
      "species_id -1: event mean over species; event_generation -1: run mean over events; "
      "run -1: across-run mean (per event, and over all events when event_generation is -1)";
  notes["significance.is_migration"] =
      "1 when the generation lies in (g, g+tau] for a migration generation g, the span in "
      "which the compared activity windows straddle the event";
  if (plan.svg_name) {
    nlohmann::ordered_json svg;
    svg["log_floor"] = kSvgLogFloor;
    svg["span_units"] = kSvgSpanUnits;
    svg["offset_units_between_series"] = kSvgOffsetUnits;
    notes["svg"] = std::move(svg);
  }
  manifest["notes"] = std::move(notes);
  std::ofstream manifest_os = guard.open(cfg.out_dir / "manifest.json");
  manifest_os << manifest.dump(2) << '\n';
  ensure_ok(manifest_os, "manifest.json");

  if (plan.activity) ensure_ok(activity, "activity.csv");
  if (plan.sensitivity) ensure_ok(sensitivity, "sensitivity.csv");
  if (plan.significance) ensure_ok(significance, "significance.csv");
  if (plan.summary) ensure_ok(summary, "table2.csv");
  guard.commit();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ConfigError("config", "cannot read file " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<BatchSpec> per_problem_specs(const ExperimentConfig& cfg) {
  std::vector<BatchSpec> specs;
  specs.reserve(cfg.problems.size());
  for (const std::string& name : cfg.problems) {
    EsimConfig c = cfg.base;
    c.problem = name;
    specs.push_back({name, c});
  }
  return specs;
}

}  // namespace

void cmd_run(const std::filesystem::path& config_file, const CommonOverrides& overrides) {
  ExperimentConfig cfg = parse_experiment_config(read_file(config_file));
  apply_overrides(cfg, overrides);
  finalize_experiment(cfg);
  EmitPlan plan;
  plan.activity = true;
  plan.sensitivity = true;
  plan.significance = true;
  execute(cfg, per_problem_specs(cfg), plan, "run");
}

void cmd_table2(const CommonOverrides& overrides) {
  ExperimentConfig cfg;
  cfg.problems = Problem::suite();
  apply_overrides(cfg, overrides);
  finalize_experiment(cfg);
  EmitPlan plan;
  plan.sensitivity = true;
  plan.summary = true;
  execute(cfg, per_problem_specs(cfg), plan, "table2");
}

void cmd_figure(const std::string& which, const CommonOverrides& overrides) {
  if (which == "fig4") {
    ExperimentConfig cfg;
    cfg.problems = Problem::suite();
    apply_overrides(cfg, overrides);
    finalize_experiment(cfg);
    EmitPlan plan;
    plan.activity = true;
    plan.significance = true;
    plan.svg_name = "fig4.svg";
    execute(cfg, per_problem_specs(cfg), plan, "figure fig4");
  } else if (which == "fig6") {
    if (overrides.swaps)
      throw ConfigError("swaps", "figure fig6 sweeps swaps over 0,1,10,100; the flag does not apply");
    ExperimentConfig cfg;
    cfg.problems = {"DTLZ3"};
    cfg.runs = 50;
    apply_overrides(cfg, overrides);
    finalize_experiment(cfg);
    std::vector<BatchSpec> specs;
    for (int swaps : {0, 1, 10, 100}) {
      EsimConfig c = cfg.base;
      c.problem = "DTLZ3";
      c.swaps = swaps;
      specs.push_back({"DTLZ3:swaps=" + std::to_string(swaps), c});
    }
    EmitPlan plan;
    plan.activity = true;
    plan.significance = true;
    plan.svg_name = "fig6.svg";
    execute(cfg, specs, plan, "figure fig6");
  } else {
    throw ConfigError("figure", "unknown figure '" + which + "' (expected fig4 or fig6)");
  }
}

void cmd_plot(const std::filesystem::path& csv_file, const CommonOverrides& overrides) {
  std::ifstream is(csv_file, std::ios::binary);
  if (!is) throw ConfigError("csv", "cannot read file " + csv_file.string());
  const std::vector<PlotSeries> series = read_activity_csv(is);
  if (series.empty()) throw ConfigError("csv", "no data rows");

  const std::filesystem::path out_dir =
      overrides.out ? std::filesystem::path(*overrides.out) : default_out_dir();
  std::filesystem::create_directories(out_dir);
  OutputGuard guard;
  const std::string name = csv_file.stem().string() + ".svg";
  std::ofstream svg = guard.open(out_dir / name);
  write_activity_svg(svg, csv_file.stem().string(), series);
  ensure_ok(svg, name);
  guard.commit();
  std::cerr << "[plot] wrote " << (out_dir / name).string() << '\n';
}

}  // namespace esim
