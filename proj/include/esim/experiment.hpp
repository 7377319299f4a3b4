#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "esim/engine.hpp"

namespace esim {

/// Batch description: the run parameters plus how many seeded runs to
/// execute per problem and where the outputs go. Parsed from a key=value
/// document whose keys are: problem (comma-separated list), mu, islands,
/// generations, migration_interval, swaps, tau, sigma_fraction, seed,
/// children_per_species, runs, scan_pool, out.
struct ExperimentConfig {
  EsimConfig base;
  int runs = 30;
  int scan_pool = 1;  // generations pooled per sample in the significance scan
  std::vector<std::string> problems;
  std::filesystem::path out_dir;
};

/// Parses the key=value document ('#' starts a comment). Unknown or
/// duplicate keys and malformed values throw ConfigError naming the key.
ExperimentConfig parse_experiment_config(std::string_view text);

/// Command-line overrides applied on top of a parsed or built-in config.
struct CommonOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> out;
  std::optional<int> swaps;
  std::optional<int> generations;
  std::optional<int> migration_interval;
};

void apply_overrides(ExperimentConfig& config, const CommonOverrides& overrides);

/// Fills defaults (problem list, output directory) and validates every
/// field; throws ConfigError before any run starts.
void finalize_experiment(ExperimentConfig& config);

inline constexpr const char* kOutDirEnvVar = "ESIM_OUT_DIR";

/// $ESIM_OUT_DIR when set, otherwise ./esim-out.
std::filesystem::path default_out_dir();

/// All runs of one labelled series (one problem at one swap count).
struct ProblemBatch {
  std::string label;
  EsimConfig config;  // seed = base seed; run r uses seed + r
  int runs = 0;
  std::vector<RunTrace> traces;
  std::vector<int> event_generations;
  SignificanceReport significance;  // populated when runs >= 2
  bool has_significance = false;
  Eigen::ArrayXd mean_activity;  // across-run mean, aligned with traces[0].activity
  double mean_s = 0.0;             // mean over runs of per-run mean over events
  double mean_s_first_event = 0.0;  // mean over runs of the first event's S
  bool has_events = false;
};

/// Executes `runs` seeded runs (seed, seed+1, ...) and aggregates them.
/// Phenotype histories are released after each run unless keep_history.
ProblemBatch run_problem_batch(std::string label, const EsimConfig& config, int runs,
                               int scan_pool, bool keep_history = false);

/// Shortest round-trip decimal representation, locale-independent.
std::string format_number(double value);

// CSV emission. Headers and rows use '\n' endings and the fixed column
// orders documented in the README; append_* may be called once per batch.
void write_activity_header(std::ostream& os);
void append_activity_rows(std::ostream& os, const ProblemBatch& batch);
void write_sensitivity_header(std::ostream& os);
void append_sensitivity_rows(std::ostream& os, const ProblemBatch& batch);
void write_significance_header(std::ostream& os);
void append_significance_rows(std::ostream& os, const ProblemBatch& batch);
void write_summary_header(std::ostream& os);
void append_summary_row(std::ostream& os, const ProblemBatch& batch);

/// One plotted series: a generation-indexed curve plus the generations to
/// mark with event gridlines.
struct PlotSeries {
  std::string label;
  int first_generation = 0;
  Eigen::ArrayXd values;
  std::vector<int> event_generations;
};

/// Parses an activity CSV (the schema written by append_activity_rows) and
/// averages delta_ph across runs, one series per distinct problem label in
/// file order. Malformed input throws ConfigError("csv", ...).
std::vector<PlotSeries> read_activity_csv(std::istream& is);

/// Stacked log-scale plot: each series is mapped to log10 (floored at
/// kSvgLogFloor), rescaled to span kSvgSpanUnits vertical units, and drawn
/// kSvgOffsetUnits units above the previous series. Raw values are never
/// altered by plotting; this is presentation only.
void write_activity_svg(std::ostream& os, const std::string& title,
                        const std::vector<PlotSeries>& series);

inline constexpr double kSvgLogFloor = 1e-12;
inline constexpr double kSvgSpanUnits = 3.0;
inline constexpr double kSvgOffsetUnits = 4.0;

// Subcommand bodies. They throw ConfigError for invalid input and
// std::runtime_error for I/O failures; partially written outputs are
// removed before the exception escapes.
void cmd_run(const std::filesystem::path& config_file, const CommonOverrides& overrides);
void cmd_table2(const CommonOverrides& overrides);
void cmd_figure(const std::string& which, const CommonOverrides& overrides);
void cmd_plot(const std::filesystem::path& csv_file, const CommonOverrides& overrides);

}  // namespace esim
