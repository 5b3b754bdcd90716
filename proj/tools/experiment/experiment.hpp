#pragma once

// Config-driven experiment harness behind the `rsr` command. A config is one
// JSON document; every path in it is resolved against the config's directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drsr/dataset.hpp"
#include "drsr/diagnostics.hpp"
#include "drsr/graph.hpp"
#include "drsr/subspace.hpp"

namespace drsr::experiment {

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names = {"gms-cbga", "gms-cadmm", "pca-exact", "pca-cbga",
                                                 "reaper",   "fms",       "gmedian"};
  return names;
}

struct DataSource {
  /// Exactly one of `synthetic` and `csv` is set. The synthetic seed is
  /// replaced by the replication seed of each run.
  std::optional<SyntheticConfig> synthetic;
  std::filesystem::path csv;
  std::filesystem::path truth_csv;  // optional D x d basis for CSV data
  int nodes = 0;                    // CSV only; synthetic data carries its own K
  PartitionPolicy partition = PartitionPolicy::kContiguous;
};

struct TopologySource {
  TopologyKind kind = TopologyKind::kPaperRandom;
  /// Seed for the random topology; unset means "use the replication seed".
  std::optional<std::uint64_t> seed;
  std::filesystem::path file;  // when non-empty, overrides kind/seed
};

/// One parameter varied across summary rows. Values stay as JSON so the same
/// structure covers numbers ("sigma", "outlier_fraction", "step_size"
/// including "auto", "t_outer") and names ("topology").
struct Sweep {
  std::string field;
  std::vector<nlohmann::json> values;
};

struct ExperimentConfig {
  DataSource data;
  TopologySource topology;
  std::vector<std::string> algorithms;
  int subspace_dim = 3;
  std::optional<double> step_size;  // unset means "auto"
  int t_outer = 250;
  int t_inner = 30;
  int t_irls = 100;
  double delta = 1e-10;
  int gmedian_inner = 100;
  bool warm_start = false;
  std::optional<int> compression_top_d;
  int record_every = 1;
  std::optional<int> ose_target_dim;
  bool center = false;
  std::filesystem::path output;
  std::vector<std::uint64_t> seeds;
  std::optional<Sweep> sweep;
};

/// Throws ConfigError naming the offending field. `base_dir` anchors relative paths.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inputs of one run after the sweep value, seed and preprocessing are applied.
struct PreparedRun {
  PartitionedDataset data;
  std::optional<Subspace> truth;
  NetworkGraph graph;
};

struct RunSettings {
  ExperimentConfig config;  // with the sweep value already substituted
  std::string algorithm;
  std::uint64_t seed = 0;
};

PreparedRun prepare_run(const RunSettings& settings);

struct RunOutcome {
  std::string algorithm;
  std::uint64_t seed = 0;
  double step_size = 0.0;  // 0 when the algorithm has no step
  int step_halvings = 0;
  /// Mean over nodes of the final error; unset without a reference.
  std::optional<double> final_error;
  /// Mean over nodes of the error at each recorded iteration.
  std::vector<int> curve_s;
  std::vector<std::optional<double>> curve_error;
  std::vector<DiagnosticRecord> diagnostics;
  /// Per-node bases (or median points for gmedian) as JSON.
  nlohmann::json estimate;
  double wall_seconds = 0.0;
};

/// Runs one algorithm on one seed. Library errors propagate unchanged.
RunOutcome run_single(const RunSettings& settings);

struct SummaryRow {
  std::string algorithm;
  std::optional<nlohmann::json> sweep_value;
  std::vector<RunOutcome> runs;
};

struct ExperimentResult {
  std::optional<std::string> sweep_field;
  std::vector<SummaryRow> rows;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// run_experiment restricted to configs listing at least two algorithms.
ExperimentResult compare_algorithms(const ExperimentConfig& config);

/// Deterministic summary: per row the mean and median of the per-seed final
/// errors, the seed-averaged error curve and the estimates of the row's first
/// seed. Holds no timing information.
nlohmann::json summary_json(const ExperimentResult& result);

/// Wall-clock seconds per row, kept apart so summaries stay reproducible.
nlohmann::json timing_json(const ExperimentResult& result);

std::string summary_csv(const ExperimentResult& result);
std::string curves_csv(const ExperimentResult& result);

struct OutputOptions {
  bool csv = false;
};

/// Writes summary.json, timing.json and diagnostics.jsonl (plus summary.csv
/// and curves.csv) into config.output, creating the directory.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result,
                   const OutputOptions& options);

/// Writes every seed's synthetic blocks and ground truth as CSV under
/// config.output/seed_<n>/. Returns the number of seeds written.
int generate_datasets(const ExperimentConfig& config);

}  // namespace drsr::experiment
