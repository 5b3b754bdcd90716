#include "experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "drsr/errors.hpp"
#include "drsr/preprocess.hpp"
#include "drsr/rsr.hpp"

namespace drsr::experiment {
namespace {

using nlohmann::json;

ExperimentConfig with_sweep_value(ExperimentConfig cfg, const Sweep& sweep, const json& value) {
  const std::string& field = sweep.field;
  if (field == "sigma") {
    cfg.data.synthetic->sigma = value.get<double>();
  } else if (field == "outlier_fraction") {
    // Hold the total point count fixed and keep both counts divisible by K.
    SyntheticConfig& syn = *cfg.data.synthetic;
    const double fraction = value.get<double>();
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("outlier_fraction must lie in [0, 1]");
    const int total = syn.inliers + syn.outliers;
    const long per_node = std::lround(fraction * total / syn.nodes);
    syn.outliers = static_cast<int>(per_node) * syn.nodes;
    syn.inliers = total - syn.outliers;
  } else if (field == "step_size") {
    if (value == "auto") {
      cfg.step_size.reset();
    } else {
      cfg.step_size = value.get<double>();
      if (!(*cfg.step_size > 0.0)) throw ConfigError("swept step_size must be positive");
    }
  } else if (field == "t_outer") {
    cfg.t_outer = value.get<int>();
    if (cfg.t_outer < 1) throw ConfigError("swept t_outer must be at least 1");
  } else if (field == "topology") {
    cfg.topology.kind = parse_topology_kind(value.get<std::string>());
    cfg.topology.file.clear();
  }
  if (cfg.data.synthetic) validate(*cfg.data.synthetic);
  return cfg;
}

ConsensusConfig consensus_config(const ExperimentConfig& cfg) {
  ConsensusConfig cc;
  cc.t_outer = cfg.t_outer;
  cc.compression_top_d = cfg.compression_top_d;
  cc.record_every = cfg.record_every;
  return cc;
}

GmsParams gms_params(const ExperimentConfig& cfg) {
  GmsParams p;
  p.delta = cfg.delta;
  p.t_gms = cfg.t_inner;
  p.warm_start = cfg.warm_start;
  return p;
}

// Steps have no effect on a network without edges; any positive value will do.
double resolve_step(const std::string& algorithm, const ExperimentConfig& cfg, const PreparedRun& run) {
  if (cfg.step_size) return *cfg.step_size;
  if (run.graph.edge_count() == 0) return 1.0;
  if (algorithm == "gms-cbga" || algorithm == "gms-cadmm") {
    return practical_step_size(to_local_datasets(run.data), run.graph, 1, cfg.delta);
  }
  if (algorithm == "pca-cbga") return pca_step_size(to_local_datasets(run.data), run.graph);
  if (algorithm == "gmedian") return gmedian_step_size(run.data, run.graph, cfg.delta);
  return 0.0;
}

void fill_curve(RunOutcome& out, const std::vector<DiagnosticRecord>& records) {
  std::map<int, std::pair<double, int>> sums;  // s -> (error sum, count)
  std::map<int, bool> complete;
  for (const DiagnosticRecord& r : records) {
    auto& [sum, count] = sums[r.s];
    complete.try_emplace(r.s, true);
    if (r.recovery_error) {
      sum += *r.recovery_error;
      ++count;
    } else {
      complete[r.s] = false;
    }
  }
  for (const auto& [s, acc] : sums) {
    out.curve_s.push_back(s);
    if (complete[s] && acc.second > 0) {
      out.curve_error.push_back(acc.first / acc.second);
    } else {
      out.curve_error.push_back(std::nullopt);
    }
  }
}

double mean_of(const std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_cell(const std::optional<json>& v) {
  if (!v) return "";
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_float()) return format_double(v->get<double>());
  return v->dump();
}

struct RowStats {
  std::vector<double> per_seed;  // empty when some run had no reference
  std::vector<int> curve_s;
  std::vector<std::optional<double>> curve_mean;
  double mean_step = 0.0;
  int halvings = 0;
};

RowStats row_stats(const SummaryRow& row) {
  RowStats st;
  bool all_final = true;
  for (const RunOutcome& run : row.runs) {
    if (run.final_error) {
      st.per_seed.push_back(*run.final_error);
    } else {
      all_final = false;
    }
    st.mean_step += run.step_size / static_cast<double>(row.runs.size());
    st.halvings += run.step_halvings;
  }
  if (!all_final) st.per_seed.clear();

  const std::vector<int>& grid = row.runs.front().curve_s;
  for (const RunOutcome& run : row.runs) {
    if (run.curve_s != grid) throw Error("runs of one summary row recorded different iterations");
  }
  st.curve_s = grid;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double total = 0.0;
    bool ok = true;
    for (const RunOutcome& run : row.runs) {
      if (!run.curve_error[i]) {
        ok = false;
        break;
      }
      total += *run.curve_error[i];
    }
    st.curve_mean.push_back(ok ? std::optional<double>(total / row.runs.size()) : std::nullopt);
  }
  return st;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("failed to write " + path.string());
}

}  // namespace

PreparedRun prepare_run(const RunSettings& settings) {
  const ExperimentConfig& cfg = settings.config;
  PartitionedDataset data;
  std::optional<Subspace> truth;
  if (cfg.data.synthetic) {
    SyntheticConfig syn = *cfg.data.synthetic;
    syn.seed = settings.seed;
    SyntheticData generated = generate_synthetic(syn);
    data = std::move(generated.data);
    truth = std::move(generated.truth);
  } else {
    data = partition(load_csv(cfg.data.csv), cfg.data.nodes, cfg.data.partition);
    if (!cfg.data.truth_csv.empty()) {
      const Matrix basis = load_csv(cfg.data.truth_csv);
      if (basis.rows() != data.ambient_dim || basis.cols() != cfg.subspace_dim) {
        throw ConfigError("truth basis must be D x d = " + std::to_string(data.ambient_dim) + " x " +
                          std::to_string(cfg.subspace_dim));
      }
      truth = Subspace::spanned_by(basis);
    }
  }

  // A single node has only one possible network, whatever kind is configured.
  NetworkGraph graph = !cfg.topology.file.empty() ? NetworkGraph::load(cfg.topology.file)
                       : data.block_count() == 1
                           ? NetworkGraph(1, {})
                           : canned_topology(cfg.topology.kind, data.block_count(),
                                             cfg.topology.seed.value_or(settings.seed));
  if (graph.node_count() != data.block_count()) {
    throw ConfigError("topology has " + std::to_string(graph.node_count()) + " nodes but the data has " +
                      std::to_string(data.block_count()) + " blocks");
  }

  if (cfg.ose_target_dim) {
    const int target = *cfg.ose_target_dim;
    if (truth) {
      truth = Subspace::spanned_by(ose_matrix(data.ambient_dim, target, settings.seed) * truth->basis());
    }
    data = ose_sketch(data, target, settings.seed);
  }
  if (cfg.subspace_dim >= data.ambient_dim) {
    throw ConfigError("subspace_dim must be below the (sketched) ambient dimension");
  }
  if (cfg.center) {
    ConsensusConfig cc = consensus_config(cfg);
    cc.step_size = graph.edge_count() == 0 ? 1.0 : gmedian_step_size(data, graph, cfg.delta);
    data = center_by_gmedian(data, graph, cfg.delta, cc, cfg.gmedian_inner).data;
  }
  return PreparedRun{std::move(data), std::move(truth), std::move(graph)};
}

RunOutcome run_single(const RunSettings& settings) {
  const auto started = std::chrono::steady_clock::now();
  const ExperimentConfig& cfg = settings.config;
  const std::string& algorithm = settings.algorithm;
  const PreparedRun run = prepare_run(settings);

  RunOutcome out;
  out.algorithm = algorithm;
  out.seed = settings.seed;

  ConsensusConfig cc = consensus_config(cfg);
  cc.step_size = resolve_step(algorithm, cfg, run);
  const int d = cfg.subspace_dim;

  if (algorithm == "gmedian") {
    const Vector reference =
        gmedian_local_solve(run.data.pooled(), Vector::Zero(run.data.ambient_dim), cfg.delta, 100000).y;
    GmedianResult result = distributed_gmedian(run.data, run.graph, cc, cfg.delta, cfg.gmedian_inner, reference);
    double total = 0.0;
    for (const Vector& y : result.per_node) total += (y - reference).norm();
    out.final_error = total / static_cast<double>(result.per_node.size());
    out.step_size = result.step_size;
    out.step_halvings = result.step_halvings;
    out.diagnostics = std::move(result.diagnostics);
    json nodes = json::array();
    for (std::size_t k = 0; k < result.per_node.size(); ++k) {
      const Vector& y = result.per_node[k];
      nodes.push_back({{"k", k + 1}, {"point", std::vector<double>(y.data(), y.data() + y.size())}});
    }
    out.estimate = {{"algorithm", algorithm}, {"nodes", nodes}};
  } else {
    RsrResult result;
    if (algorithm == "gms-cbga" || algorithm == "gms-cadmm") {
      const GmsEngine engine = algorithm == "gms-cbga" ? GmsEngine::kCbga : GmsEngine::kCadmm;
      result = distributed_gms(run.data, run.graph, d, engine, cc, gms_params(cfg), run.truth);
    } else if (algorithm == "pca-exact") {
      result = distributed_pca_exact(run.data, run.graph, d, run.truth);
    } else if (algorithm == "pca-cbga") {
      result = distributed_pca_cbga(run.data, run.graph, d, cc, run.truth);
    } else {
      IrlsParams irls;
      irls.delta = cfg.delta;
      irls.t_irls = cfg.t_irls;
      result = algorithm == "reaper" ? distributed_reaper(run.data, run.graph, d, irls, run.truth)
                                     : distributed_fms(run.data, run.graph, d, irls, run.truth);
    }
    if (run.truth) out.final_error = mean_of(per_node_errors(result, *run.truth));
    out.step_size = result.step_size;
    out.step_halvings = result.step_halvings;
    out.diagnostics = std::move(result.diagnostics);
    out.estimate = result.to_json();
  }
  fill_curve(out, out.diagnostics);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  std::vector<std::optional<json>> sweep_values;
  if (config.sweep) {
    result.sweep_field = config.sweep->field;
    for (const json& v : config.sweep->values) sweep_values.emplace_back(v);
  } else {
    sweep_values.emplace_back(std::nullopt);
  }
  for (const auto& value : sweep_values) {
    const ExperimentConfig swept = value ? with_sweep_value(config, *config.sweep, *value) : config;
    for (const std::string& algorithm : config.algorithms) {
      SummaryRow row{algorithm, value, {}};
      for (std::uint64_t seed : config.seeds) row.runs.push_back(run_single({swept, algorithm, seed}));
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

ExperimentResult compare_algorithms(const ExperimentConfig& config) {
  if (config.algorithms.size() < 2) {
    throw ConfigError("compare needs at least two algorithms, got " + std::to_string(config.algorithms.size()));
  }
  return run_experiment(config);
}

json summary_json(const ExperimentResult& result) {
  json rows = json::array();
  for (const SummaryRow& row : result.rows) {
    const RowStats st = row_stats(row);
    json seeds = json::array();
    for (const RunOutcome& run : row.runs) seeds.push_back(run.seed);
    json final_error = nullptr;
    if (!st.per_seed.empty()) {
      final_error = {{"mean", mean_of(st.per_seed)},
                     {"median", median_of(st.per_seed)},
                     {"per_seed", st.per_seed}};
    }
    json curve_error = json::array();
    for (const auto& e : st.curve_mean) curve_error.push_back(optional_number(e));
    rows.push_back({{"algorithm", row.algorithm},
                    {"sweep_value", row.sweep_value ? *row.sweep_value : json(nullptr)},
                    {"seeds", seeds},
                    {"mean_step_size", st.mean_step},
                    {"step_halvings", st.halvings},
                    {"final_error", final_error},
                    {"curve", {{"s", st.curve_s}, {"mean_error", curve_error}}},
                    {"first_seed_estimate", row.runs.front().estimate}});
  }
  return {{"sweep_field", result.sweep_field ? json(*result.sweep_field) : json(nullptr)}, {"rows", rows}};
}

json timing_json(const ExperimentResult& result) {
  json rows = json::array();
  for (const SummaryRow& row : result.rows) {
    std::vector<double> per_seed;
    for (const RunOutcome& run : row.runs) per_seed.push_back(run.wall_seconds);
    double total = 0.0;
    for (double t : per_seed) total += t;
    rows.push_back({{"algorithm", row.algorithm},
                    {"sweep_value", row.sweep_value ? *row.sweep_value : json(nullptr)},
                    {"wall_seconds_total", total},
                    {"wall_seconds_per_seed", per_seed}});
  }
  return {{"rows", rows}};
}

std::string summary_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "algorithm,sweep_field,sweep_value,seeds,mean_final_error,median_final_error,mean_step_size\n";
  for (const SummaryRow& row : result.rows) {
    const RowStats st = row_stats(row);
    out << row.algorithm << ',' << result.sweep_field.value_or("") << ',' << csv_cell(row.sweep_value) << ','
        << row.runs.size() << ',';
    if (!st.per_seed.empty()) {
      out << format_double(mean_of(st.per_seed)) << ',' << format_double(median_of(st.per_seed));
    } else {
      out << ',';
    }
    out << ',' << format_double(st.mean_step) << '\n';
  }
  return out.str();
}

std::string curves_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "algorithm,sweep_value,s,mean_error\n";
  for (const SummaryRow& row : result.rows) {
    const RowStats st = row_stats(row);
    for (std::size_t i = 0; i < st.curve_s.size(); ++i) {
      out << row.algorithm << ',' << csv_cell(row.sweep_value) << ',' << st.curve_s[i] << ','
          << (st.curve_mean[i] ? format_double(*st.curve_mean[i]) : "") << '\n';
    }
  }
  return out.str();
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result,
                   const OutputOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(config.output, ec);
  if (ec) throw Error("cannot create output directory " + config.output.string() + ": " + ec.message());

  write_text(config.output / "summary.json", summary_json(result).dump(2) + "\n");
  write_text(config.output / "timing.json", timing_json(result).dump(2) + "\n");

  std::ofstream diag(config.output / "diagnostics.jsonl", std::ios::binary);
  for (const SummaryRow& row : result.rows) {
    for (const RunOutcome& run : row.runs) {
      for (const DiagnosticRecord& rec : run.diagnostics) {
        json line = to_json(rec);
        line["seed"] = run.seed;
        if (row.sweep_value) line["sweep_value"] = *row.sweep_value;
        diag << line.dump() << '\n';
      }
    }
  }
  if (!diag) throw Error("failed to write diagnostics.jsonl");

  if (options.csv) {
    write_text(config.output / "summary.csv", summary_csv(result));
    write_text(config.output / "curves.csv", curves_csv(result));
  }
}

int generate_datasets(const ExperimentConfig& config) {
  if (!config.data.synthetic) throw ConfigError("gen needs a synthetic data section");
  for (std::uint64_t seed : config.seeds) {
    SyntheticConfig syn = *config.data.synthetic;
    syn.seed = seed;
    const SyntheticData generated = generate_synthetic(syn);
    const std::filesystem::path dir = config.output / ("seed_" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    for (int k = 0; k < generated.data.block_count(); ++k) {
      save_csv(dir / ("node_" + std::to_string(k + 1) + ".csv"), generated.data.blocks[k]);
    }
    save_csv(dir / "truth.csv", generated.truth.basis());
  }
  return static_cast<int>(config.seeds.size());
}

}  // namespace drsr::experiment
