#include <algorithm>
#include <fstream>
#include <set>

#include "drsr/errors.hpp"
#include "experiment.hpp"

namespace drsr::experiment {
namespace {

using nlohmann::json;

// Reads fields off one JSON object and rejects keys nobody asked for, so a
// misspelt option fails loudly instead of silently keeping its default.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ConfigError(where_ + "." + key + " is required");
    return obj_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const json& value = raw(key);
    try {
      return value.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type: " + value.dump());
    }
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  int positive_int(const std::string& key, int fallback) {
    const int v = get_or<int>(key, fallback);
    if (v < 1) throw ConfigError(where_ + "." + key + " must be at least 1");
    return v;
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key " + where_ + "." + item.key());
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

SyntheticConfig parse_synthetic(const json& obj) {
  FieldReader r(obj, "data.synthetic");
  SyntheticConfig cfg;
  cfg.nodes = r.get_or("nodes", cfg.nodes);
  cfg.inliers = r.get_or("inliers", cfg.inliers);
  cfg.outliers = r.get_or("outliers", cfg.outliers);
  cfg.ambient_dim = r.get_or("ambient_dim", cfg.ambient_dim);
  cfg.subspace_dim = r.get_or("subspace_dim", cfg.subspace_dim);
  cfg.sigma = r.get_or("sigma", cfg.sigma);
  r.finish();
  validate(cfg);
  return cfg;
}

std::filesystem::path existing_file(const std::filesystem::path& base_dir, const std::string& rel,
                                    const std::string& field) {
  const std::filesystem::path p = base_dir / rel;
  if (!std::filesystem::is_regular_file(p)) {
    throw ConfigError(field + " refers to a missing file: " + p.string());
  }
  return p;
}

DataSource parse_data(const json& obj, const std::filesystem::path& base_dir) {
  FieldReader r(obj, "data");
  DataSource src;
  const bool synthetic = r.has("synthetic");
  const bool csv = r.has("csv");
  if (synthetic == csv) throw ConfigError("data needs exactly one of 'synthetic' and 'csv'");
  if (synthetic) {
    src.synthetic = parse_synthetic(r.raw("synthetic"));
    src.nodes = src.synthetic->nodes;
  } else {
    src.csv = existing_file(base_dir, r.get<std::string>("csv"), "data.csv");
    src.nodes = r.positive_int("nodes", 1);
    if (r.has("partition")) src.partition = parse_partition_policy(r.get<std::string>("partition"));
    if (r.has("truth")) src.truth_csv = existing_file(base_dir, r.get<std::string>("truth"), "data.truth");
  }
  r.finish();
  return src;
}

TopologySource parse_topology(const json& obj, const std::filesystem::path& base_dir) {
  FieldReader r(obj, "topology");
  TopologySource src;
  if (r.has("file")) {
    src.file = existing_file(base_dir, r.get<std::string>("file"), "topology.file");
  } else {
    src.kind = parse_topology_kind(r.get_or<std::string>("kind", "paper-random"));
    if (r.has("seed")) src.seed = r.get<std::uint64_t>("seed");
  }
  r.finish();
  return src;
}

std::vector<std::uint64_t> parse_seeds(const json& value) {
  std::vector<std::uint64_t> seeds;
  if (value.is_object()) {
    FieldReader r(value, "seeds");
    const int count = r.positive_int("count", 50);
    const auto first = r.get_or<std::uint64_t>("first", 0);
    r.finish();
    for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
    return seeds;
  }
  try {
    seeds = value.get<std::vector<std::uint64_t>>();
  } catch (const json::exception&) {
    throw ConfigError("seeds must be a list of non-negative integers or {\"count\": n}");
  }
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  return seeds;
}

Sweep parse_sweep(const json& obj) {
  static const std::set<std::string> fields = {"sigma", "outlier_fraction", "step_size", "t_outer",
                                               "topology"};
  FieldReader r(obj, "sweep");
  Sweep sweep;
  sweep.field = r.get<std::string>("field");
  if (!fields.count(sweep.field)) throw ConfigError("cannot sweep over '" + sweep.field + "'");
  const json& values = r.raw("values");
  if (!values.is_array() || values.empty()) throw ConfigError("sweep.values must be a non-empty list");
  for (const json& v : values) {
    const bool ok = sweep.field == "topology" ? v.is_string()
                    : sweep.field == "step_size" ? (v.is_number() || v == "auto")
                                                 : v.is_number();
    if (!ok) throw ConfigError("sweep value " + v.dump() + " does not fit field " + sweep.field);
    sweep.values.push_back(v);
  }
  r.finish();
  return sweep;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  FieldReader r(doc, "config");
  ExperimentConfig cfg;
  cfg.data = parse_data(r.raw("data"), base_dir);
  if (r.has("topology")) cfg.topology = parse_topology(r.raw("topology"), base_dir);

  const bool one = r.has("algorithm");
  const bool many = r.has("algorithms");
  if (one == many) throw ConfigError("config needs exactly one of 'algorithm' and 'algorithms'");
  cfg.algorithms = one ? std::vector<std::string>{r.get<std::string>("algorithm")}
                       : r.get<std::vector<std::string>>("algorithms");
  if (cfg.algorithms.empty()) throw ConfigError("algorithms must not be empty");
  for (const std::string& name : cfg.algorithms) {
    const auto& known = known_algorithms();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ConfigError("unknown algorithm '" + name + "'");
    }
  }

  const int default_d = cfg.data.synthetic ? cfg.data.synthetic->subspace_dim : 1;
  cfg.subspace_dim = r.positive_int("subspace_dim", default_d);
  if (r.has("step_size")) {
    const json& step = r.raw("step_size");
    if (step.is_number()) {
      cfg.step_size = step.get<double>();
      if (!(*cfg.step_size > 0.0)) throw ConfigError("step_size must be positive");
    } else if (step != "auto") {
      throw ConfigError("step_size must be a number or \"auto\"");
    }
  }
  cfg.t_outer = r.positive_int("t_outer", cfg.t_outer);
  cfg.t_inner = r.positive_int("t_inner", cfg.t_inner);
  cfg.t_irls = r.positive_int("t_irls", cfg.t_irls);
  cfg.delta = r.get_or("delta", cfg.delta);
  if (!(cfg.delta > 0.0)) throw ConfigError("delta must be positive");
  cfg.gmedian_inner = r.positive_int("gmedian_inner", cfg.gmedian_inner);
  cfg.warm_start = r.get_or("warm_start", cfg.warm_start);
  if (r.has("compression_top_d")) cfg.compression_top_d = r.positive_int("compression_top_d", 1);
  cfg.record_every = r.positive_int("record_every", cfg.record_every);

  if (r.has("preprocessing")) {
    FieldReader pre(r.raw("preprocessing"), "preprocessing");
    if (pre.has("ose")) cfg.ose_target_dim = pre.positive_int("ose", 1);
    cfg.center = pre.get_or("center", false);
    pre.finish();
  }

  cfg.output = base_dir / r.get_or<std::string>("output", "results");
  if (r.has("seeds")) {
    cfg.seeds = parse_seeds(r.raw("seeds"));
  } else {
    for (std::uint64_t s = 0; s < 50; ++s) cfg.seeds.push_back(s);
  }
  if (r.has("sweep")) cfg.sweep = parse_sweep(r.raw("sweep"));
  r.finish();

  if (cfg.sweep && cfg.sweep->field != "topology" && cfg.sweep->field != "step_size" &&
      cfg.sweep->field != "t_outer" && !cfg.data.synthetic) {
    throw ConfigError("sweeping " + cfg.sweep->field + " needs synthetic data");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

}  // namespace drsr::experiment
