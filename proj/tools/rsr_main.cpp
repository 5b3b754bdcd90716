// rsr: command-line front end for the distributed subspace recovery experiments.
//
//   rsr gen     --config c.json          synthetic blocks and truth as CSV
//   rsr run     --config c.json [--csv]  every listed algorithm over the seed list
//   rsr compare --config c.json [--csv]  same, but at least two algorithms
//   rsr topo    --kind complete --k 8 --out t.json [--seed s]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "drsr/errors.hpp"
#include "drsr/graph.hpp"
#include "experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void print_rows(const drsr::experiment::ExperimentResult& result) {
  const nlohmann::json summary = drsr::experiment::summary_json(result);
  for (const auto& row : summary.at("rows")) {
    std::cout << row.at("algorithm").get<std::string>();
    if (!row.at("sweep_value").is_null()) std::cout << " [" << row.at("sweep_value").dump() << "]";
    const auto& err = row.at("final_error");
    if (err.is_null()) {
      std::cout << ": no reference, error not measured\n";
    } else {
      std::cout << ": mean final error " << err.at("mean").get<double>() << ", median "
                << err.at("median").get<double>() << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed robust subspace recovery experiments"};
  app.require_subcommand(1);

  std::string config_path;
  bool csv = false;

  CLI::App* gen = app.add_subcommand("gen", "Write synthetic datasets for every seed");
  gen->add_option("--config", config_path, "Experiment config (JSON)")->required();

  CLI::App* run = app.add_subcommand("run", "Run the configured algorithms");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_flag("--csv", csv, "Also write summary.csv and curves.csv");

  CLI::App* compare = app.add_subcommand("compare", "Compare two or more algorithms");
  compare->add_option("--config", config_path, "Experiment config (JSON)")->required();
  compare->add_flag("--csv", csv, "Also write summary.csv and curves.csv");

  std::string kind;
  int nodes = 0;
  std::uint64_t topo_seed = 0;
  std::string out_path;
  CLI::App* topo = app.add_subcommand("topo", "Write a canned network topology as JSON");
  topo->add_option("--kind", kind, "complete, path-ring-sparse or paper-random")->required();
  topo->add_option("--k", nodes, "Number of nodes")->required();
  topo->add_option("--seed", topo_seed, "Seed for paper-random");
  topo->add_option("--out", out_path, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*topo) {
      const drsr::NetworkGraph graph = drsr::canned_topology(drsr::parse_topology_kind(kind), nodes, topo_seed);
      graph.save(out_path);
      std::cout << "wrote " << graph.node_count() << "-node topology with " << graph.edge_count()
                << " edges to " << out_path << "\n";
      return 0;
    }

    const drsr::experiment::ExperimentConfig config = drsr::experiment::load_config(config_path);
    if (*gen) {
      const int count = drsr::experiment::generate_datasets(config);
      std::cout << "wrote " << count << " synthetic datasets under " << config.output.string() << "\n";
      return 0;
    }
    const drsr::experiment::ExperimentResult result =
        *compare ? drsr::experiment::compare_algorithms(config) : drsr::experiment::run_experiment(config);
    drsr::experiment::write_outputs(config, result, {csv});
    print_rows(result);
    std::cout << "results in " << config.output.string() << "\n";
    return 0;
  } catch (const drsr::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const drsr::ParseError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
