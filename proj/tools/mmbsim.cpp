#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mmb.hpp"

namespace {

struct RawConfig {
  std::string topology = "overlap_trees";
  std::size_t n = 16;
  std::string matrix = "hop";
  int alpha = 0;  // 0: family default
  double sinr_noise = 0.1;
  double sinr_beta = 1.0;
  double sinr_path_loss = 2.0;
  double source_probability = 1.0 / 3.0;
  std::string rate = "1";
  std::string policy = "uniform";
  std::int64_t slots = 1'000'000;
  std::uint64_t seed = 1;
  std::string tmin = "single_bfs";
  std::string out_dir = "out";
  std::int64_t snapshot_every = 1000;
  std::string network_file;
};

void add_config_options(CLI::App& app, RawConfig& raw) {
  app.add_option("--topology", raw.topology, "path | bipartite | overlap_trees | random_connected")->capture_default_str();
  app.add_option("--n", raw.n, "number of nodes")->capture_default_str();
  app.add_option("--matrix", raw.matrix, "radio | sinr | hop")->capture_default_str();
  app.add_option("--alpha", raw.alpha, "degradation distance for the hop matrix (0 = family default)");
  app.add_option("--sinr-noise", raw.sinr_noise)->capture_default_str();
  app.add_option("--sinr-beta", raw.sinr_beta)->capture_default_str();
  app.add_option("--sinr-path-loss", raw.sinr_path_loss)->capture_default_str();
  app.add_option("--source-prob", raw.source_probability, "probability that a node is a source")->capture_default_str();
  app.add_option("--rate", raw.rate, "1 | 1/sqrt(1+delta) | 1/(1+delta)")->capture_default_str();
  app.add_option("--policy", raw.policy, "uniform | next | current | unif_curr")->capture_default_str();
  app.add_option("--slots", raw.slots, "slots to simulate")->capture_default_str();
  app.add_option("--seed", raw.seed)->capture_default_str();
  app.add_option("--tmin-mode", raw.tmin, "exhaustive | single_bfs")->capture_default_str();
  app.add_option("--out-dir", raw.out_dir)->capture_default_str();
  app.add_option("--snapshot-every", raw.snapshot_every, "slots between run.csv rows")->capture_default_str();
  app.add_option("--network-file", raw.network_file, "network file replacing topology and matrix");
}

mmb::ExperimentConfig to_config(const RawConfig& raw) {
  mmb::ExperimentConfig c;
  c.topology = mmb::parse_topology(raw.topology);
  c.n = raw.n;
  c.matrix = mmb::parse_matrix(raw.matrix);
  if (raw.alpha < 0) throw std::invalid_argument("alpha must be >= 1");
  if (raw.alpha > 0) c.alpha = raw.alpha;
  c.sinr_noise = raw.sinr_noise;
  c.sinr_beta = raw.sinr_beta;
  c.sinr_path_loss = raw.sinr_path_loss;
  c.source_probability = raw.source_probability;
  c.rate = mmb::parse_rate(raw.rate);
  c.policy = mmb::parse_policy(raw.policy);
  c.total_slots = raw.slots;
  c.seed = raw.seed;
  c.tmin = mmb::parse_tmin_mode(raw.tmin);
  c.out_dir = raw.out_dir;
  c.snapshot_every = raw.snapshot_every;
  if (!raw.network_file.empty()) c.network_file = raw.network_file;
  return c;
}

/// Fills options still unset after command-line parsing from an INI/TOML
/// file, so flags given on the command line win.
void apply_config_file(CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    CLI::Option* opt = sub.get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw std::invalid_argument("unknown key '" + item.fullname() + "' in " + path);
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple-message broadcast simulator for affectance networks"};
  app.require_subcommand(1);

  RawConfig run_raw;
  auto* run = app.add_subcommand("run", "simulate one configuration and write run.csv, params.csv, plot.csv");
  add_config_options(*run, run_raw);
  std::string run_config;
  run->add_option("--config", run_config, "INI/TOML file with option values; command-line flags win");

  RawConfig sweep_raw;
  std::vector<std::size_t> sizes{8, 16};
  std::vector<std::string> topologies{"bipartite", "overlap_trees", "path"};
  unsigned seeds = 5;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "run the n x topology x rate x policy x seed grid");
  add_config_options(*sweep, sweep_raw);
  sweep->add_option("--sizes", sizes, "node counts")->capture_default_str();
  sweep->add_option("--topologies", topologies, "topology families")->capture_default_str();
  sweep->add_option("--seeds", seeds, "seeds per cell, starting at --seed")->capture_default_str();
  sweep->add_option("--threads", threads, "concurrent runs")->capture_default_str();
  std::string sweep_config;
  sweep->add_option("--config", sweep_config, "INI/TOML file with option values; command-line flags win");

  RawConfig net_raw;
  std::string net_out;
  auto* network = app.add_subcommand("network", "write the generated network to a file");
  add_config_options(*network, net_raw);
  network->add_option("--out", net_out, "output file (stdout when omitted)");

  RawConfig labst_raw;
  mmb::NodeId labst_source = 0;
  auto* labst = app.add_subcommand("labst", "print the ranked broadcast tree of one source as CSV");
  add_config_options(*labst, labst_raw);
  labst->add_option("--source", labst_source, "tree root")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      apply_config_file(*run, run_config);
      const mmb::ExperimentConfig c = to_config(run_raw);
      const mmb::ExperimentOutput out = mmb::run_experiment(c);
      mmb::write_summary_header(std::cout);
      mmb::write_summary_row(std::cout, out.summary);
    } else if (sweep->parsed()) {
      apply_config_file(*sweep, sweep_config);
      const mmb::ExperimentConfig base = to_config(sweep_raw);
      std::vector<mmb::TopologyKind> kinds;
      for (const auto& t : topologies) kinds.push_back(mmb::parse_topology(t));
      const auto grid = mmb::make_grid(base, sizes, kinds, seeds, base.out_dir);
      std::filesystem::create_directories(base.out_dir);
      std::ofstream aggregate(base.out_dir / "sweep.csv", std::ios::binary);
      if (!aggregate) throw std::runtime_error("cannot write " + (base.out_dir / "sweep.csv").string());
      const auto rows = mmb::sweep(grid, aggregate, threads);
      std::size_t failed = 0;
      for (const auto& r : rows) failed += r.status != "ok";
      std::cout << rows.size() << " runs, " << failed << " failed; summary in "
                << (base.out_dir / "sweep.csv").string() << '\n';
      return failed == 0 ? EXIT_SUCCESS : 3;
    } else if (network->parsed()) {
      const mmb::ExperimentConfig c = to_config(net_raw);
      const mmb::PreparedExperiment prep = mmb::prepare_experiment(c);
      if (net_out.empty()) {
        mmb::write_network(std::cout, prep.net);
      } else {
        std::ofstream f(net_out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + net_out);
        mmb::write_network(f, prep.net);
      }
    } else if (labst->parsed()) {
      const mmb::ExperimentConfig c = to_config(labst_raw);
      const mmb::PreparedExperiment prep = mmb::prepare_experiment(c);
      if (labst_source >= prep.net.node_count())
        throw std::invalid_argument("source " + std::to_string(labst_source) + " is not a node");
      mmb::TminSelection sel = mmb::select_tmin(prep.net, labst_source, c.tmin);
      mmb::write_labst_csv(std::cout, mmb::build_labst(prep.net, std::move(sel.tree)));
    }
  } catch (const CLI::Error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return EXIT_SUCCESS;
}
