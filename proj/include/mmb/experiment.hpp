#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mmb/labst.hpp"
#include "mmb/metrics.hpp"
#include "mmb/mmb.hpp"
#include "mmb/network.hpp"
#include "mmb/random.hpp"
#include "mmb/schedule.hpp"
#include "mmb/topology.hpp"

namespace mmb {

enum class MatrixKind { kRadio, kSinr, kHop };

inline std::string_view to_string(MatrixKind m) {
  switch (m) {
    case MatrixKind::kRadio: return "radio";
    case MatrixKind::kSinr: return "sinr";
    case MatrixKind::kHop: return "hop";
  }
  return "?";
}

inline MatrixKind parse_matrix(std::string_view name) {
  for (auto m : {MatrixKind::kRadio, MatrixKind::kSinr, MatrixKind::kHop})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown matrix kind '" + std::string(name) + "'");
}

/// Degradation distance used for each benchmark family, rounded up to whole hops:
/// bipartite sqrt(log2 n), overlapped trees (log2 n)/2, path log2 n, all at least 1.
inline int default_alpha(TopologyKind kind, std::size_t n) {
  const double lg = std::log2(static_cast<double>(n));
  double a = 1.0;
  switch (kind) {
    case TopologyKind::kBipartite: a = std::sqrt(lg); break;
    case TopologyKind::kOverlapTrees:
    case TopologyKind::kRandomConnected: a = lg / 2.0; break;
    case TopologyKind::kPath: a = lg; break;
  }
  return std::max(1, static_cast<int>(std::ceil(a)));
}

struct ExperimentConfig {
  TopologyKind topology = TopologyKind::kOverlapTrees;
  std::size_t n = 16;
  MatrixKind matrix = MatrixKind::kHop;
  std::optional<int> alpha;                 // default_alpha() when unset
  double sinr_noise = 0.1;
  double sinr_beta = 1.0;
  double sinr_path_loss = 2.0;
  double source_probability = 1.0 / 3.0;
  RateKind rate = RateKind::kOne;
  InjectionPolicy policy = InjectionPolicy::kUniform;
  Slot total_slots = 1'000'000;
  std::uint64_t seed = 1;
  TminMode tmin = TminMode::kSingleBfs;
  std::filesystem::path out_dir = "out";
  Slot snapshot_every = 1000;
  std::optional<std::filesystem::path> network_file;  // replaces topology + matrix

  int effective_alpha() const { return alpha.value_or(default_alpha(topology, n)); }
};

/// Every setting that influences results, in a fixed order. Output paths are excluded.
inline std::string canonical_string(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (c.network_file) {
    os << "network_file=" << c.network_file->generic_string();
  } else {
    os << "topology=" << to_string(c.topology) << ";n=" << c.n << ";matrix=" << to_string(c.matrix)
       << ";alpha=" << c.effective_alpha();
    if (c.matrix == MatrixKind::kSinr)
      os << ";sinr_noise=" << c.sinr_noise << ";sinr_beta=" << c.sinr_beta << ";sinr_path_loss=" << c.sinr_path_loss;
  }
  os << ";source_probability=" << c.source_probability << ";rate=" << to_string(c.rate)
     << ";policy=" << to_string(c.policy) << ";slots=" << c.total_slots << ";seed=" << c.seed
     << ";tmin=" << to_string(c.tmin) << ";snapshot_every=" << c.snapshot_every;
  return os.str();
}

inline std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical_string(c));
  return os.str();
}

struct PreparedExperiment {
  Network net;
  std::vector<SourceSchedule> sources;  // ascending node id
  std::vector<TreeCharacteristics> characteristics;
  Slot delta_len = 0;
  Slot delta_pipe = 0;
  double rate = 0.0;
  unsigned source_draws = 0;  // attempts used to draw a non-empty source set
};

inline constexpr unsigned kSourceDrawAttempts = 32;

namespace detail {

inline Network build_network(const ExperimentConfig& c) {
  if (c.network_file) {
    std::ifstream in(*c.network_file);
    if (!in) throw std::invalid_argument("cannot open network file " + c.network_file->string());
    return read_network(in);
  }
  Graph graph = generate(c.topology, c.n, c.seed);
  switch (c.matrix) {
    case MatrixKind::kRadio: return make_radio_network(std::move(graph));
    case MatrixKind::kHop: return make_hop_network(std::move(graph), c.effective_alpha());
    case MatrixKind::kSinr: {
      RandomStream rng = derive_stream(c.seed, "positions");
      std::vector<Point> pos(graph.node_count());
      for (auto& p : pos) p = {rng.uniform01(), rng.uniform01()};
      SinrParams params{1.0, c.sinr_noise, c.sinr_beta, c.sinr_path_loss};
      // Power chosen so the longest graph link keeps twice the noise margin.
      double longest = 0.0;
      for (const Link& l : graph.links()) longest = std::max(longest, euclidean(pos[l.from], pos[l.to]));
      if (params.noise > 0.0) params.power = 2.0 * params.beta * params.noise * std::pow(longest, params.path_loss);
      return make_sinr_network(std::move(graph), pos, params);
    }
  }
  throw std::invalid_argument("unknown matrix kind");
}

}  // namespace detail

/// Network, per-source LABSTs and schedule parameters for one configuration.
/// Each node becomes a source independently with `source_probability`; an
/// empty draw is repeated with the next sub-seed.
inline PreparedExperiment prepare_experiment(const ExperimentConfig& c) {
  if (!(c.source_probability > 0.0 && c.source_probability <= 1.0))
    throw std::invalid_argument("source probability must lie in (0, 1]");
  if (c.total_slots < 0) throw std::invalid_argument("slots must be non-negative");
  if (c.snapshot_every < 1) throw std::invalid_argument("snapshot cadence must be >= 1");
  Network net = detail::build_network(c);
  if (net.node_count() < 2) throw std::invalid_argument("experiments need at least 2 nodes");

  std::vector<NodeId> chosen;
  unsigned attempt = 0;
  for (; attempt < kSourceDrawAttempts && chosen.empty(); ++attempt) {
    RandomStream rng = derive_stream(c.seed, "sources", attempt);
    for (NodeId v = 0; v < net.node_count(); ++v)
      if (rng.bernoulli(c.source_probability)) chosen.push_back(v);
  }
  if (chosen.empty())
    throw std::runtime_error("no source drawn in " + std::to_string(kSourceDrawAttempts) + " attempts");

  PreparedExperiment out{std::move(net), {}, {}, 0, 0, 0.0, attempt};
  out.sources.reserve(chosen.size());
  for (NodeId s : chosen) {
    TminSelection sel = select_tmin(out.net, s, c.tmin);
    RankedTree ranked = build_labst(out.net, std::move(sel.tree));
    ScheduleParams params = make_schedule_params(out.net, ranked, sel.characteristics);
    out.delta_len = std::max(out.delta_len, params.delta_len);
    out.delta_pipe = std::max(out.delta_pipe, params.delta_pipe);
    out.characteristics.push_back(sel.characteristics);
    out.sources.push_back({std::move(ranked), params});
  }
  out.rate = injection_rate(c.rate, out.delta_pipe);
  return out;
}

/// Slots sampled for throughput-vs-injection curves: 10 per decade of elapsed
/// slots plus the last slot.
inline std::vector<Slot> log_sample_slots(Slot horizon) {
  std::vector<Slot> out;
  for (int k = 0;; ++k) {
    const auto elapsed = static_cast<Slot>(std::llround(std::pow(10.0, k / 10.0)));
    if (elapsed > horizon) break;
    if (out.empty() || out.back() != elapsed - 1) out.push_back(elapsed - 1);
  }
  if (horizon > 0 && (out.empty() || out.back() != horizon - 1)) out.push_back(horizon - 1);
  return out;
}

namespace detail {

inline std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace detail

inline void write_params_csv(std::ostream& os, const PreparedExperiment& prep, const ExperimentConfig& c) {
  const std::string hash = config_hash(c);
  os << "source,depth,K,M,objective,R,h,delta_len,delta_pipe,slow_prob,seed,config_hash\n";
  for (std::size_t i = 0; i < prep.sources.size(); ++i) {
    const SourceSchedule& s = prep.sources[i];
    const TreeCharacteristics& tc = prep.characteristics[i];
    os << s.node() << ',' << s.labst.tree().depth() << ',' << detail::format_real(tc.max_avg_layer_affectance) << ','
       << detail::format_real(tc.max_path_affectance) << ',' << detail::format_real(tc.objective) << ','
       << s.params.max_rank << ',' << s.params.h << ',' << s.params.delta_len << ',' << s.params.delta_pipe << ','
       << detail::format_real(s.params.slow_prob) << ',' << c.seed << ',' << hash << '\n';
  }
}

/// Snapshot rows every `snapshot_every` slots and at the last slot. The events
/// column holds cumulative event counts up to that slot.
inline void write_run_csv(std::ostream& os, const SimTrace& trace, const ExperimentConfig& c) {
  const std::string hash = config_hash(c);
  os << "slot,injected,delivered,queue_total,ratio,events,seed,config_hash\n";
  std::size_t next_event = 0;
  std::size_t counts[5] = {0, 0, 0, 0, 0};
  const Slot horizon = trace.horizon();
  for (Slot t = 0; t < horizon; ++t) {
    if ((t + 1) % c.snapshot_every != 0 && t != horizon - 1) continue;
    while (next_event < trace.events.size() && trace.events[next_event].slot <= t)
      ++counts[static_cast<int>(trace.events[next_event++].kind)];
    const auto i = static_cast<std::size_t>(t);
    os << t << ',' << trace.injected[i] << ',' << trace.delivered[i] << ',' << trace.queue_total[i] << ','
       << detail::format_real(competitive_throughput(trace, t)) << ",silent=" << counts[0] << ";discovery=" << counts[1]
       << ";list_adopted=" << counts[2] << ";budget=" << counts[3] << ";bound=" << counts[4] << ',' << c.seed << ','
       << hash << '\n';
  }
}

inline void write_plot_csv(std::ostream& os, const SimTrace& trace, const ExperimentConfig& c) {
  const std::string hash = config_hash(c);
  os << "slot,injected,delivered,ratio,seed,config_hash\n";
  for (Slot t : log_sample_slots(trace.horizon())) {
    const auto i = static_cast<std::size_t>(t);
    os << t << ',' << trace.injected[i] << ',' << trace.delivered[i] << ','
       << detail::format_real(competitive_throughput(trace, t)) << ',' << c.seed << ',' << hash << '\n';
  }
}

struct ExperimentSummary {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string topology;
  std::size_t n = 0;
  std::string matrix;
  int alpha = 0;
  std::string rate;
  std::string policy;
  Slot slots = 0;
  std::size_t sources = 0;
  Slot delta_len = 0;
  Slot delta_pipe = 0;
  double injection_rate = 0.0;
  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  double final_ratio = 1.0;
  double lower_bound = 0.0;  // 1/(1+delta) - 2 Delta n^2 / t
  std::uint64_t max_queue = 0;
  std::size_t queue_bound_violations = 0;
  std::size_t budget_violations = 0;
  std::size_t fast_link_failures = 0;
  std::size_t silent_rounds = 0;
  std::size_t discoveries = 0;
  std::string status = "ok";
};

inline ExperimentSummary summarize(const ExperimentConfig& c, const PreparedExperiment& prep, const SimTrace& trace) {
  ExperimentSummary s;
  s.config_hash = config_hash(c);
  s.seed = c.seed;
  s.topology = c.network_file ? "file" : std::string(to_string(c.topology));
  s.n = prep.net.node_count();
  s.matrix = c.network_file ? "file" : std::string(to_string(c.matrix));
  s.alpha = prep.net.degradation_distance();
  s.rate = std::string(to_string(c.rate));
  s.policy = std::string(to_string(c.policy));
  s.slots = c.total_slots;
  s.sources = prep.sources.size();
  s.delta_len = prep.delta_len;
  s.delta_pipe = prep.delta_pipe;
  s.injection_rate = prep.rate;
  if (trace.horizon() > 0) {
    const auto last = static_cast<std::size_t>(trace.horizon() - 1);
    s.injected = trace.injected[last];
    s.delivered = trace.delivered[last];
    s.final_ratio = competitive_throughput(trace, trace.horizon() - 1);
    const double nn = static_cast<double>(s.n);
    s.lower_bound = 1.0 / (1.0 + static_cast<double>(s.delta_pipe)) -
                    2.0 * static_cast<double>(s.delta_len) * nn * nn / static_cast<double>(trace.horizon());
  }
  s.max_queue = trace.max_queue;
  s.queue_bound_violations = trace.queue_bound_violations;
  s.budget_violations = trace.budget_violations;
  s.fast_link_failures = trace.fast_link_failures;
  s.silent_rounds = trace.silent_rounds;
  s.discoveries = trace.discoveries;
  return s;
}

inline void write_summary_header(std::ostream& os) {
  os << "config_hash,seed,topology,n,matrix,alpha,rate,policy,slots,sources,delta_len,delta_pipe,injection_rate,"
        "injected,delivered,final_ratio,lower_bound,max_queue,queue_bound_violations,budget_violations,"
        "fast_link_failures,silent_rounds,discoveries,status\n";
}

inline void write_summary_row(std::ostream& os, const ExperimentSummary& s) {
  std::string status = s.status;
  std::replace(status.begin(), status.end(), ',', ';');
  std::replace(status.begin(), status.end(), '\n', ' ');
  os << s.config_hash << ',' << s.seed << ',' << s.topology << ',' << s.n << ',' << s.matrix << ',' << s.alpha << ','
     << s.rate << ',' << s.policy << ',' << s.slots << ',' << s.sources << ',' << s.delta_len << ',' << s.delta_pipe
     << ',' << detail::format_real(s.injection_rate) << ',' << s.injected << ',' << s.delivered << ','
     << detail::format_real(s.final_ratio) << ',' << detail::format_real(s.lower_bound) << ',' << s.max_queue << ','
     << s.queue_bound_violations << ',' << s.budget_violations << ',' << s.fast_link_failures << ','
     << s.silent_rounds << ',' << s.discoveries << ',' << status << '\n';
}

struct ExperimentOutput {
  ExperimentSummary summary;
  SimTrace trace;
};

/// Runs one configuration end to end and writes run.csv, params.csv and
/// plot.csv into config.out_dir.
inline ExperimentOutput run_experiment(const ExperimentConfig& c) {
  PreparedExperiment prep = prepare_experiment(c);
  SimTrace trace = run_mmb(prep.net, prep.sources, InjectionPlan{prep.rate, c.policy}, c.total_slots, c.seed);
  std::filesystem::create_directories(c.out_dir);
  auto open = [&](const char* name) {
    std::ofstream f(c.out_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (c.out_dir / name).string());
    return f;
  };
  {
    auto f = open("params.csv");
    write_params_csv(f, prep, c);
  }
  {
    auto f = open("run.csv");
    write_run_csv(f, trace, c);
  }
  {
    auto f = open("plot.csv");
    write_plot_csv(f, trace, c);
  }
  ExperimentSummary summary = summarize(c, prep, trace);
  return {std::move(summary), std::move(trace)};
}

/// Runs every entry (independently, `threads` at a time) and writes one
/// summary row per entry in grid order. Failing entries keep their row with
/// the error in the status column.
inline std::vector<ExperimentSummary> sweep(std::span<const ExperimentConfig> grid, std::ostream& aggregate,
                                            unsigned threads = 1) {
  std::vector<ExperimentSummary> rows(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        rows[i] = run_experiment(grid[i]).summary;
      } catch (const std::exception& e) {
        ExperimentSummary& s = rows[i];
        s.config_hash = config_hash(grid[i]);
        s.seed = grid[i].seed;
        s.topology = std::string(to_string(grid[i].topology));
        s.n = grid[i].n;
        s.matrix = std::string(to_string(grid[i].matrix));
        s.rate = std::string(to_string(grid[i].rate));
        s.policy = std::string(to_string(grid[i].policy));
        s.slots = grid[i].total_slots;
        s.status = std::string("error: ") + e.what();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(grid.size(), 1))));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  write_summary_header(aggregate);
  for (const auto& r : rows) write_summary_row(aggregate, r);
  return rows;
}

/// Grid of n x topology x rate x policy x seed, each entry writing into
/// root/<index>_<hash>.
inline std::vector<ExperimentConfig> make_grid(const ExperimentConfig& base, std::span<const std::size_t> sizes,
                                               std::span<const TopologyKind> topologies, unsigned seeds,
                                               const std::filesystem::path& root) {
  std::vector<ExperimentConfig> grid;
  for (std::size_t n : sizes)
    for (TopologyKind topo : topologies)
      for (RateKind rate : {RateKind::kOne, RateKind::kInvSqrtOnePlusDelta, RateKind::kInvOnePlusDelta})
        for (InjectionPolicy policy : {InjectionPolicy::kUniform, InjectionPolicy::kNext, InjectionPolicy::kCurrent,
                                       InjectionPolicy::kUniformExceptCurrent})
          for (unsigned s = 0; s < seeds; ++s) {
            ExperimentConfig c = base;
            c.n = n;
            c.topology = topo;
            c.rate = rate;
            c.policy = policy;
            c.seed = base.seed + s;
            std::ostringstream dir;
            dir << std::setw(4) << std::setfill('0') << grid.size() << '_' << config_hash(c);
            c.out_dir = root / dir.str();
            grid.push_back(std::move(c));
          }
  return grid;
}

}  // namespace mmb
