#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <ostream>
#include <regex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "grandag/config.hpp"
#include "grandag/error.hpp"
#include "grandag/graph.hpp"
#include "grandag/hpsearch.hpp"
#include "grandag/metrics.hpp"
#include "grandag/pipeline.hpp"
#include "grandag/simul.hpp"

namespace grandag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Bad flag combinations or inputs that do not fit together.
class UsageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "usage"; }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

fs::path output_dir(const std::string& flag, const std::string& fallback_name) {
  if (!flag.empty()) return fs::path(flag);
  const char* root = std::getenv("GRANDAG_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "grandag-out") / fallback_name;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct GraphFlags {
  std::string scheme = "gauss-anm";
  std::string graph = "er";
  int nodes = 10;
  double edges = -1;          // expected total edge count
  double edges_per_node = 1;  // used when --edges is absent
  int samples = 1000;
};

void add_graph_flags(CLI::App* cmd, GraphFlags& f) {
  cmd->add_option("--scheme", f.scheme, "gauss-anm, lin, add-func, pnl-gp or pnl-mult")->capture_default_str();
  cmd->add_option("--graph", f.graph, "er or sf")->check(CLI::IsMember({"er", "sf"}))->capture_default_str();
  cmd->add_option("--nodes", f.nodes, "number of variables")->check(CLI::Range(2, 100000))->capture_default_str();
  auto* e = cmd->add_option("--edges", f.edges, "expected total number of edges");
  auto* k = cmd->add_option("--edges-per-node", f.edges_per_node, "edges per node (ER-k / SF-k)");
  e->excludes(k);
  k->excludes(e);
  cmd->add_option("--samples", f.samples, "number of rows")->check(CLI::PositiveNumber)->capture_default_str();
}

struct GraphDraw {
  Dag dag;
  json info;
};

GraphDraw draw_graph(const GraphFlags& f, Rng& rng) {
  GraphDraw out;
  const double expected = f.edges >= 0 ? f.edges : f.edges_per_node * f.nodes;
  out.info["type"] = f.graph;
  out.info["nodes"] = f.nodes;
  if (f.graph == "er") {
    out.dag = sample_er(f.nodes, expected, rng);
    out.info["expected_edges"] = expected;
    out.info["edge_probability"] = er_edge_probability(f.nodes, expected);
  } else {
    const int m = std::max(1, static_cast<int>(std::lround(expected / f.nodes)));
    out.dag = sample_sf(f.nodes, m, rng);
    out.info["edges_per_new_node"] = m;
    out.info["attachment"] = "min(m, existing nodes) edges per inserted node";
  }
  out.info["edges"] = out.dag.edge_count();
  return out;
}

Generated generate_data(const GraphFlags& f, const Dag& g, Rng& rng) {
  return generate(parse_scheme(f.scheme), g, f.samples, rng);
}

void write_generated(const fs::path& dir, const GraphDraw& g, const Generated& gen, std::uint64_t seed) {
  make_dir(dir);
  write_csv_matrix((dir / "data.csv").string(), gen.x);
  write_graph_file((dir / "truth.txt").string(), g.dag);
  json meta = json::parse(gen.metadata_json("truth.txt"));
  meta["graph"] = g.info;
  meta["cli_seed"] = seed;
  write_file(dir / "metadata.json", meta.dump(2));
}

struct TrainFlags {
  std::string method = "grandag";
  std::string config_path;
  std::string pns = "auto";
  bool no_prune = false;
  bool no_standardize = false;
  TrainConfig cfg;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  TrainConfig& c = f.cfg;
  cmd->add_option("--method", f.method, "grandag, grandag++ or linear")
      ->check(CLI::IsMember({"grandag", "grandag++", "linear"}))
      ->capture_default_str();
  cmd->add_option("--config", f.config_path, "JSON config; its fields override flags")->check(CLI::ExistingFile);
  cmd->add_option("--lr-first", c.lr_first, "learning rate of the first subproblem")->capture_default_str();
  cmd->add_option("--lr-rest", c.lr_rest, "learning rate of later subproblems")->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size)->capture_default_str();
  cmd->add_option("--hidden", c.hidden, "hidden widths, comma separated")->delimiter(',')->capture_default_str();
  cmd->add_option("--epsilon", c.epsilon, "online mask threshold")->capture_default_str();
  cmd->add_option("--h-tol", c.h_tol, "constraint tolerance")->capture_default_str();
  cmd->add_option("--mu-init", c.mu_init)->capture_default_str();
  cmd->add_option("--eta", c.eta)->capture_default_str();
  cmd->add_option("--gamma", c.gamma)->capture_default_str();
  cmd->add_option("--eval-period", c.eval_period, "iterations between held-out evaluations")->capture_default_str();
  cmd->add_option("--patience", c.patience)->capture_default_str();
  cmd->add_option("--max-iterations", c.max_iterations)->capture_default_str();
  cmd->add_option("--max-seconds", c.max_seconds, "wall-clock budget, 0 = none")->capture_default_str();
  cmd->add_option("--train-fraction", c.train_fraction)->capture_default_str();
  cmd->add_flag("--no-standardize", f.no_standardize, "train on raw columns");
  cmd->add_option("--pns", f.pns, "auto (d >= 50), on or off")
      ->check(CLI::IsMember({"auto", "on", "off"}))
      ->capture_default_str();
  cmd->add_option("--pns-threshold", c.pns_threshold)->capture_default_str();
  cmd->add_option("--pns-trees", c.pns_trees)->capture_default_str();
  cmd->add_flag("--no-prune", f.no_prune, "skip the pruning step");
  cmd->add_option("--prune-cutoff", c.prune_cutoff)->capture_default_str();
  cmd->add_option("--l1", c.l1_coeff, "L1 coefficient (linear)")->capture_default_str();
  cmd->add_option("--omega", c.omega, "final weight threshold (linear)")->capture_default_str();
}

// Flags first, then the optional config file on top.
RunConfig resolve_run(const TrainFlags& f, std::uint64_t seed) {
  RunConfig run;
  run.method = parse_method(f.method);
  run.train = f.cfg;
  run.train.pns = parse_pns_mode(f.pns);
  run.train.prune = !f.no_prune;
  run.train.standardize = !f.no_standardize;
  run.train.seed = seed;
  run.train = train_config_from_json(to_json(run.train), run.train);  // validates flag values
  if (!f.config_path.empty()) {
    const json j = json::parse(read_file(f.config_path), nullptr, false);
    if (j.is_discarded()) throw InvalidInput("config file " + f.config_path + " is not valid JSON");
    if (j.contains("train") || j.contains("method")) {
      if (j.contains("method")) run.method = parse_method(j.at("method").get<std::string>());
      if (j.contains("train")) run.train = train_config_from_json(j.at("train").dump(), run.train);
    } else {
      run.train = train_config_from_json(j.dump(), run.train);
    }
  }
  return run;
}

json metrics_json(const MetricsReport& r) { return json::parse(r.to_json()); }

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_generate(const GraphFlags& f, std::uint64_t seed, const std::string& out_flag, std::ostream& out) {
  const fs::path dir = output_dir(out_flag, "generate-" + std::to_string(seed));
  Rng rng = make_stream(seed, 10);
  const GraphDraw g = draw_graph(f, rng);
  const Generated gen = generate_data(f, g.dag, rng);
  write_generated(dir, g, gen, seed);
  json summary{{"data", (dir / "data.csv").string()},
               {"truth", (dir / "truth.txt").string()},
               {"metadata", (dir / "metadata.json").string()},
               {"rows", gen.x.rows()},
               {"columns", gen.x.cols()},
               {"edges", g.dag.edge_count()}};
  out << summary.dump(2) << '\n';
  return 0;
}

int cmd_train(const TrainFlags& f, std::uint64_t seed, const std::string& data_path, const std::string& truth_path,
              const std::string& out_flag, std::ostream& out) {
  RunConfig run = resolve_run(f, seed);
  run.data_path = data_path;
  run.truth_path = truth_path;
  const fs::path dir = output_dir(out_flag, "train-" + std::to_string(run.train.seed));
  run.output_dir = dir.string();

  const Dataset data = load_dataset(data_path, run.train);
  std::optional<Dag> truth;
  if (!truth_path.empty()) {
    truth = read_graph_file(truth_path);
    if (truth->size() != data.d())
      throw UsageError("truth graph has " + std::to_string(truth->size()) + " nodes but the data has " +
                       std::to_string(data.d()) + " columns");
  }
  const PipelineResult result = run_pipeline(data, run.method, run.train);
  write_run_outputs(dir.string(), run, result);

  json summary = json::parse(read_file((dir / "summary.json").string()));
  summary["output"] = dir.string();
  if (truth) {
    json prov{{"method", to_string(run.method)}, {"seed", run.train.seed}, {"data", data_path}, {"truth", truth_path}};
    const MetricsReport m = evaluate_graphs(*truth, result.estimate, {}, prov.dump());
    write_file(dir / "metrics.json", m.to_json());
    summary["metrics"] = metrics_json(m);
  }
  out << summary.dump(2) << '\n';
  return 0;
}

int cmd_evaluate(const std::string& true_path, const std::string& est_path, std::uint64_t seed,
                 const std::string& metrics, const std::string& out_path, std::ostream& out) {
  const MetricSelection which = parse_metric_selection(metrics);
  const Dag truth = read_graph_file(true_path);
  Dag est;
  json prov{{"true", true_path}, {"est", est_path}, {"metrics", metrics}};
  if (est_path == "random") {
    Rng rng = make_stream(seed, 11);
    const double expected = truth.edge_count();
    est = sample_er(truth.size(), std::min(expected, truth.size() * (truth.size() - 1) / 2.0), rng);
    prov["random_seed"] = seed;
    prov["random_expected_edges"] = expected;
  } else {
    const BinaryMatrix adj = [&] {
      const std::string text = read_file(est_path);
      return text.rfind("d=", 0) == 0 ? parse_edge_list(text).adjacency() : parse_adjacency_csv(text);
    }();
    if (!is_acyclic(adj)) throw InvalidInput("estimated graph " + est_path + " is cyclic; SID needs a DAG estimate");
    est = Dag(adj);
  }
  if (est.size() != truth.size())
    throw UsageError("true graph has " + std::to_string(truth.size()) + " nodes, estimate has " +
                     std::to_string(est.size()));
  const MetricsReport r = evaluate_graphs(truth, est, which, prov.dump());
  const std::string text = r.to_json();
  if (!out_path.empty()) write_file(out_path, text);
  out << text << '\n';
  return 0;
}

int cmd_hpsearch(const TrainFlags& f, std::uint64_t seed, const std::string& data_path, int trials,
                 double trial_seconds, const std::string& out_flag, std::ostream& out) {
  RunConfig run = resolve_run(f, seed);
  run.data_path = data_path;
  const fs::path dir = output_dir(out_flag, "hpsearch-" + std::to_string(seed));
  run.output_dir = dir.string();
  make_dir(dir);
  const Dataset data = load_dataset(data_path, run.train);
  SearchSpace space = run.method == Method::kLinear ? SearchSpace::notears() : SearchSpace::gran_dag(run.method);
  space.trial_seconds = trial_seconds;
  const SearchResult res = run_search(data, space, trials, run.train);
  write_file(dir / "trials.csv", trial_table_csv(res.trials));
  write_file(dir / "best_estimate.txt", to_edge_list(res.best_estimate));
  write_file(dir / "run_config.json", run.to_json());
  const Trial& best = res.trials[res.best];
  json summary{{"output", dir.string()},
               {"trials", trials},
               {"best_trial", best.index},
               {"best_score", *best.score},
               {"best_config", json::parse(to_json(best.config))}};
  int failed = 0, timeouts = 0;
  for (const auto& t : res.trials) {
    failed += t.status == "failed";
    timeouts += t.status == "timeout";
  }
  summary["failed"] = failed;
  summary["timed_out"] = timeouts;
  write_file(dir / "search.json", summary.dump(2));
  out << summary.dump(2) << '\n';
  return 0;
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  json metrics;
  json summary;
};

SeedOutcome benchmark_seed(const GraphFlags& gf, const RunConfig& base, std::uint64_t seed, const fs::path& dir) {
  SeedOutcome o;
  o.seed = seed;
  try {
    Rng rng = make_stream(seed, 10);
    const GraphDraw g = draw_graph(gf, rng);
    const Generated gen = generate_data(gf, g.dag, rng);
    write_generated(dir, g, gen, seed);
    RunConfig run = base;
    run.train.seed = seed;
    run.data_path = (dir / "data.csv").string();
    run.truth_path = (dir / "truth.txt").string();
    run.output_dir = (dir / "run").string();
    Rng split_rng = make_stream(seed, 0);
    const Dataset data = split_and_standardize(gen.x, run.train.train_fraction, run.train.standardize, split_rng);
    const PipelineResult r = run_pipeline(data, run.method, run.train);
    write_run_outputs(run.output_dir, run, r);
    json prov{{"method", to_string(run.method)}, {"seed", seed}, {"scheme", gf.scheme}, {"graph", g.info}};
    const MetricsReport m = evaluate_graphs(g.dag, r.estimate, {}, prov.dump());
    write_file(dir / "metrics.json", m.to_json());
    o.metrics = metrics_json(m);
    o.summary = json::parse(read_file((dir / "run" / "summary.json").string()));
    o.ok = true;
  } catch (const std::exception& e) {
    o.error = e.what();
  }
  return o;
}

int cmd_benchmark(const std::string& suite, GraphFlags gf, const TrainFlags& f, std::uint64_t first_seed, int seeds,
                  int threads, const std::string& out_flag, std::ostream& out) {
  static const std::regex pattern(R"((er|sf)(\d+)-d(\d+))");
  std::smatch m;
  if (!std::regex_match(suite, m, pattern)) throw UsageError("suite must look like er1-d10 or sf4-d20, got " + suite);
  gf.graph = m[1].str();
  gf.edges_per_node = std::stod(m[2].str());
  gf.nodes = std::stoi(m[3].str());
  gf.edges = -1;
  const RunConfig base = resolve_run(f, first_seed);
  const fs::path dir = output_dir(out_flag, "benchmark-" + suite);
  make_dir(dir);
  write_file(dir / "run_config.json", base.to_json());

  std::vector<SeedOutcome> results(seeds);
  const int workers = std::max(1, std::min(threads, seeds));
  for (int startk = 0; startk < seeds; startk += workers) {
    std::vector<std::future<SeedOutcome>> jobs;
    for (int k = startk; k < std::min(seeds, startk + workers); ++k) {
      const std::uint64_t s = first_seed + static_cast<std::uint64_t>(k);
      jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred, benchmark_seed, gf, base,
                                s, dir / ("seed-" + std::to_string(s))));
    }
    for (std::size_t k = 0; k < jobs.size(); ++k) results[startk + k] = jobs[k].get();
  }

  std::map<std::string, std::vector<double>> columns;
  json rows = json::array();
  for (const auto& r : results) {
    json row{{"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      row["metrics"] = r.metrics;
      row["iterations"] = r.summary["iterations"];
      row["converged"] = r.summary["converged"];
      row["seconds"] = r.summary["seconds"];
      for (const char* k : {"shd", "shd_c", "sid", "edges_est"}) columns[k].push_back(r.metrics[k].get<double>());
      columns["iterations"].push_back(r.summary["iterations"].get<double>());
    } else {
      row["error"] = r.error;
    }
    rows.push_back(row);
  }
  json aggregate;
  for (const auto& [k, v] : columns) aggregate[k] = {{"mean", mean_of(v)}, {"std", std_of(v)}, {"n", v.size()}};
  json report{{"suite", suite}, {"scheme", gf.scheme}, {"method", to_string(base.method)}, {"samples", gf.samples},
              {"seeds", rows}, {"aggregate", aggregate}};
  write_file(dir / "benchmark.json", report.dump(2));

  std::ostringstream table;
  table << std::fixed << std::setprecision(1);
  table << "suite " << suite << " (" << gf.scheme << ", " << to_string(base.method) << ")\n";
  table << "seed  SHD  SHD-C  SID  edges  iterations\n";
  for (const auto& r : results) {
    if (!r.ok) {
      table << r.seed << "  failed: " << r.error << '\n';
      continue;
    }
    table << r.seed << "  " << r.metrics["shd"] << "  " << r.metrics["shd_c"] << "  " << r.metrics["sid"] << "  "
          << r.metrics["edges_est"] << "  " << r.summary["iterations"] << '\n';
  }
  for (const char* k : {"shd", "shd_c", "sid", "iterations"}) {
    if (!columns.count(k)) continue;
    table << k << ": " << mean_of(columns[k]) << " +- " << std_of(columns[k]) << '\n';
  }
  write_file(dir / "table.txt", table.str());
  out << table.str();
  return columns.empty() ? 1 : 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learn DAGs from observational data with neural augmented Lagrangian training", "grandag"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads (benchmark seeds); >1 is not bit-reproducible")
      ->check(CLI::PositiveNumber);

  std::uint64_t seed = 0;
  std::string out_flag;

  GraphFlags gen_flags;
  auto* gen = app.add_subcommand("generate", "sample a random DAG and a dataset from it");
  add_graph_flags(gen, gen_flags);
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out", out_flag, "output directory");

  TrainFlags train_flags;
  std::string data_path, truth_path;
  auto* tr = app.add_subcommand("train", "learn a DAG from a CSV data file");
  tr->add_option("--data", data_path, "n x d CSV, no header")->required()->check(CLI::ExistingFile);
  tr->add_option("--truth", truth_path, "true graph, to score the estimate")->check(CLI::ExistingFile);
  tr->add_option("--seed", seed)->capture_default_str();
  tr->add_option("--out", out_flag, "output directory");
  add_train_flags(tr, train_flags);

  std::string true_path, est_path, metrics = "shd,shdc,sid", eval_out;
  auto* ev = app.add_subcommand("evaluate", "compare an estimated graph against the truth");
  ev->add_option("--true", true_path, "true graph (edge list or adjacency CSV)")->required()->check(CLI::ExistingFile);
  ev->add_option("--est", est_path, "estimated graph, or 'random' for an ER draw")->required();
  ev->add_option("--seed", seed, "seed of the random estimate")->capture_default_str();
  ev->add_option("--metrics", metrics, "comma-separated subset of shd,shdc,sid")->capture_default_str();
  ev->add_option("--out", eval_out, "also write the report to this file");

  TrainFlags hp_flags;
  std::string hp_data;
  int trials = 50;
  double trial_seconds = 12 * 3600.0;
  auto* hp = app.add_subcommand("hpsearch", "random hyperparameter search scored on held-out data");
  hp->add_option("--data", hp_data, "n x d CSV, no header")->required()->check(CLI::ExistingFile);
  hp->add_option("--trials", trials)->check(CLI::PositiveNumber)->capture_default_str();
  hp->add_option("--trial-seconds", trial_seconds, "wall-clock budget per trial")->capture_default_str();
  hp->add_option("--seed", seed)->capture_default_str();
  hp->add_option("--out", out_flag, "output directory");
  add_train_flags(hp, hp_flags);

  GraphFlags bench_graph;
  TrainFlags bench_flags;
  std::string suite = "er1-d10";
  int seeds = 5;
  auto* bench = app.add_subcommand("benchmark", "generate, train and evaluate over several seeds");
  bench->add_option("--suite", suite, "graph family and size, e.g. er1-d10, sf4-d20")->capture_default_str();
  bench->add_option("--scheme", bench_graph.scheme)->capture_default_str();
  bench->add_option("--samples", bench_graph.samples)->capture_default_str();
  bench->add_option("--seeds", seeds, "number of datasets")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--seed", seed, "first seed")->capture_default_str();
  bench->add_option("--out", out_flag, "output directory");
  add_train_flags(bench, bench_flags);

  std::string command = "grandag";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    for (const auto* sub : app.get_subcommands()) command = sub->get_name();
    err << json{{"error", "usage"}, {"command", command}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  command = app.get_subcommands().front()->get_name();
  try {
    if (command == "generate") return cmd_generate(gen_flags, seed, out_flag, out);
    if (command == "train") return cmd_train(train_flags, seed, data_path, truth_path, out_flag, out);
    if (command == "evaluate") return cmd_evaluate(true_path, est_path, seed, metrics, eval_out, out);
    if (command == "hpsearch") return cmd_hpsearch(hp_flags, seed, hp_data, trials, trial_seconds, out_flag, out);
    return cmd_benchmark(suite, bench_graph, bench_flags, seed, seeds, threads, out_flag, out);
  } catch (const UsageError& e) {
    err << json{{"error", e.kind()}, {"command", command}, {"message", e.what()}}.dump() << '\n';
    return 2;
  } catch (const Error& e) {
    err << json{{"error", e.kind()}, {"command", command}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"command", command}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}

}  // namespace grandag::cli
