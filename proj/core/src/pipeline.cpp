#include "grandag/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include <Eigen/QR>
#include <json.hpp>

#include "grandag/error.hpp"
#include "grandag/linear.hpp"

namespace grandag {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Method m) {
  switch (m) {
    case Method::kGranDag: return "grandag";
    case Method::kGranDagPP: return "grandag++";
    case Method::kLinear: return "linear";
  }
  return "grandag";
}

Method parse_method(const std::string& name) {
  if (name == "grandag") return Method::kGranDag;
  if (name == "grandag++") return Method::kGranDagPP;
  if (name == "linear") return Method::kLinear;
  throw InvalidInput("unknown method '" + name + "' (expected grandag, grandag++ or linear)");
}

std::string RunConfig::to_json() const {
  json j;
  j["method"] = to_string(method);
  j["data"] = data_path;
  j["truth"] = truth_path;
  j["output"] = output_dir;
  j["train"] = json::parse(grandag::to_json(train));
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("run config is not valid JSON: ") + e.what());
  }
  RunConfig r;
  try {
    if (j.contains("method")) r.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("data")) r.data_path = j.at("data").get<std::string>();
    if (j.contains("truth")) r.truth_path = j.at("truth").get<std::string>();
    if (j.contains("output")) r.output_dir = j.at("output").get<std::string>();
    if (j.contains("train")) r.train = train_config_from_json(j.at("train").dump(), r.train);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("run config has a field of the wrong type: ") + e.what());
  }
  return r;
}

TrainConfig effective_config(Method m, TrainConfig cfg) {
  if (m == Method::kGranDagPP) cfg.head = Head::kMeanLogVar;
  if (m == Method::kGranDag) cfg.head = Head::kMean;
  return cfg;
}

PipelineResult run_pipeline(const Dataset& data, Method method, const TrainConfig& base, const AugLagHooks& hooks) {
  const auto start = std::chrono::steady_clock::now();
  const TrainConfig cfg = effective_config(method, base);
  PipelineResult r;
  r.method = method;
  if (method == Method::kLinear) {
    LinearResult lin = train_linear(data, cfg, hooks);
    r.support = (lin.u.array().abs() >= cfg.omega).cast<std::uint8_t>().matrix();
    r.support.diagonal().setZero();
    r.estimate = lin.dag;
    r.thresholded = lin.dag;
    r.u = std::move(lin.u);
    r.state = std::move(lin.state);
    r.trajectory = std::move(lin.trajectory);
    r.converged = lin.converged;
    r.budget_exceeded = lin.budget_exceeded;
    if (!lin.warning.empty()) r.warnings.push_back(lin.warning);
  } else {
    TrainResult tr = train(data, cfg, hooks);
    r.support = stack_support(tr.stack);
    ThresholdResult th = jacobian_threshold(tr.stack, data);
    r.jacobian = std::move(th.score);
    r.thresholded = th.dag;
    r.estimate = th.dag;
    if (cfg.prune) {
      PruneReport rep;
      r.estimate = prune(th.dag, data, cfg.prune_cutoff, cfg.spline_knots, &rep);
      r.warnings.insert(r.warnings.end(), rep.warnings.begin(), rep.warnings.end());
      r.prune = std::move(rep);
    }
    r.stack = std::move(tr.stack);
    r.state = std::move(tr.state);
    r.trajectory = std::move(tr.trajectory);
    r.converged = tr.converged;
    r.budget_exceeded = tr.budget_exceeded;
    r.pns = std::move(tr.pns_report);
    if (r.pns) r.warnings.insert(r.warnings.end(), r.pns->warnings.begin(), r.pns->warnings.end());
    if (!tr.warning.empty()) r.warnings.push_back(tr.warning);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

double heldout_score(Method method, const Dag& g, const Dataset& data, const TrainConfig& cfg) {
  if (method != Method::kLinear) return retrain_heldout_score(g, data, effective_config(method, cfg));
  const int d = data.d();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    const std::vector<int> pa = g.parents(j);
    if (pa.empty()) continue;
    const Eigen::MatrixXd xp = data.train(Eigen::all, pa);
    const Eigen::VectorXd w = xp.colPivHouseholderQr().solve(data.train.col(j));
    for (std::size_t k = 0; k < pa.size(); ++k) u(pa[k], j) = w(k);
  }
  return linear_score(u, data.heldout, 0.0).value;
}

Dataset load_dataset(const std::string& path, const TrainConfig& cfg) {
  const Eigen::MatrixXd x = read_csv_matrix(path);
  Rng split_rng = make_stream(cfg.seed, 0);
  return split_and_standardize(x, cfg.train_fraction, cfg.standardize, split_rng);
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw IoError("failed writing " + p.string());
}

}  // namespace

void write_run_outputs(const std::string& dir, const RunConfig& run, const PipelineResult& r) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());

  write_text(root / "run_config.json", run.to_json());
  write_text(root / "estimate.txt", to_edge_list(r.estimate));
  write_text(root / "thresholded.txt", to_edge_list(r.thresholded));

  std::string traj = trajectory_csv_header() + "\n";
  for (const auto& row : r.trajectory) traj += to_csv_line(row) + "\n";
  write_text(root / "trajectory.csv", traj);

  if (r.stack) save_checkpoint((root / "checkpoint.json").string(), *r.stack);
  if (r.u) write_csv_matrix((root / "weights.csv").string(), *r.u);
  if (r.pns) write_text(root / "pns_report.json", r.pns->to_json());
  if (r.prune) write_text(root / "prune_report.json", r.prune->to_json());

  json s;
  s["method"] = to_string(r.method);
  s["d"] = r.estimate.size();
  s["edges_support"] = static_cast<int>(r.support.cast<int>().sum());
  s["edges_thresholded"] = r.thresholded.edge_count();
  s["edges_estimate"] = r.estimate.edge_count();
  s["converged"] = r.converged;
  s["budget_exceeded"] = r.budget_exceeded;
  s["iterations"] = r.state.iter_total;
  s["subproblems"] = r.state.t;
  s["lambda"] = r.state.lambda;
  s["mu"] = r.state.mu;
  s["h_final"] = r.state.h_hist.empty() ? json(nullptr) : json(r.state.h_hist.back());
  s["pns_applied"] = static_cast<bool>(r.pns);
  s["warnings"] = r.warnings;
  s["seconds"] = r.seconds;
  write_text(root / "summary.json", s.dump(2));
}

}  // namespace grandag
