#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "grandag/config.hpp"
#include "grandag/graph.hpp"
#include "grandag/nn.hpp"
#include "grandag/optim.hpp"
#include "grandag/post.hpp"
#include "grandag/simul.hpp"

namespace grandag {

enum class Method { kGranDag, kGranDagPP, kLinear };

std::string to_string(Method m);
Method parse_method(const std::string& name);  // "grandag", "grandag++", "linear"

// Everything needed to reproduce one training run; written into every
// output directory.
struct RunConfig {
  Method method = Method::kGranDag;
  std::string data_path;
  std::string truth_path;  // optional, only recorded
  std::string output_dir;
  TrainConfig train;

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
};

// Applies the method's head choice (grandag++ uses the mean/log-variance head).
TrainConfig effective_config(Method m, TrainConfig cfg);

struct PipelineResult {
  Method method = Method::kGranDag;
  Dag estimate;            // final output
  Dag thresholded;         // before pruning
  BinaryMatrix support;    // support of A_phi (or |U| >= omega) at the end of training
  std::optional<NnStack> stack;
  std::optional<Eigen::MatrixXd> u;
  AugLagState state;
  std::vector<TrajectoryRow> trajectory;
  bool converged = false;
  bool budget_exceeded = false;
  std::vector<std::string> warnings;
  std::shared_ptr<PnsReport> pns;
  std::optional<PruneReport> prune;
  Eigen::MatrixXd jacobian;  // J (neural methods)
  double seconds = 0.0;
};

// Neural methods: (PNS) -> constrained training -> Jacobian thresholding ->
// (pruning). Linear: constrained training -> omega threshold -> acyclic.
PipelineResult run_pipeline(const Dataset& data, Method method, const TrainConfig& cfg,
                            const AugLagHooks& hooks = {});

// Held-out score of a final graph with the regularizers left out: neural
// methods retrain masked networks and report the mean log-likelihood;
// the linear method refits least squares on the graph's parents and reports
// -1/(2n) ||X_H - X_H U||^2.
double heldout_score(Method method, const Dag& g, const Dataset& data, const TrainConfig& cfg);

// Loads the CSV at cfg.data_path and splits it with the run's seed.
Dataset load_dataset(const std::string& path, const TrainConfig& cfg);

// Writes estimate.txt, trajectory.csv, run_config.json, summary.json and,
// when present, checkpoint.json, pns_report.json, prune_report.json,
// weights.csv (linear).
void write_run_outputs(const std::string& dir, const RunConfig& run, const PipelineResult& result);

}  // namespace grandag
