#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grandag/config.hpp"
#include "grandag/graph.hpp"
#include "grandag/pipeline.hpp"
#include "grandag/simul.hpp"

namespace grandag {

// Random-search distributions. Log ranges are base 10 and sampled uniformly;
// the vectors are sampled uniformly as discrete choices. Empty choice sets
// leave the base config's value untouched.
struct SearchSpace {
  Method method = Method::kGranDag;

  // neural methods
  double log_lr_first_lo = -3.0, log_lr_first_hi = -2.0;
  double log_lr_rest_lo = -4.0, log_lr_rest_hi = -3.0;
  std::vector<double> epsilon;
  std::vector<int> log_prune_cutoff;
  std::vector<int> hidden_units;
  std::vector<int> hidden_layers;
  std::vector<double> pns_threshold;

  // linear method
  std::vector<double> l1_coeff;
  std::vector<double> omega;

  // both
  std::vector<double> h_tol;

  double trial_seconds = 12.0 * 3600.0;  // wall-clock budget per trial

  static SearchSpace gran_dag(Method m = Method::kGranDag);
  static SearchSpace notears();
};

// One draw per hyperparameter on top of `base`.
TrainConfig sample_config(const SearchSpace& space, const TrainConfig& base, Rng& rng);

struct TrialOutcome {
  Dag estimate;
  double score = 0.0;
  bool timed_out = false;
};

// Runs one trial: train + post-process + held-out scoring.
using TrialRunner = std::function<TrialOutcome(const Dataset&, Method, const TrainConfig&)>;

TrialOutcome default_trial(const Dataset& data, Method method, const TrainConfig& cfg);

struct Trial {
  int index = 0;
  TrainConfig config;
  std::optional<double> score;
  std::string status;  // ok, failed, timeout
  std::string message;
  double seconds = 0.0;
  std::optional<Dag> estimate;
};

struct SearchResult {
  std::vector<Trial> trials;
  int best = -1;
  Dag best_estimate;
};

// Trial k uses seed base.seed + k. Failed and timed-out trials are kept in
// the table and skipped by the selection.
SearchResult run_search(const Dataset& data, const SearchSpace& space, int trials, const TrainConfig& base,
                        const TrialRunner& runner = default_trial);

// Index of the highest score among status "ok" trials; ties go to the
// earlier trial. Throws if no trial completed.
int select_best(const std::vector<Trial>& trials);

// CSV with columns trial,config,score,status,seconds (config is quoted JSON).
std::string trial_table_csv(const std::vector<Trial>& trials);
std::vector<Trial> parse_trial_table(const std::string& csv);

}  // namespace grandag
