#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grandag/nn.hpp"

namespace grandag {

enum class PnsMode { kAuto, kOn, kOff };

std::string to_string(PnsMode m);
PnsMode parse_pns_mode(const std::string& name);

// Every knob of a training run. Defaults reproduce the reference setup:
// RMSprop at 1e-2 for the first subproblem and 1e-4 afterwards, two hidden
// layers of 10 leaky-ReLU units, minibatches of 64, mask threshold 1e-4,
// lambda_0 = 0, mu_0 = 1e-3, eta = 10, gamma = 0.9, stop at h <= 1e-8.
struct TrainConfig {
  // optimizer
  double lr_first = 1e-2;
  double lr_rest = 1e-4;
  int batch_size = 64;
  double rms_rho = 0.9;
  double rms_delta = 1e-8;

  // model
  std::vector<int> hidden = {10, 10};
  Head head = Head::kMean;
  double leaky_slope = 0.01;

  // augmented Lagrangian
  double lambda_init = 0.0;
  double mu_init = 1e-3;
  double eta = 10.0;
  double gamma = 0.9;
  double h_tol = 1e-8;
  double epsilon = 1e-4;  // online mask threshold on A_phi

  // early stopping on the held-out objective
  int eval_period = 100;
  int patience = 2;
  long max_iterations = 500000;
  double max_seconds = 0.0;  // 0 = no wall-clock budget

  // data handling
  double train_fraction = 0.8;
  bool standardize = true;
  std::uint64_t seed = 0;

  // post-processing
  PnsMode pns = PnsMode::kAuto;
  int pns_min_nodes = 50;
  double pns_threshold = 0.75;
  int pns_trees = 500;
  bool prune = true;
  double prune_cutoff = 1e-3;
  int spline_knots = 10;

  // linear baseline
  double l1_coeff = 0.1;
  double omega = 0.3;

  NetConfig net_config(int d) const { return NetConfig{d, hidden, head, leaky_slope}; }
  bool pns_enabled(int d) const { return pns == PnsMode::kOn || (pns == PnsMode::kAuto && d >= pns_min_nodes); }
};

std::string to_json(const TrainConfig& cfg);
// Fields present in `json_text` override the corresponding fields of `base`;
// unknown keys are rejected.
TrainConfig train_config_from_json(const std::string& json_text, TrainConfig base = {});

// Independent, reproducible random stream for one purpose of one run.
Rng make_stream(std::uint64_t seed, std::uint64_t purpose);

}  // namespace grandag
