#include "grandag/config.hpp"

#include <random>

#include <json.hpp>

#include "grandag/error.hpp"

namespace grandag {

using nlohmann::json;

std::string to_string(PnsMode m) {
  switch (m) {
    case PnsMode::kAuto: return "auto";
    case PnsMode::kOn: return "on";
    case PnsMode::kOff: return "off";
  }
  return "auto";
}

PnsMode parse_pns_mode(const std::string& name) {
  if (name == "auto") return PnsMode::kAuto;
  if (name == "on") return PnsMode::kOn;
  if (name == "off") return PnsMode::kOff;
  throw InvalidInput("unknown PNS mode '" + name + "' (expected auto, on or off)");
}

std::string to_json(const TrainConfig& c) {
  json j;
  j["lr_first"] = c.lr_first;
  j["lr_rest"] = c.lr_rest;
  j["batch_size"] = c.batch_size;
  j["rms_rho"] = c.rms_rho;
  j["rms_delta"] = c.rms_delta;
  j["hidden"] = c.hidden;
  j["head"] = to_string(c.head);
  j["leaky_slope"] = c.leaky_slope;
  j["lambda_init"] = c.lambda_init;
  j["mu_init"] = c.mu_init;
  j["eta"] = c.eta;
  j["gamma"] = c.gamma;
  j["h_tol"] = c.h_tol;
  j["epsilon"] = c.epsilon;
  j["eval_period"] = c.eval_period;
  j["patience"] = c.patience;
  j["max_iterations"] = c.max_iterations;
  j["max_seconds"] = c.max_seconds;
  j["train_fraction"] = c.train_fraction;
  j["standardize"] = c.standardize;
  j["seed"] = c.seed;
  j["pns"] = to_string(c.pns);
  j["pns_min_nodes"] = c.pns_min_nodes;
  j["pns_threshold"] = c.pns_threshold;
  j["pns_trees"] = c.pns_trees;
  j["prune"] = c.prune;
  j["prune_cutoff"] = c.prune_cutoff;
  j["spline_knots"] = c.spline_knots;
  j["l1_coeff"] = c.l1_coeff;
  j["omega"] = c.omega;
  return j.dump(2);
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void validate(const TrainConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidInput(std::string("invalid training config: ") + what);
  };
  require(c.lr_first > 0 && c.lr_rest > 0, "learning rates must be positive");
  require(c.batch_size >= 1, "batch_size must be >= 1");
  require(c.rms_rho >= 0 && c.rms_rho < 1, "rms_rho must lie in [0, 1)");
  require(c.rms_delta > 0, "rms_delta must be positive");
  for (int w : c.hidden) require(w >= 1, "hidden widths must be >= 1");
  require(c.mu_init > 0, "mu_init must be positive");
  require(c.eta >= 1, "eta must be >= 1");
  require(c.h_tol > 0, "h_tol must be positive");
  require(c.epsilon > 0, "epsilon must be positive");
  require(c.eval_period >= 1 && c.patience >= 1, "eval_period and patience must be >= 1");
  require(c.max_iterations >= 1, "max_iterations must be >= 1");
  require(c.train_fraction > 0 && c.train_fraction < 1, "train_fraction must lie in (0, 1)");
  require(c.pns_threshold > 0, "pns_threshold must be positive");
  require(c.pns_trees >= 1, "pns_trees must be >= 1");
  require(c.prune_cutoff > 0 && c.prune_cutoff < 1, "prune_cutoff must lie in (0, 1)");
  require(c.spline_knots >= 0, "spline_knots must be >= 0");
  require(c.l1_coeff >= 0 && c.omega >= 0, "l1_coeff and omega must be >= 0");
}

}  // namespace

TrainConfig train_config_from_json(const std::string& json_text, TrainConfig c) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("training config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidInput("training config must be a JSON object");
  static const char* kKeys[] = {
      "lr_first",    "lr_rest",     "batch_size",  "rms_rho",      "rms_delta",     "hidden",         "head",
      "leaky_slope", "lambda_init", "mu_init",     "eta",          "gamma",         "h_tol",          "epsilon",
      "eval_period", "patience",    "max_iterations", "max_seconds", "train_fraction", "standardize", "seed",
      "pns",         "pns_min_nodes", "pns_threshold", "pns_trees", "prune",         "prune_cutoff",   "spline_knots",
      "l1_coeff",    "omega"};
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : kKeys) known = known || key == k;
    if (!known) throw InvalidInput("unknown training config key '" + key + "'");
  }
  try {
    take(j, "lr_first", c.lr_first);
    take(j, "lr_rest", c.lr_rest);
    take(j, "batch_size", c.batch_size);
    take(j, "rms_rho", c.rms_rho);
    take(j, "rms_delta", c.rms_delta);
    take(j, "hidden", c.hidden);
    if (j.contains("head")) c.head = parse_head(j.at("head").get<std::string>());
    take(j, "leaky_slope", c.leaky_slope);
    take(j, "lambda_init", c.lambda_init);
    take(j, "mu_init", c.mu_init);
    take(j, "eta", c.eta);
    take(j, "gamma", c.gamma);
    take(j, "h_tol", c.h_tol);
    take(j, "epsilon", c.epsilon);
    take(j, "eval_period", c.eval_period);
    take(j, "patience", c.patience);
    take(j, "max_iterations", c.max_iterations);
    take(j, "max_seconds", c.max_seconds);
    take(j, "train_fraction", c.train_fraction);
    take(j, "standardize", c.standardize);
    take(j, "seed", c.seed);
    if (j.contains("pns")) c.pns = parse_pns_mode(j.at("pns").get<std::string>());
    take(j, "pns_min_nodes", c.pns_min_nodes);
    take(j, "pns_threshold", c.pns_threshold);
    take(j, "pns_trees", c.pns_trees);
    take(j, "prune", c.prune);
    take(j, "prune_cutoff", c.prune_cutoff);
    take(j, "spline_knots", c.spline_knots);
    take(j, "l1_coeff", c.l1_coeff);
    take(j, "omega", c.omega);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("training config has a field of the wrong type: ") + e.what());
  }
  validate(c);
  return c;
}

Rng make_stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(purpose >> 32), 0x67726eu};
  return Rng(seq);
}

}  // namespace grandag
