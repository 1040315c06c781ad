#include "grandag/hpsearch.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "grandag/error.hpp"

namespace grandag {

SearchSpace SearchSpace::gran_dag(Method m) {
  SearchSpace s;
  s.method = m;
  s.epsilon = {1e-3, 1e-4, 1e-5};
  s.log_prune_cutoff = {-5, -4, -3, -2, -1};
  s.hidden_units = {4, 8, 16, 32};
  s.hidden_layers = {1, 2, 3};
  s.h_tol = {1e-6, 1e-8, 1e-10};
  s.pns_threshold = {0.5, 0.75, 1.0, 2.0};
  return s;
}

SearchSpace SearchSpace::notears() {
  SearchSpace s;
  s.method = Method::kLinear;
  s.l1_coeff = {0.001, 0.005, 0.01, 0.05, 0.1, 0.5};
  s.omega = {0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0};
  s.h_tol = {1e-6, 1e-8, 1e-10};
  return s;
}

namespace {

template <typename T>
void pick(const std::vector<T>& choices, Rng& rng, T& field) {
  if (choices.empty()) return;
  std::uniform_int_distribution<std::size_t> idx(0, choices.size() - 1);
  field = choices[idx(rng)];
}

double log_uniform(double lo, double hi, Rng& rng) {
  return std::pow(10.0, std::uniform_real_distribution<double>(lo, hi)(rng));
}

}  // namespace

TrainConfig sample_config(const SearchSpace& space, const TrainConfig& base, Rng& rng) {
  TrainConfig c = base;
  if (space.method == Method::kLinear) {
    pick(space.l1_coeff, rng, c.l1_coeff);
    pick(space.omega, rng, c.omega);
    pick(space.h_tol, rng, c.h_tol);
    return c;
  }
  c.lr_first = log_uniform(space.log_lr_first_lo, space.log_lr_first_hi, rng);
  c.lr_rest = log_uniform(space.log_lr_rest_lo, space.log_lr_rest_hi, rng);
  pick(space.epsilon, rng, c.epsilon);
  int log_cut = 0;
  if (!space.log_prune_cutoff.empty()) {
    pick(space.log_prune_cutoff, rng, log_cut);
    c.prune_cutoff = std::pow(10.0, log_cut);
  }
  int units = c.hidden.empty() ? 10 : c.hidden.front();
  int layers = static_cast<int>(c.hidden.size());
  pick(space.hidden_units, rng, units);
  pick(space.hidden_layers, rng, layers);
  c.hidden.assign(layers, units);
  pick(space.h_tol, rng, c.h_tol);
  pick(space.pns_threshold, rng, c.pns_threshold);
  return c;
}

TrialOutcome default_trial(const Dataset& data, Method method, const TrainConfig& cfg) {
  const PipelineResult r = run_pipeline(data, method, cfg);
  TrialOutcome out;
  out.estimate = r.estimate;
  out.timed_out = r.budget_exceeded && cfg.max_seconds > 0 && r.seconds >= cfg.max_seconds;
  if (!out.timed_out) out.score = heldout_score(method, r.estimate, data, cfg);
  return out;
}

int select_best(const std::vector<Trial>& trials) {
  int best = -1;
  for (std::size_t k = 0; k < trials.size(); ++k) {
    const Trial& t = trials[k];
    if (t.status != "ok" || !t.score || !std::isfinite(*t.score)) continue;
    if (best < 0 || *t.score > *trials[best].score) best = static_cast<int>(k);
  }
  if (best < 0) throw GenerationError("hyperparameter search: every trial failed");
  return best;
}

SearchResult run_search(const Dataset& data, const SearchSpace& space, int trials, const TrainConfig& base,
                        const TrialRunner& runner) {
  if (trials < 1) throw InvalidInput("hyperparameter search needs at least one trial");
  SearchResult res;
  Rng rng = make_stream(base.seed, 7);
  for (int k = 0; k < trials; ++k) {
    Trial t;
    t.index = k;
    t.config = sample_config(space, base, rng);
    t.config.seed = base.seed + static_cast<std::uint64_t>(k);
    if (space.trial_seconds > 0) t.config.max_seconds = space.trial_seconds;
    const auto start = std::chrono::steady_clock::now();
    try {
      TrialOutcome o = runner(data, space.method, t.config);
      t.estimate = std::move(o.estimate);
      if (o.timed_out) {
        t.status = "timeout";
      } else {
        t.status = "ok";
        t.score = o.score;
      }
    } catch (const std::exception& e) {
      t.status = "failed";
      t.message = e.what();
    }
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.trials.push_back(std::move(t));
  }
  res.best = select_best(res.trials);
  res.best_estimate = *res.trials[res.best].estimate;
  return res;
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::string one_line(std::string s) {
  std::string out;
  for (char c : s)
    if (c != '\n') out += c;
  return out;
}

}  // namespace

std::string trial_table_csv(const std::vector<Trial>& trials) {
  std::ostringstream out;
  out.precision(17);
  out << "trial,config,score,status,seconds\n";
  for (const Trial& t : trials) {
    out << t.index << ',' << quote(one_line(to_json(t.config))) << ',';
    if (t.score) out << *t.score;
    out << ',' << t.status << ',' << t.seconds << '\n';
  }
  return out.str();
}

std::vector<Trial> parse_trial_table(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<Trial> trials;
  if (!std::getline(in, line) || line.rfind("trial,", 0) != 0) throw InvalidInput("trial table: missing header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw InvalidInput("trial table: expected 5 fields in '" + line + "'");
    Trial t;
    try {
      t.index = std::stoi(f[0]);
      if (!f[2].empty()) t.score = std::stod(f[2]);
      t.seconds = std::stod(f[4]);
    } catch (const std::exception&) {
      throw InvalidInput("trial table: malformed number in '" + line + "'");
    }
    t.config = train_config_from_json(f[1]);
    t.status = f[3];
    trials.push_back(std::move(t));
  }
  return trials;
}

}  // namespace grandag
