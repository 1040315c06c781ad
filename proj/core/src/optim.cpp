#include "grandag/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "grandag/constraint.hpp"
#include "grandag/error.hpp"
#include "grandag/post.hpp"

namespace grandag {

void update_auglag(AugLagState& state, double h_star, double eta, double gamma) {
  state.lambda += state.mu * h_star;
  if (!state.h_hist.empty() && h_star > gamma * state.h_hist.back()) state.mu *= eta;
  state.h_hist.push_back(h_star);
  ++state.t;
}

SubproblemEval subproblem_objective(const NnStack& stack, const Eigen::MatrixXd& batch, double lambda, double mu,
                                    bool with_grad) {
  if (batch.rows() == 0) throw InvalidInput("subproblem objective needs a nonempty batch");
  SubproblemEval out;
  BatchNll fit = stack_nll(stack, batch, with_grad);
  out.loglik = -fit.mean_nll;
  const bool penalized = lambda != 0.0 || mu != 0.0;
  if (with_grad) {
    out.grad = -fit.grad;
    if (penalized) {
      ConstraintGrad c = h_and_grad(stack);
      out.h = c.h;
      out.grad -= (lambda + mu * c.h) * c.grad.grad;
    } else {
      out.h = constraint_value(stack);
    }
  } else {
    out.h = constraint_value(stack);
  }
  out.objective = out.loglik - lambda * out.h - 0.5 * mu * out.h * out.h;
  return out;
}

void rmsprop_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, RmsPropState& state, double lr) {
  if (grads.size() != params.size()) throw InvalidInput("rmsprop_step: gradient and parameter sizes differ");
  if (state.acc.size() != params.size()) state.acc = Eigen::VectorXd::Zero(params.size());
  state.acc = state.rho * state.acc + (1.0 - state.rho) * grads.cwiseAbs2();
  params.array() -= lr * grads.array() / (state.acc.array().sqrt() + state.delta);
}

std::vector<Edge> maybe_threshold(NnStack& stack, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidInput("mask threshold must be positive");
  const Eigen::MatrixXd a = weighted_adjacency(stack);
  std::vector<Edge> masked;
  for (int j = 0; j < stack.d(); ++j) {
    for (int i = 0; i < stack.d(); ++i) {
      if (i != j && stack.mask(i, j) && a(i, j) < epsilon) {
        stack.disable_input(i, j);
        masked.emplace_back(i, j);
      }
    }
  }
  return masked;
}

std::string trajectory_csv_header() {
  return "iteration,subproblem,lambda,mu,h,train_objective,heldout_objective,edges";
}

std::string to_csv_line(const TrajectoryRow& r) {
  std::ostringstream out;
  out.precision(10);
  out << r.iteration << ',' << r.subproblem << ',' << r.lambda << ',' << r.mu << ',' << r.h << ','
      << r.train_objective << ',' << r.heldout_objective << ',' << r.edges;
  return out.str();
}

namespace {

// Minibatches drawn without replacement; the permutation is redrawn once
// fewer than a full batch of unused rows remains.
class BatchSampler {
 public:
  BatchSampler(const Eigen::MatrixXd& data, int batch_size, Rng& rng)
      : data_(data), size_(std::min<Eigen::Index>(batch_size, data.rows())), rng_(rng), order_(data.rows()) {
    std::iota(order_.begin(), order_.end(), 0);
    pos_ = order_.size();
    batch_.resize(size_, data.cols());
  }

  const Eigen::MatrixXd& next() {
    if (pos_ + size_ > order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    for (Eigen::Index r = 0; r < size_; ++r) batch_.row(r) = data_.row(order_[pos_ + r]);
    pos_ += size_;
    return batch_;
  }

 private:
  const Eigen::MatrixXd& data_;
  Eigen::Index size_;
  Rng& rng_;
  std::vector<Eigen::Index> order_;
  std::size_t pos_ = 0;
  Eigen::MatrixXd batch_;
};

class NnProblem final : public AugLagProblem {
 public:
  NnProblem(NnStack& stack, double epsilon, bool threshold) : stack_(stack), epsilon_(epsilon), threshold_(threshold) {}

  Eigen::VectorXd& params() override { return stack_.params(); }
  SubproblemEval evaluate(const Eigen::MatrixXd& batch, double lambda, double mu, bool with_grad) override {
    return subproblem_objective(stack_, batch, lambda, mu, with_grad);
  }
  double constraint() override { return constraint_value(stack_); }
  int edge_count() override { return static_cast<int>((weighted_adjacency(stack_).array() > 0.0).count()); }
  void on_evaluation() override {
    if (threshold_) maybe_threshold(stack_, epsilon_);
  }

 private:
  NnStack& stack_;
  double epsilon_;
  bool threshold_;
};

// Maximum likelihood only: skips the constraint entirely.
class FreeNnProblem final : public AugLagProblem {
 public:
  explicit FreeNnProblem(NnStack& stack) : stack_(stack) {}

  Eigen::VectorXd& params() override { return stack_.params(); }
  SubproblemEval evaluate(const Eigen::MatrixXd& batch, double, double, bool with_grad) override {
    BatchNll fit = stack_nll(stack_, batch, with_grad);
    SubproblemEval out;
    out.loglik = -fit.mean_nll;
    out.objective = out.loglik;
    if (with_grad) out.grad = -fit.grad;
    return out;
  }
  double constraint() override { return 0.0; }
  int edge_count() override { return stack_.active_inputs(); }

 private:
  NnStack& stack_;
};

}  // namespace

AugLagOutcome run_augmented_lagrangian(AugLagProblem& problem, const Eigen::MatrixXd& train,
                                       const Eigen::MatrixXd& heldout, const TrainConfig& cfg, Rng& batch_rng,
                                       const AugLagHooks& hooks) {
  if (train.rows() == 0) throw InvalidInput("training split is empty");
  if (heldout.rows() == 0) throw InvalidInput("held-out split is empty; early stopping needs one");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto out_of_time = [&] {
    return cfg.max_seconds > 0 && std::chrono::duration<double>(Clock::now() - start).count() > cfg.max_seconds;
  };

  AugLagOutcome out;
  AugLagState& st = out.state;
  st.lambda = hooks.constrained ? cfg.lambda_init : 0.0;
  st.mu = hooks.constrained ? cfg.mu_init : 0.0;

  BatchSampler sampler(train, cfg.batch_size, batch_rng);
  Eigen::VectorXd& params = problem.params();
  RmsPropState rms{Eigen::VectorXd(), cfg.rms_rho, cfg.rms_delta};

  for (;;) {
    const double lr = st.t == 0 ? cfg.lr_first : cfg.lr_rest;
    rms.acc = Eigen::VectorXd::Zero(params.size());

    Eigen::VectorXd best = params;
    double best_obj = problem.evaluate(heldout, st.lambda, st.mu, false).objective;
    int stale = 0;
    double train_sum = 0.0;
    long train_count = 0;
    bool stop_run = false;

    for (long k = 1;; ++k) {
      const SubproblemEval ev = problem.evaluate(sampler.next(), st.lambda, st.mu, true);
      if (!std::isfinite(ev.objective) || !ev.grad.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite objective at iteration " << st.iter_total << " (subproblem " << st.t
            << ", lambda=" << st.lambda << ", mu=" << st.mu << ", h=" << ev.h
            << "); subproblem aborted at its best checkpoint";
        out.warning = msg.str();
        break;
      }
      rmsprop_step(params, -ev.grad, rms, lr);
      ++st.iter_total;
      train_sum += ev.objective;
      ++train_count;

      const bool at_cap = st.iter_total >= cfg.max_iterations;
      if (k % cfg.eval_period != 0 && !at_cap) continue;

      problem.on_evaluation();
      const SubproblemEval held = problem.evaluate(heldout, st.lambda, st.mu, false);
      TrajectoryRow row;
      row.iteration = st.iter_total;
      row.subproblem = st.t;
      row.lambda = st.lambda;
      row.mu = st.mu;
      row.h = held.h;
      row.train_objective = train_sum / static_cast<double>(train_count);
      row.heldout_objective = held.objective;
      row.edges = problem.edge_count();
      out.trajectory.push_back(row);
      if (hooks.on_row) hooks.on_row(row);
      train_sum = 0.0;
      train_count = 0;

      if (held.objective > best_obj) {
        best_obj = held.objective;
        best = params;
        stale = 0;
      } else {
        ++stale;
      }
      if (at_cap || out_of_time()) {
        out.budget_exceeded = true;
        stop_run = true;
        break;
      }
      if (stale >= cfg.patience) break;
    }

    params = best;
    if (!hooks.constrained) {
      out.converged = !out.budget_exceeded;
      break;
    }
    const double h_star = problem.constraint();
    update_auglag(st, h_star, cfg.eta, cfg.gamma);
    if (h_star <= cfg.h_tol) {
      out.converged = true;
      break;
    }
    if (stop_run) break;
  }
  if (out.budget_exceeded) {
    std::ostringstream msg;
    msg << "budget exhausted after " << st.iter_total << " iterations with h = "
        << (st.h_hist.empty() ? std::numeric_limits<double>::quiet_NaN() : st.h_hist.back())
        << "; returning the best checkpoint";
    out.warning = out.warning.empty() ? msg.str() : out.warning + "; " + msg.str();
  }
  return out;
}

TrainResult train(const Dataset& data, const TrainConfig& cfg, const AugLagHooks& hooks) {
  const int d = data.d();
  if (d < 1) throw InvalidInput("dataset has no columns");
  TrainResult result;
  Rng init_rng = make_stream(cfg.seed, 1);
  result.stack = NnStack::xavier(cfg.net_config(d), init_rng);
  if (cfg.pns_enabled(d)) {
    Rng pns_rng = make_stream(cfg.seed, 2);
    auto report = std::make_shared<PnsReport>(pns(data, cfg.pns_threshold, cfg.pns_trees, pns_rng));
    result.stack.restrict_masks(report->candidates);
    result.pns_candidates = report->candidates;
    result.pns_report = std::move(report);
  }
  Rng batch_rng = make_stream(cfg.seed, 3);
  NnProblem problem(result.stack, cfg.epsilon, true);
  AugLagHooks run_hooks = hooks;
  run_hooks.constrained = true;
  AugLagOutcome o = run_augmented_lagrangian(problem, data.train, data.heldout, cfg, batch_rng, run_hooks);
  result.state = std::move(o.state);
  result.trajectory = std::move(o.trajectory);
  result.converged = o.converged;
  result.budget_exceeded = o.budget_exceeded;
  result.warning = std::move(o.warning);
  return result;
}

std::vector<double> fit_unconstrained(NnStack& stack, const Dataset& data, const TrainConfig& cfg) {
  Rng batch_rng = make_stream(cfg.seed, 5);
  FreeNnProblem problem(stack);
  std::vector<double> accepted;
  double best = -std::numeric_limits<double>::infinity();
  AugLagHooks hooks;
  hooks.constrained = false;
  hooks.on_row = [&](const TrajectoryRow& row) {
    if (row.heldout_objective > best) {
      best = row.heldout_objective;
      accepted.push_back(-row.heldout_objective);
    }
  };
  run_augmented_lagrangian(problem, data.train, data.heldout, cfg, batch_rng, hooks);
  return accepted;
}

}  // namespace grandag
