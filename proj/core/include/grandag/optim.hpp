#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "grandag/config.hpp"
#include "grandag/graph.hpp"
#include "grandag/nn.hpp"
#include "grandag/simul.hpp"

namespace grandag {

struct PnsReport;

// Coefficients of the augmented Lagrangian and the history of h(phi*_t).
struct AugLagState {
  double lambda = 0.0;
  double mu = 1e-3;
  std::vector<double> h_hist;
  int t = 0;
  long iter_total = 0;
};

// Closes subproblem t with solution value h*:
//   lambda <- lambda + mu h*
//   mu     <- eta mu   if h* > gamma h*_{t-1}   (first subproblem: mu kept)
void update_auglag(AugLagState& state, double h_star, double eta, double gamma);

// Value and gradient (ascent direction) of the stochastic subproblem
// objective (1/|B|) sum log p - lambda h - (mu/2) h^2.
struct SubproblemEval {
  double objective = 0.0;
  double loglik = 0.0;  // score term alone
  double h = 0.0;
  Eigen::VectorXd grad;
};

SubproblemEval subproblem_objective(const NnStack& stack, const Eigen::MatrixXd& batch, double lambda, double mu,
                                    bool with_grad = true);

struct RmsPropState {
  Eigen::VectorXd acc;
  double rho = 0.9;
  double delta = 1e-8;
};

// acc <- rho acc + (1 - rho) g^2;  params <- params - lr g / (sqrt(acc) + delta).
// `grads` is the gradient of the quantity being minimized.
void rmsprop_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, RmsPropState& state, double lr);

// Permanently masks every input i of network j with (A_phi)_ij < epsilon.
// Returns the newly masked (i, j) pairs.
std::vector<Edge> maybe_threshold(NnStack& stack, double epsilon);

struct TrajectoryRow {
  long iteration = 0;
  int subproblem = 0;
  double lambda = 0.0;
  double mu = 0.0;
  double h = 0.0;
  double train_objective = 0.0;  // mean minibatch objective since the previous row
  double heldout_objective = 0.0;
  int edges = 0;  // support of A_phi
};

std::string trajectory_csv_header();
std::string to_csv_line(const TrajectoryRow& row);

// Anything the augmented Lagrangian loop can drive: a parameter vector, a
// stochastic objective, the constraint, and a hook run at every held-out
// evaluation (used for online thresholding).
class AugLagProblem {
 public:
  virtual ~AugLagProblem() = default;
  virtual Eigen::VectorXd& params() = 0;
  virtual SubproblemEval evaluate(const Eigen::MatrixXd& batch, double lambda, double mu, bool with_grad) = 0;
  virtual double constraint() = 0;
  virtual int edge_count() = 0;
  virtual void on_evaluation() {}
};

struct AugLagOutcome {
  AugLagState state;
  std::vector<TrajectoryRow> trajectory;
  bool converged = false;
  bool budget_exceeded = false;
  std::string warning;
};

struct AugLagHooks {
  // Called with each trajectory row as it is produced.
  std::function<void(const TrajectoryRow&)> on_row;
  // When false, lambda and mu stay at their initial values and the loop
  // runs a single early-stopped subproblem (plain maximum likelihood).
  bool constrained = true;
};

// Sequence of RMSprop-solved subproblems with held-out early stopping (the
// best checkpoint is restored before each coefficient update), terminated
// once h <= cfg.h_tol or the iteration / time budget runs out.
AugLagOutcome run_augmented_lagrangian(AugLagProblem& problem, const Eigen::MatrixXd& train,
                                       const Eigen::MatrixXd& heldout, const TrainConfig& cfg, Rng& batch_rng,
                                       const AugLagHooks& hooks = {});

struct TrainResult {
  NnStack stack;
  AugLagState state;
  std::vector<TrajectoryRow> trajectory;
  bool converged = false;
  bool budget_exceeded = false;
  std::string warning;
  std::optional<BinaryMatrix> pns_candidates;
  std::shared_ptr<PnsReport> pns_report;
};

// Full constrained fit. Runs preliminary neighbourhood selection first when
// cfg.pns_enabled(d).
TrainResult train(const Dataset& data, const TrainConfig& cfg, const AugLagHooks& hooks = {});

// Maximum-likelihood fit of `stack` with its masks frozen: no constraint, no
// thresholding, one early-stopped run at cfg.lr_first. Returns the held-out
// mean NLL at every accepted (improving) checkpoint.
std::vector<double> fit_unconstrained(NnStack& stack, const Dataset& data, const TrainConfig& cfg);

}  // namespace grandag
