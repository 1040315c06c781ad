#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "grandag/config.hpp"
#include "grandag/graph.hpp"
#include "grandag/nn.hpp"
#include "grandag/simul.hpp"

namespace grandag {

// ---------------------------------------------------------------------------
// Final thresholding

// J(i, j) = mean over `rows` of |d p_j(x_j | x_pa) / d x_i|, the expected
// absolute Jacobian of the conditional densities. The diagonal is zeroed.
Eigen::MatrixXd jacobian_score(const NnStack& stack, const Eigen::MatrixXd& rows);

// Deletes edges of `support` in ascending `strength` order (ties broken by
// lexicographic (i, j)) until the graph is acyclic. `removed` receives the
// deleted edges in deletion order.
Dag threshold_to_dag(const BinaryMatrix& support, const Eigen::MatrixXd& strength,
                     std::vector<Edge>* removed = nullptr);

struct ThresholdResult {
  Dag dag;
  Eigen::MatrixXd score;  // J
  std::vector<Edge> removed;
};

// Support of the trained stack (active masks with (A_phi)_ij > 0), reduced
// to a DAG using the expected Jacobian over the train split.
ThresholdResult jacobian_threshold(const NnStack& stack, const Dataset& data);

// Current edge support of a stack: mask(i, j) = 1 and (A_phi)_ij > 0.
BinaryMatrix stack_support(const NnStack& stack);

// ---------------------------------------------------------------------------
// Preliminary neighbourhood selection

struct ExtraTreesOptions {
  int n_trees = 500;
  int min_samples_split = 2;
};

// Variance-reduction feature importances of an extremely randomized trees
// regressor (one uniform random threshold per candidate feature per split,
// all features considered, unlimited depth). Sums to 1 unless no split was
// possible, in which case all zeros.
Eigen::VectorXd extra_trees_importance(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                                       const ExtraTreesOptions& opts, Rng& rng);

// keep[i] = importance_i > factor * mean(importance)
std::vector<bool> select_above_mean(const Eigen::VectorXd& importance, double factor);

struct PnsReport {
  double threshold_factor = 0.75;
  int n_trees = 0;
  Eigen::MatrixXd importance;  // importance(i, j): feature i for target j; diagonal 0
  BinaryMatrix candidates;     // candidates(i, j) = 1 keeps i as a possible parent of j
  std::vector<std::string> warnings;

  std::string to_json() const;
};

// One regressor per node on the (standardized) train split.
PnsReport pns(const Dataset& data, double threshold_factor, int n_trees, Rng& rng);

// ---------------------------------------------------------------------------
// Pruning

// Cubic B-spline basis (n x (k + 4)) with k interior knots at quantiles of
// x and boundary knots at its range; coincident knots are merged.
Eigen::MatrixXd bspline_basis(const Eigen::VectorXd& x, int interior_knots);

struct AdditiveTest {
  std::vector<double> p_values;  // one per covariate column block; NaN if untestable
  bool ridge = false;            // design was rank deficient and ridge-stabilized
  int residual_df = 0;
};

// Least-squares additive spline regression of y on every column of
// `covariates`, with a per-covariate F-test of the full model against the
// model without that covariate's spline block.
AdditiveTest additive_f_test(const Eigen::MatrixXd& covariates, const Eigen::VectorXd& y, int interior_knots);

struct PruneNodeReport {
  int node = 0;
  std::vector<int> parents;
  std::vector<double> p_values;
  std::vector<int> removed;
  bool ridge = false;
};

struct PruneReport {
  double cutoff = 1e-3;
  std::vector<PruneNodeReport> nodes;
  std::vector<std::string> warnings;

  std::string to_json() const;
};

// Removes every parent whose p-value exceeds `cutoff`. Only deletes edges,
// so the result stays acyclic.
Dag prune(const Dag& g, const Dataset& data, double cutoff = 1e-3, int interior_knots = 10,
          PruneReport* report = nullptr);

// ---------------------------------------------------------------------------
// Held-out scoring

// (1/|H|) sum_rows sum_j log p_j(x_j | x_pa) with no penalty terms.
double heldout_loglik(const NnStack& stack, const Eigen::MatrixXd& heldout);

// Fresh networks with masks frozen to g, refit by maximum likelihood on the
// train split, scored on the held-out split.
double retrain_heldout_score(const Dag& g, const Dataset& data, const TrainConfig& cfg);

}  // namespace grandag
