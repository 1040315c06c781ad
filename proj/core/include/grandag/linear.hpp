#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "grandag/config.hpp"
#include "grandag/graph.hpp"
#include "grandag/optim.hpp"
#include "grandag/simul.hpp"

namespace grandag {

// Linear structural model x_j = u_j^T x + noise, scored by the L1-penalized
// least squares S(U, X) = -1/(2n) ||X - XU||_F^2 - l1 ||U||_1.

struct LinearScore {
  double value = 0.0;
  Eigen::MatrixXd grad;  // dS/dU, subgradient 0 at u = 0, zero diagonal
};

LinearScore linear_score(const Eigen::MatrixXd& u, const Eigen::MatrixXd& x, double l1_coeff);

struct LinearConstraint {
  double h = 0.0;
  Eigen::MatrixXd grad;  // 2 (e^{U o U})^T o U
};

// h(U) = tr(e^{U o U}) - d.
LinearConstraint linear_constraint(const Eigen::MatrixXd& u);

// Drops |u_ij| < omega, then removes the remaining edges by ascending |u_ij|
// until the graph is acyclic.
Dag threshold_linear(const Eigen::MatrixXd& u, double omega);

struct LinearResult {
  Eigen::MatrixXd u;
  Dag dag;
  AugLagState state;
  std::vector<TrajectoryRow> trajectory;
  bool converged = false;
  bool budget_exceeded = false;
  std::string warning;
};

// Same augmented Lagrangian loop as the neural model, with U as the only
// parameters (zero initialized) and cfg.l1_coeff / cfg.omega.
LinearResult train_linear(const Dataset& data, const TrainConfig& cfg, const AugLagHooks& hooks = {});

}  // namespace grandag
