#pragma once

#include <Eigen/Core>

#include "grandag/nn.hpp"

namespace grandag {

// (A_phi)_ij = sum_k (C_(j))_ki for i != j, zero diagonal. Nonnegative.
Eigen::MatrixXd weighted_adjacency(const NnStack& stack);

// e^a by scaling and squaring with a diagonal Pade approximant (degrees
// 3..13 picked from the 1-norm). Throws NumericError on non-finite input or
// overflow.
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a);

// tr(e^a) - d.
double trace_exp_constraint(const Eigen::MatrixXd& a);

struct ConstraintGrad {
  double h = 0.0;
  Eigen::MatrixXd adjacency;  // A_phi
  GradBundle grad;            // dh/dparams, loss == h
};

// h(phi) = tr(e^{A_phi}) - d and its gradient through every weight matrix,
// using d tr(e^A)/dA = (e^A)^T.
ConstraintGrad h_and_grad(const NnStack& stack);

// h only (no gradient).
double constraint_value(const NnStack& stack);

}  // namespace grandag
