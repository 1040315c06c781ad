#include "grandag/linear.hpp"

#include <algorithm>

#include "grandag/constraint.hpp"
#include "grandag/error.hpp"
#include "grandag/post.hpp"

namespace grandag {

LinearScore linear_score(const Eigen::MatrixXd& u, const Eigen::MatrixXd& x, double l1_coeff) {
  if (u.rows() != u.cols() || x.cols() != u.rows()) throw InvalidInput("linear_score: shapes disagree");
  if (x.rows() == 0) throw InvalidInput("linear_score: empty batch");
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd resid = x - x * u;
  LinearScore out;
  out.value = -0.5 / n * resid.squaredNorm() - l1_coeff * u.cwiseAbs().sum();
  out.grad = x.transpose() * resid / n - l1_coeff * u.cwiseSign();
  out.grad.diagonal().setZero();
  return out;
}

LinearConstraint linear_constraint(const Eigen::MatrixXd& u) {
  if (u.rows() != u.cols()) throw InvalidInput("linear_constraint: U must be square");
  const Eigen::MatrixXd e = matrix_exp(u.cwiseAbs2());
  LinearConstraint out;
  out.h = std::max(0.0, (e.diagonal().array() - 1.0).sum());  // same round-off clamp as the neural h
  out.grad = 2.0 * e.transpose().cwiseProduct(u);
  return out;
}

Dag threshold_linear(const Eigen::MatrixXd& u, double omega) {
  const Eigen::MatrixXd mag = u.cwiseAbs();
  BinaryMatrix support = (mag.array() >= omega).cast<std::uint8_t>().matrix();
  support.diagonal().setZero();
  return threshold_to_dag(support, mag);
}

namespace {

class LinearProblem final : public AugLagProblem {
 public:
  LinearProblem(int d, double l1, double omega) : d_(d), l1_(l1), omega_(omega), params_(Eigen::VectorXd::Zero(d * d)) {}

  Eigen::VectorXd& params() override { return params_; }

  SubproblemEval evaluate(const Eigen::MatrixXd& batch, double lambda, double mu, bool with_grad) override {
    const Eigen::Map<const Eigen::MatrixXd> u(params_.data(), d_, d_);
    const LinearScore s = linear_score(u, batch, l1_);
    const LinearConstraint c = linear_constraint(u);
    SubproblemEval out;
    out.loglik = s.value;
    out.h = c.h;
    out.objective = s.value - lambda * c.h - 0.5 * mu * c.h * c.h;
    if (with_grad) {
      Eigen::MatrixXd g = s.grad - (lambda + mu * c.h) * c.grad;
      g.diagonal().setZero();
      out.grad = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    }
    return out;
  }

  double constraint() override {
    return linear_constraint(Eigen::Map<const Eigen::MatrixXd>(params_.data(), d_, d_)).h;
  }

  int edge_count() override { return static_cast<int>((params_.array().abs() >= omega_).count()); }

  Eigen::MatrixXd u() const { return Eigen::Map<const Eigen::MatrixXd>(params_.data(), d_, d_); }

 private:
  int d_;
  double l1_;
  double omega_;
  Eigen::VectorXd params_;
};

}  // namespace

LinearResult train_linear(const Dataset& data, const TrainConfig& cfg, const AugLagHooks& hooks) {
  const int d = data.d();
  if (d < 1) throw InvalidInput("dataset has no columns");
  LinearProblem problem(d, cfg.l1_coeff, cfg.omega);
  Rng batch_rng = make_stream(cfg.seed, 3);
  AugLagHooks run_hooks = hooks;
  run_hooks.constrained = true;
  AugLagOutcome o = run_augmented_lagrangian(problem, data.train, data.heldout, cfg, batch_rng, run_hooks);
  LinearResult r;
  r.u = problem.u();
  r.dag = threshold_linear(r.u, cfg.omega);
  r.state = std::move(o.state);
  r.trajectory = std::move(o.trajectory);
  r.converged = o.converged;
  r.budget_exceeded = o.budget_exceeded;
  r.warning = std::move(o.warning);
  return r;
}

}  // namespace grandag
