#include "grandag/nn.hpp"

#include <cmath>
#include <numbers>

#include "grandag/error.hpp"

namespace grandag {

std::string to_string(Head h) { return h == Head::kMean ? "mean" : "mean-logvar"; }

Head parse_head(const std::string& name) {
  if (name == "mean") return Head::kMean;
  if (name == "mean-logvar") return Head::kMeanLogVar;
  throw InvalidInput("unknown head \"" + name + "\" (expected mean or mean-logvar)");
}

NnStack::NnStack(NetConfig config) : config_(std::move(config)) {
  if (config_.d < 1) throw InvalidInput("network stack needs d >= 1");
  for (int h : config_.hidden) {
    if (h < 1) throw InvalidInput("hidden layer widths must be positive");
  }
  dims_.push_back(config_.d);
  dims_.insert(dims_.end(), config_.hidden.begin(), config_.hidden.end());
  dims_.push_back(config_.outputs());
  Eigen::Index off = 0;
  for (int l = 0; l < layer_count(); ++l) {
    layer_offset_.push_back(off);
    off += static_cast<Eigen::Index>(dims_[l + 1]) * dims_[l] + dims_[l + 1];
  }
  if (config_.head == Head::kMean) ++off;
  block_ = off;
  params_ = Eigen::VectorXd::Zero(block_ * config_.d);
  masks_ = BinaryMatrix::Ones(config_.d, config_.d);
  masks_.diagonal().setZero();
}

NnStack NnStack::xavier(NetConfig config, Rng& rng) {
  NnStack s(std::move(config));
  for (int j = 0; j < s.d(); ++j) {
    for (int l = 0; l < s.layer_count(); ++l) {
      const double limit = std::sqrt(6.0 / (s.in_dim(l) + s.out_dim(l)));
      std::uniform_real_distribution<double> unif(-limit, limit);
      auto w = s.weight(j, l);
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = unif(rng);
    }
  }
  return s;
}

Eigen::Index NnStack::weight_offset(int node, int layer) const {
  return block_ * node + layer_offset_[layer];
}

Eigen::Map<Eigen::MatrixXd> NnStack::weight_in(Eigen::VectorXd& flat, int node, int layer) const {
  return {flat.data() + weight_offset(node, layer), out_dim(layer), in_dim(layer)};
}
Eigen::Map<const Eigen::MatrixXd> NnStack::weight_in(const Eigen::VectorXd& flat, int node, int layer) const {
  return {flat.data() + weight_offset(node, layer), out_dim(layer), in_dim(layer)};
}
Eigen::Map<Eigen::VectorXd> NnStack::bias_in(Eigen::VectorXd& flat, int node, int layer) const {
  return {flat.data() + weight_offset(node, layer) + static_cast<Eigen::Index>(out_dim(layer)) * in_dim(layer),
          out_dim(layer)};
}
Eigen::Map<const Eigen::VectorXd> NnStack::bias_in(const Eigen::VectorXd& flat, int node, int layer) const {
  return {flat.data() + weight_offset(node, layer) + static_cast<Eigen::Index>(out_dim(layer)) * in_dim(layer),
          out_dim(layer)};
}

Eigen::Index NnStack::log_var_index(int node) const {
  if (config_.head != Head::kMean) throw InvalidInput("log-variance parameter exists only for the mean head");
  return block_ * (node + 1) - 1;
}

void NnStack::restrict_masks(const BinaryMatrix& allowed) {
  if (allowed.rows() != d() || allowed.cols() != d()) throw InvalidInput("mask matrix must be d x d");
  for (int j = 0; j < d(); ++j)
    for (int i = 0; i < d(); ++i)
      if (!allowed(i, j)) masks_(i, j) = 0;
}

int NnStack::active_inputs() const { return static_cast<int>(masks_.cast<int>().sum()); }

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

struct Activations {
  std::vector<Eigen::MatrixXd> act;  // act[0] = masked input (d x B), act[l] input of layer l
  std::vector<Eigen::MatrixXd> pre;  // pre-activation of hidden layer l (l < L)
  Eigen::MatrixXd out;               // m x B
};

Activations run_forward(const NnStack& s, int node, const Eigen::MatrixXd& batch) {
  const int layers = s.layer_count();
  const double slope = s.config().leaky_slope;
  Activations a;
  a.act.resize(layers);
  a.pre.resize(layers - 1);
  Eigen::VectorXd mask = s.masks().col(node).cast<double>();
  a.act[0] = mask.asDiagonal() * batch.transpose();
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = s.weight(node, l) * a.act[l];
    z.colwise() += s.bias(node, l);
    if (l + 1 < layers) {
      a.act[l + 1] = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
      a.pre[l] = std::move(z);
    } else {
      a.out = std::move(z);
    }
  }
  if (!a.out.allFinite()) {
    throw NumericError("non-finite network output for node " + std::to_string(node));
  }
  return a;
}

// Backpropagates d(loss)/d(out) into the node's parameter block of `grad`
// (accumulating) and returns d(loss)/d(masked input), d x B.
Eigen::MatrixXd run_backward(const NnStack& s, int node, const Activations& a, const Eigen::MatrixXd& d_out,
                             Eigen::VectorXd* grad) {
  const int layers = s.layer_count();
  const double slope = s.config().leaky_slope;
  Eigen::MatrixXd delta = d_out;
  for (int l = layers - 1; l >= 0; --l) {
    if (grad) {
      s.weight_in(*grad, node, l).noalias() += delta * a.act[l].transpose();
      s.bias_in(*grad, node, l) += delta.rowwise().sum();
    }
    Eigen::MatrixXd back = s.weight(node, l).transpose() * delta;
    if (l > 0) {
      const Eigen::MatrixXd& pre = a.pre[l - 1];
      delta = back.binaryExpr(pre, [slope](double g, double p) {
        return p > 0.0 ? g : (p < 0.0 ? slope * g : 0.0);
      });
    } else {
      delta = std::move(back);
    }
  }
  return delta;
}

struct GaussTerms {
  Eigen::VectorXd nll;    // per row
  Eigen::MatrixXd d_out;  // d(nll_row)/d(out), m x B
  Eigen::VectorXd d_target;
  double d_logvar = 0.0;  // summed over rows (mean head)
  int clamps = 0;
};

GaussTerms gaussian_terms(const NnStack& s, int node, const Activations& a, const Eigen::MatrixXd& batch) {
  const Eigen::Index b = batch.rows();
  const bool mean_head = s.config().head == Head::kMean;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  GaussTerms t;
  t.nll.resize(b);
  t.d_out = Eigen::MatrixXd::Zero(s.outputs(), b);
  t.d_target.resize(b);
  const double shared_logvar = mean_head ? s.log_var(node) : 0.0;
  for (Eigen::Index r = 0; r < b; ++r) {
    const double mu = a.out(0, r);
    double logvar = mean_head ? shared_logvar : a.out(1, r);
    double var = std::exp(logvar);
    bool clamped = false;
    if (!(var >= kMinVariance)) {
      var = kMinVariance;
      logvar = std::log(kMinVariance);
      clamped = true;
      ++t.clamps;
    }
    const double resid = batch(r, node) - mu;
    t.nll(r) = half_log_2pi + 0.5 * logvar + 0.5 * resid * resid / var;
    t.d_out(0, r) = -resid / var;
    t.d_target(r) = resid / var;
    const double d_lv = clamped ? 0.0 : 0.5 - 0.5 * resid * resid / var;
    if (mean_head) {
      t.d_logvar += d_lv;
    } else {
      t.d_out(1, r) = d_lv;
    }
  }
  if (!t.nll.allFinite()) throw NumericError("non-finite likelihood for node " + std::to_string(node));
  return t;
}

void check_batch(const NnStack& s, int node, const Eigen::MatrixXd& batch) {
  if (node < 0 || node >= s.d()) throw InvalidInput("node index out of range");
  if (batch.cols() != s.d()) {
    throw InvalidInput("input has " + std::to_string(batch.cols()) + " columns, expected " + std::to_string(s.d()));
  }
}

}  // namespace

Eigen::MatrixXd forward_batch(const NnStack& stack, int node, const Eigen::MatrixXd& batch) {
  check_batch(stack, node, batch);
  return run_forward(stack, node, batch).out;
}

Eigen::VectorXd forward(const NnStack& stack, int node, const Eigen::VectorXd& x_row) {
  return forward_batch(stack, node, x_row.transpose()).col(0);
}

Eigen::MatrixXd connectivity(const NnStack& stack, int node) {
  Eigen::MatrixXd c = stack.weight(node, 0).cwiseAbs() * stack.masks().col(node).cast<double>().asDiagonal();
  for (int l = 1; l < stack.layer_count(); ++l) c = stack.weight(node, l).cwiseAbs() * c;
  return c;
}

BatchNll stack_nll(const NnStack& stack, const Eigen::MatrixXd& batch, bool with_grad) {
  if (batch.rows() < 1) throw InvalidInput("empty batch");
  check_batch(stack, 0, batch);
  const double inv_b = 1.0 / static_cast<double>(batch.rows());
  BatchNll res;
  res.per_node = Eigen::VectorXd::Zero(stack.d());
  if (with_grad) res.grad = Eigen::VectorXd::Zero(stack.param_count());
  for (int j = 0; j < stack.d(); ++j) {
    const Activations a = run_forward(stack, j, batch);
    GaussTerms t = gaussian_terms(stack, j, a, batch);
    res.per_node(j) = t.nll.sum() * inv_b;
    res.variance_clamps += t.clamps;
    if (with_grad) {
      t.d_out *= inv_b;
      run_backward(stack, j, a, t.d_out, &res.grad);
      if (stack.config().head == Head::kMean) res.grad(stack.log_var_index(j)) += t.d_logvar * inv_b;
    }
  }
  res.mean_nll = res.per_node.sum();
  return res;
}

double nll(const NnStack& stack, int node, const Eigen::VectorXd& x_row, GradBundle* grad) {
  const Eigen::MatrixXd batch = x_row.transpose();
  check_batch(stack, node, batch);
  const Activations a = run_forward(stack, node, batch);
  const GaussTerms t = gaussian_terms(stack, node, a, batch);
  if (grad) {
    grad->loss = t.nll(0);
    grad->grad = Eigen::VectorXd::Zero(stack.param_count());
    run_backward(stack, node, a, t.d_out, &grad->grad);
    if (stack.config().head == Head::kMean) grad->grad(stack.log_var_index(node)) += t.d_logvar;
  }
  return t.nll(0);
}

Eigen::MatrixXd nll_input_gradient(const NnStack& stack, int node, const Eigen::MatrixXd& batch,
                                   Eigen::VectorXd* row_nll) {
  check_batch(stack, node, batch);
  const Activations a = run_forward(stack, node, batch);
  const GaussTerms t = gaussian_terms(stack, node, a, batch);
  Eigen::MatrixXd d_in = run_backward(stack, node, a, t.d_out, nullptr);
  // act[0] = diag(mask) x^T, so masked inputs receive no gradient.
  Eigen::MatrixXd g = (stack.masks().col(node).cast<double>().asDiagonal() * d_in).transpose();
  g.col(node) += t.d_target;
  if (row_nll) *row_nll = t.nll;
  return g;
}

}  // namespace grandag
