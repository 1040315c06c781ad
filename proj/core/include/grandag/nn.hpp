#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "grandag/graph.hpp"

namespace grandag {

// Output head of every per-node network.
//   kMean:       theta = (mu), with a free log-variance parameter per node.
//   kMeanLogVar: theta = (mu, log sigma^2), both produced by the network.
enum class Head { kMean, kMeanLogVar };

std::string to_string(Head h);
Head parse_head(const std::string& name);

struct NetConfig {
  int d = 0;
  std::vector<int> hidden = {10, 10};
  Head head = Head::kMean;
  double leaky_slope = 0.01;

  int outputs() const { return head == Head::kMean ? 1 : 2; }
};

inline constexpr double kMinVariance = 1e-12;

// Parameters of all d per-node MLPs plus their input masks.
//
// Parameters live in one flat vector so optimizers and gradients share a
// layout: for node j, for each layer l, the weight matrix (column-major,
// out x in) followed by its bias; then, for the mean-only head, the node's
// log-variance. mask(i, j) = 1 lets variable i into network j; the diagonal
// is always 0.
class NnStack {
 public:
  NnStack() = default;
  explicit NnStack(NetConfig config);  // zero parameters, full off-diagonal masks

  // Glorot-uniform weights, zero biases, zero log-variances.
  static NnStack xavier(NetConfig config, Rng& rng);

  const NetConfig& config() const { return config_; }
  int d() const { return config_.d; }
  int layer_count() const { return static_cast<int>(dims_.size()) - 1; }
  int outputs() const { return config_.outputs(); }
  int in_dim(int layer) const { return dims_[layer]; }
  int out_dim(int layer) const { return dims_[layer + 1]; }
  Eigen::Index param_count() const { return params_.size(); }
  Eigen::Index node_block_size() const { return block_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  // Views into an arbitrary vector with this stack's parameter layout.
  Eigen::Map<Eigen::MatrixXd> weight_in(Eigen::VectorXd& flat, int node, int layer) const;
  Eigen::Map<const Eigen::MatrixXd> weight_in(const Eigen::VectorXd& flat, int node, int layer) const;
  Eigen::Map<Eigen::VectorXd> bias_in(Eigen::VectorXd& flat, int node, int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias_in(const Eigen::VectorXd& flat, int node, int layer) const;
  Eigen::Index log_var_index(int node) const;  // mean-only head

  Eigen::Map<Eigen::MatrixXd> weight(int node, int layer) { return weight_in(params_, node, layer); }
  Eigen::Map<const Eigen::MatrixXd> weight(int node, int layer) const { return weight_in(params_, node, layer); }
  Eigen::Map<Eigen::VectorXd> bias(int node, int layer) { return bias_in(params_, node, layer); }
  Eigen::Map<const Eigen::VectorXd> bias(int node, int layer) const { return bias_in(params_, node, layer); }
  double& log_var(int node) { return params_(log_var_index(node)); }
  double log_var(int node) const { return params_(log_var_index(node)); }

  const BinaryMatrix& masks() const { return masks_; }
  bool mask(int input, int node) const { return masks_(input, node) != 0; }
  // Masks only ever go from 1 to 0; a masked input cannot be re-enabled.
  void disable_input(int input, int node) { masks_(input, node) = 0; }
  // Intersects every mask with `allowed`, e.g. a candidate-parent or DAG
  // adjacency. Entries already at 0 stay 0 whatever `allowed` says.
  void restrict_masks(const BinaryMatrix& allowed);
  int active_inputs() const;

 private:
  Eigen::Index weight_offset(int node, int layer) const;

  NetConfig config_;
  std::vector<int> dims_;                  // d, hidden..., m
  std::vector<Eigen::Index> layer_offset_;  // within a node block
  Eigen::Index block_ = 0;
  Eigen::VectorXd params_;
  BinaryMatrix masks_;
};

// Gradient with the layout of NnStack::params() and the scalar it belongs to.
struct GradBundle {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// theta_(j) for one input row (masked by M_(j) before the first layer).
// Throws NumericError with the node index for non-finite outputs.
Eigen::VectorXd forward(const NnStack& stack, int node, const Eigen::VectorXd& x_row);
// Same for a batch (rows are samples); returns an m x B matrix.
Eigen::MatrixXd forward_batch(const NnStack& stack, int node, const Eigen::MatrixXd& batch);

// C_(j) = |W^(L+1)| ... |W^(1)| diag(M_(j)), an m x d nonnegative matrix.
Eigen::MatrixXd connectivity(const NnStack& stack, int node);

// Gaussian negative log-density of x_row[node] under theta_(node). When
// `grad` is given it receives d(nll)/d(params) for every parameter.
double nll(const NnStack& stack, int node, const Eigen::VectorXd& x_row, GradBundle* grad = nullptr);

struct BatchNll {
  double mean_nll = 0.0;       // (1/B) sum_rows sum_j nll_j
  Eigen::VectorXd per_node;    // (1/B) sum_rows nll_j
  Eigen::VectorXd grad;        // gradient of mean_nll, when requested
  int variance_clamps = 0;     // rows whose variance hit kMinVariance
};

BatchNll stack_nll(const NnStack& stack, const Eigen::MatrixXd& batch, bool with_grad);

// Gradient of each row's nll_(node) with respect to that row's inputs (B x d),
// including the direct dependence on the target x[node]. `row_nll` receives
// the per-row values when non-null.
Eigen::MatrixXd nll_input_gradient(const NnStack& stack, int node, const Eigen::MatrixXd& batch,
                                   Eigen::VectorXd* row_nll = nullptr);

// Versioned JSON checkpoint of all weights, biases, variances, masks and the
// head configuration. Doubles are written with round-trip precision.
std::string to_checkpoint_json(const NnStack& stack);
NnStack from_checkpoint_json(const std::string& text);
void save_checkpoint(const std::string& path, const NnStack& stack);
NnStack load_checkpoint(const std::string& path);

}  // namespace grandag
