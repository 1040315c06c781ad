#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "grandag/graph.hpp"

namespace grandag {

enum class Scheme { kGaussAnm, kLin, kAddFunc, kPnlGp, kPnlMult };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

// Hyperparameters drawn for one node during generation; serialized into the
// sidecar metadata so every dataset can be audited.
struct NodeDraw {
  std::vector<int> parents;
  bool root = true;
  double root_variance = 0.0;  // gauss-anm roots: N(0, v), v ~ U[1, 2]
  double root_low = 0.0;       // uniform roots: U[low, high]
  double root_high = 0.0;
  double noise_variance = 0.0;  // sigma_j^2
  double laplace_scale = 0.0;   // pnl-gp: l_j
  std::vector<double> weights;  // lin: one coefficient per parent
  double jitter = 0.0;          // largest diagonal jitter used by a GP draw
  int clamp_count = 0;          // pnl-mult parent sums clamped before the log
};

struct GenOptions {
  // Scales every non-root noise term; 0 makes non-root columns a
  // deterministic function of their parents.
  double noise_multiplier = 1.0;
  // Keep the function values f_j and the additive noise terms per node.
  bool keep_latent = false;
  // Optional per-node salt mixed into that node's random stream.
  std::vector<std::uint64_t> node_salt;
};

struct Generated {
  Scheme scheme = Scheme::kGaussAnm;
  std::uint64_t seed = 0;
  Eigen::MatrixXd x;  // n x d
  std::vector<NodeDraw> nodes;
  Eigen::MatrixXd latent;  // f_j(parents), filled when keep_latent
  Eigen::MatrixXd noise;   // noise term as it enters column j, when keep_latent

  std::string metadata_json(const std::string& graph_file = "") const;
};

inline constexpr double kPnlMultMinParentSum = 1e-6;
inline constexpr double kJitterStart = 1e-8;
inline constexpr double kJitterMax = 1e-3;

// Ancestral samplers. Every node draws from its own stream derived from one
// base seed pulled from `rng`, so a column depends only on its parents'
// columns and its own draws.
Generated generate(Scheme scheme, const Dag& g, int n, Rng& rng, const GenOptions& opts = {});
Generated gen_gauss_anm(const Dag& g, int n, Rng& rng, const GenOptions& opts = {});
Generated gen_lin(const Dag& g, int n, Rng& rng, const GenOptions& opts = {});
Generated gen_add_func(const Dag& g, int n, Rng& rng, const GenOptions& opts = {});
Generated gen_pnl_gp(const Dag& g, int n, Rng& rng, const GenOptions& opts = {});
Generated gen_pnl_mult(const Dag& g, int n, Rng& rng, const GenOptions& opts = {});

// k(u, v) = exp(-|u - v|^2 / 2)
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& inputs);

// One joint draw of a zero-mean GP at the rows of `inputs` (n x k), via a
// Cholesky factor of the kernel matrix with escalating diagonal jitter.
// Throws NumericError when the factorization fails at kJitterMax.
Eigen::VectorXd gp_draw(const Eigen::MatrixXd& inputs, Rng& rng, double* jitter_used = nullptr);

// Train/held-out partition with optional standardization using statistics
// of the train rows only (population standard deviation).
struct Dataset {
  Eigen::MatrixXd x;  // all rows in original order, standardized if requested
  Eigen::MatrixXd train;
  Eigen::MatrixXd heldout;
  std::vector<int> train_rows;
  std::vector<int> heldout_rows;
  Eigen::RowVectorXd mean;    // train-row mean of the raw data
  Eigen::RowVectorXd stddev;  // train-row standard deviation of the raw data
  bool standardized = false;

  int n() const { return static_cast<int>(x.rows()); }
  int d() const { return static_cast<int>(x.cols()); }
};

Dataset split_and_standardize(const Eigen::MatrixXd& x, double train_fraction, bool standardize,
                              Rng& rng);

// Plain numeric CSV: one sample per row, no header.
Eigen::MatrixXd read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m);
std::string format_csv_matrix(const Eigen::MatrixXd& m);

}  // namespace grandag
