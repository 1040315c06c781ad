#include "grandag/simul.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "grandag/error.hpp"

namespace grandag {

using nlohmann::json;

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kGaussAnm: return "gauss-anm";
    case Scheme::kLin: return "lin";
    case Scheme::kAddFunc: return "add-func";
    case Scheme::kPnlGp: return "pnl-gp";
    case Scheme::kPnlMult: return "pnl-mult";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  for (auto s : {Scheme::kGaussAnm, Scheme::kLin, Scheme::kAddFunc, Scheme::kPnlGp, Scheme::kPnlMult}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInput("unknown scheme \"" + name + "\" (expected gauss-anm, lin, add-func, pnl-gp, pnl-mult)");
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& inputs) {
  const Eigen::Index n = inputs.rows();
  const Eigen::VectorXd sq = inputs.rowwise().squaredNorm();
  Eigen::MatrixXd k = -2.0 * inputs * inputs.transpose();
  k.colwise() += sq;
  k.rowwise() += sq.transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) k(i, j) = std::exp(-0.5 * std::max(k(i, j), 0.0));
    k(j, j) = 1.0;
  }
  return k;
}

Eigen::VectorXd gp_draw(const Eigen::MatrixXd& inputs, Rng& rng, double* jitter_used) {
  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd k = rbf_kernel(inputs);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
  for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd f = llt.matrixL() * z;
      if (f.allFinite()) {
        if (jitter_used) *jitter_used = jitter;
        return f;
      }
    }
  }
  throw NumericError("GP kernel Cholesky failed with jitter up to 1e-3");
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double laplace(Rng& rng, double scale) {
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  double u = unif(rng);
  while (u == -0.5) u = unif(rng);
  return -scale * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Shared ancestral driver: builds per-node streams and the output buffers,
// then calls `node_fn` for every node in topological order.
template <class NodeFn>
Generated ancestral(Scheme scheme, const Dag& g, int n, Rng& rng, const GenOptions& opts,
                    NodeFn&& node_fn) {
  if (n < 1) throw InvalidInput("sample count must be >= 1");
  if (g.size() < 1) throw InvalidInput("graph must have at least one node");
  if (!opts.node_salt.empty() && static_cast<int>(opts.node_salt.size()) != g.size()) {
    throw InvalidInput("node_salt must have one entry per node");
  }
  const int d = g.size();
  Generated out;
  out.scheme = scheme;
  out.seed = rng();
  out.x = Eigen::MatrixXd::Zero(n, d);
  out.nodes.resize(d);
  if (opts.keep_latent) {
    out.latent = Eigen::MatrixXd::Zero(n, d);
    out.noise = Eigen::MatrixXd::Zero(n, d);
  }
  for (int j : g.topological_order()) {
    const std::uint64_t salt = opts.node_salt.empty() ? 0 : opts.node_salt[j];
    std::seed_seq seq{static_cast<std::uint32_t>(out.seed), static_cast<std::uint32_t>(out.seed >> 32),
                      static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(salt),
                      static_cast<std::uint32_t>(salt >> 32)};
    Rng node_rng(seq);
    NodeDraw& draw = out.nodes[j];
    draw.parents = g.parents(j);
    draw.root = draw.parents.empty();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd noise = Eigen::VectorXd::Zero(n);
    try {
      node_fn(j, draw, node_rng, f, noise, out.x);
    } catch (const NumericError& e) {
      throw GenerationError("node " + std::to_string(j) + ": " + e.what());
    }
    if (opts.keep_latent) {
      out.latent.col(j) = f;
      out.noise.col(j) = noise;
    }
  }
  return out;
}

Eigen::MatrixXd parent_block(const Eigen::MatrixXd& x, const std::vector<int>& parents) {
  Eigen::MatrixXd p(x.rows(), static_cast<Eigen::Index>(parents.size()));
  for (std::size_t k = 0; k < parents.size(); ++k) p.col(static_cast<Eigen::Index>(k)) = x.col(parents[k]);
  return p;
}

void uniform_root(NodeDraw& draw, Rng& rng, Eigen::Ref<Eigen::VectorXd> col, double lo, double hi) {
  draw.root_low = lo;
  draw.root_high = hi;
  for (Eigen::Index i = 0; i < col.size(); ++i) col(i) = uniform(rng, lo, hi);
}

}  // namespace

Generated gen_gauss_anm(const Dag& g, int n, Rng& rng, const GenOptions& opts) {
  return ancestral(Scheme::kGaussAnm, g, n, rng, opts,
                   [&](int j, NodeDraw& draw, Rng& r, Eigen::VectorXd& f, Eigen::VectorXd& noise,
                       Eigen::MatrixXd& x) {
                     std::normal_distribution<double> normal(0.0, 1.0);
                     if (draw.root) {
                       draw.root_variance = uniform(r, 1.0, 2.0);
                       const double sd = std::sqrt(draw.root_variance);
                       for (int i = 0; i < n; ++i) x(i, j) = sd * normal(r);
                       return;
                     }
                     draw.noise_variance = uniform(r, 0.4, 0.8);
                     f = gp_draw(parent_block(x, draw.parents), r, &draw.jitter);
                     const double sd = std::sqrt(draw.noise_variance) * opts.noise_multiplier;
                     for (int i = 0; i < n; ++i) noise(i) = sd * normal(r);
                     x.col(j) = f + noise;
                   });
}

Generated gen_lin(const Dag& g, int n, Rng& rng, const GenOptions& opts) {
  return ancestral(Scheme::kLin, g, n, rng, opts,
                   [&](int j, NodeDraw& draw, Rng& r, Eigen::VectorXd& f, Eigen::VectorXd& noise,
                       Eigen::MatrixXd& x) {
                     if (draw.root) {
                       uniform_root(draw, r, x.col(j), -1.0, 1.0);
                       return;
                     }
                     std::normal_distribution<double> normal(0.0, 1.0);
                     draw.noise_variance = uniform(r, 1.0, 2.0);
                     for (std::size_t k = 0; k < draw.parents.size(); ++k) {
                       draw.weights.push_back(uniform(r, 0.0, 1.0));
                       f += draw.weights.back() * x.col(draw.parents[k]);
                     }
                     const double sd = 0.2 * std::sqrt(draw.noise_variance) * opts.noise_multiplier;
                     for (int i = 0; i < n; ++i) noise(i) = sd * normal(r);
                     x.col(j) = f + noise;
                   });
}

Generated gen_add_func(const Dag& g, int n, Rng& rng, const GenOptions& opts) {
  return ancestral(Scheme::kAddFunc, g, n, rng, opts,
                   [&](int j, NodeDraw& draw, Rng& r, Eigen::VectorXd& f, Eigen::VectorXd& noise,
                       Eigen::MatrixXd& x) {
                     if (draw.root) {
                       uniform_root(draw, r, x.col(j), -1.0, 1.0);
                       return;
                     }
                     std::normal_distribution<double> normal(0.0, 1.0);
                     draw.noise_variance = uniform(r, 1.0, 2.0);
                     for (int p : draw.parents) {
                       double jitter = 0.0;
                       f += gp_draw(x.col(p), r, &jitter);
                       draw.jitter = std::max(draw.jitter, jitter);
                     }
                     const double sd = 0.2 * std::sqrt(draw.noise_variance) * opts.noise_multiplier;
                     for (int i = 0; i < n; ++i) noise(i) = sd * normal(r);
                     x.col(j) = f + noise;
                   });
}

Generated gen_pnl_gp(const Dag& g, int n, Rng& rng, const GenOptions& opts) {
  return ancestral(Scheme::kPnlGp, g, n, rng, opts,
                   [&](int j, NodeDraw& draw, Rng& r, Eigen::VectorXd& f, Eigen::VectorXd& noise,
                       Eigen::MatrixXd& x) {
                     if (draw.root) {
                       uniform_root(draw, r, x.col(j), -1.0, 1.0);
                       return;
                     }
                     draw.laplace_scale = uniform(r, 0.0, 1.0);
                     f = gp_draw(parent_block(x, draw.parents), r, &draw.jitter);
                     for (int i = 0; i < n; ++i) {
                       noise(i) = opts.noise_multiplier * laplace(r, draw.laplace_scale);
                       x(i, j) = sigmoid(f(i) + noise(i));
                     }
                   });
}

Generated gen_pnl_mult(const Dag& g, int n, Rng& rng, const GenOptions& opts) {
  return ancestral(Scheme::kPnlMult, g, n, rng, opts,
                   [&](int j, NodeDraw& draw, Rng& r, Eigen::VectorXd& f, Eigen::VectorXd& noise,
                       Eigen::MatrixXd& x) {
                     if (draw.root) {
                       uniform_root(draw, r, x.col(j), 0.0, 2.0);
                       return;
                     }
                     std::normal_distribution<double> normal(0.0, 1.0);
                     draw.noise_variance = uniform(r, 0.0, 1.0);
                     const double sd = std::sqrt(draw.noise_variance) * opts.noise_multiplier;
                     for (int i = 0; i < n; ++i) {
                       double sum = 0.0;
                       for (int p : draw.parents) sum += x(i, p);
                       if (sum < kPnlMultMinParentSum) {
                         sum = kPnlMultMinParentSum;
                         ++draw.clamp_count;
                       }
                       f(i) = sum;
                       noise(i) = std::abs(sd * normal(r));
                       x(i, j) = std::exp(std::log(sum) + noise(i));
                     }
                   });
}

Generated generate(Scheme scheme, const Dag& g, int n, Rng& rng, const GenOptions& opts) {
  switch (scheme) {
    case Scheme::kGaussAnm: return gen_gauss_anm(g, n, rng, opts);
    case Scheme::kLin: return gen_lin(g, n, rng, opts);
    case Scheme::kAddFunc: return gen_add_func(g, n, rng, opts);
    case Scheme::kPnlGp: return gen_pnl_gp(g, n, rng, opts);
    case Scheme::kPnlMult: return gen_pnl_mult(g, n, rng, opts);
  }
  throw InvalidInput("unknown scheme");
}

std::string Generated::metadata_json(const std::string& graph_file) const {
  json nodes_json = json::array();
  int clamps = 0;
  double max_jitter = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const NodeDraw& nd = nodes[j];
    json e{{"node", j}, {"parents", nd.parents}, {"root", nd.root}};
    if (nd.root) {
      if (scheme == Scheme::kGaussAnm) {
        e["root_variance"] = nd.root_variance;
      } else {
        e["root_range"] = {nd.root_low, nd.root_high};
      }
    } else {
      if (scheme == Scheme::kPnlGp) {
        e["laplace_scale"] = nd.laplace_scale;
      } else {
        e["noise_variance"] = nd.noise_variance;
      }
      if (scheme == Scheme::kLin) e["weights"] = nd.weights;
      if (scheme == Scheme::kGaussAnm || scheme == Scheme::kAddFunc || scheme == Scheme::kPnlGp) {
        e["gp_jitter"] = nd.jitter;
      }
      if (scheme == Scheme::kPnlMult) e["clamp_count"] = nd.clamp_count;
    }
    clamps += nd.clamp_count;
    max_jitter = std::max(max_jitter, nd.jitter);
    nodes_json.push_back(std::move(e));
  }
  json meta{{"scheme", to_string(scheme)},
            {"seed", seed},
            {"n", x.rows()},
            {"d", x.cols()},
            {"graph_file", graph_file},
            {"kernel", "exp(-|u-v|^2/2)"},
            {"max_gp_jitter", max_jitter},
            {"clamp_count", clamps},
            {"nodes", std::move(nodes_json)}};
  return meta.dump(2);
}

// ---------------------------------------------------------------------------
// Splitting

Dataset split_and_standardize(const Eigen::MatrixXd& x, double train_fraction, bool standardize,
                              Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidInput("train fraction must lie strictly between 0 and 1");
  }
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  const int n_train = static_cast<int>(std::llround(n * train_fraction));
  if (n_train < 1 || n_train >= n) {
    throw InvalidInput("split of " + std::to_string(n) + " rows leaves an empty train or held-out part");
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  Dataset ds;
  ds.train_rows.assign(perm.begin(), perm.begin() + n_train);
  ds.heldout_rows.assign(perm.begin() + n_train, perm.end());
  ds.mean = Eigen::RowVectorXd::Zero(d);
  ds.stddev = Eigen::RowVectorXd::Zero(d);
  for (int r : ds.train_rows) ds.mean += x.row(r);
  ds.mean /= n_train;
  for (int r : ds.train_rows) ds.stddev += (x.row(r) - ds.mean).array().square().matrix();
  ds.stddev = (ds.stddev / n_train).array().sqrt().matrix();

  ds.standardized = standardize;
  ds.x = x;
  if (standardize) {
    for (int c = 0; c < d; ++c) {
      if (!(ds.stddev(c) > 0.0)) {
        throw InvalidInput("column " + std::to_string(c) + " is constant on the train split; cannot standardize");
      }
    }
    ds.x = ((x.rowwise() - ds.mean).array().rowwise() / ds.stddev.array()).matrix();
  }
  ds.train.resize(n_train, d);
  ds.heldout.resize(n - n_train, d);
  for (int k = 0; k < n_train; ++k) ds.train.row(k) = ds.x.row(ds.train_rows[k]);
  for (int k = 0; k < n - n_train; ++k) ds.heldout.row(k) = ds.x.row(ds.heldout_rows[k]);
  return ds;
}

// ---------------------------------------------------------------------------
// CSV

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw InvalidInput(path + ": non-numeric CSV cell \"" + cell + "\" on row " + std::to_string(rows.size()));
      }
      row.push_back(v);
    }
    if (rows.empty()) width = row.size();
    if (row.size() != width) {
      throw InvalidInput(path + ": ragged CSV; row " + std::to_string(rows.size()) + " has " +
                         std::to_string(row.size()) + " columns, expected " + std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput(path + ": empty CSV");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::string format_csv_matrix(const Eigen::MatrixXd& m) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  return out.str();
}

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << format_csv_matrix(m);
}

}  // namespace grandag
