#include "grandag/post.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <boost/math/distributions/fisher_f.hpp>
#include <json.hpp>

#include "grandag/constraint.hpp"
#include "grandag/error.hpp"
#include "grandag/optim.hpp"

namespace grandag {

using nlohmann::json;

Eigen::MatrixXd jacobian_score(const NnStack& stack, const Eigen::MatrixXd& rows) {
  const int d = stack.d();
  if (rows.cols() != d) throw InvalidInput("jacobian_score: row width does not match the model");
  Eigen::MatrixXd j_mat = Eigen::MatrixXd::Zero(d, d);
  if (rows.rows() == 0) return j_mat;
  Eigen::VectorXd row_nll;
  for (int node = 0; node < d; ++node) {
    const Eigen::MatrixXd g = nll_input_gradient(stack, node, rows, &row_nll);
    // d p / d x = -p * d nll / d x with p = exp(-nll)
    const Eigen::VectorXd density = (-row_nll.array()).exp().matrix();
    j_mat.col(node) = (g.cwiseAbs().transpose() * density) / static_cast<double>(rows.rows());
  }
  j_mat.diagonal().setZero();
  return j_mat;
}

Dag threshold_to_dag(const BinaryMatrix& support, const Eigen::MatrixXd& strength, std::vector<Edge>* removed) {
  if (support.rows() != support.cols() || strength.rows() != support.rows() || strength.cols() != support.cols())
    throw InvalidInput("threshold_to_dag: support and strength shapes differ");
  BinaryMatrix adj = support;
  adj.diagonal().setZero();
  std::vector<std::tuple<double, int, int>> order;
  for (int i = 0; i < adj.rows(); ++i)
    for (int j = 0; j < adj.cols(); ++j)
      if (adj(i, j)) order.emplace_back(strength(i, j), i, j);
  std::sort(order.begin(), order.end());
  if (removed) removed->clear();
  std::size_t next = 0;
  while (!is_acyclic(adj)) {
    const auto [s, i, j] = order[next++];
    adj(i, j) = 0;
    if (removed) removed->emplace_back(i, j);
  }
  return Dag(adj);
}

BinaryMatrix stack_support(const NnStack& stack) {
  return (weighted_adjacency(stack).array() > 0.0).cast<std::uint8_t>().matrix();
}

ThresholdResult jacobian_threshold(const NnStack& stack, const Dataset& data) {
  ThresholdResult out;
  out.score = jacobian_score(stack, data.train);
  out.dag = threshold_to_dag(stack_support(stack), out.score, &out.removed);
  return out;
}

// ---------------------------------------------------------------------------

std::string PnsReport::to_json() const {
  json j;
  j["threshold_factor"] = threshold_factor;
  j["n_trees"] = n_trees;
  json nodes = json::array();
  for (Eigen::Index t = 0; t < importance.cols(); ++t) {
    json node;
    node["node"] = t;
    std::vector<double> imp(importance.rows());
    std::vector<int> kept;
    for (Eigen::Index i = 0; i < importance.rows(); ++i) {
      imp[i] = importance(i, t);
      if (candidates(i, t)) kept.push_back(static_cast<int>(i));
    }
    node["importance"] = imp;
    node["kept"] = kept;
    nodes.push_back(node);
  }
  j["nodes"] = nodes;
  j["warnings"] = warnings;
  return j.dump(2);
}

PnsReport pns(const Dataset& data, double threshold_factor, int n_trees, Rng& rng) {
  const int d = data.d();
  PnsReport rep;
  rep.threshold_factor = threshold_factor;
  rep.n_trees = n_trees;
  rep.importance = Eigen::MatrixXd::Zero(d, d);
  rep.candidates = BinaryMatrix::Zero(d, d);
  const Eigen::MatrixXd& x = data.train;
  ExtraTreesOptions opts;
  opts.n_trees = n_trees;
  for (int j = 0; j < d; ++j) {
    std::vector<int> others;
    for (int i = 0; i < d; ++i)
      if (i != j) others.push_back(i);
    const Eigen::VectorXd y = x.col(j);
    const double var = (y.array() - y.mean()).square().mean();
    if (!(var > 0.0)) {
      for (int i : others) rep.candidates(i, j) = 1;
      rep.warnings.push_back("node " + std::to_string(j) + ": constant target, all candidates kept");
      continue;
    }
    const Eigen::MatrixXd feats = x(Eigen::all, others);
    const Eigen::VectorXd imp = extra_trees_importance(feats, y, opts, rng);
    const std::vector<bool> keep = select_above_mean(imp, threshold_factor);
    for (std::size_t k = 0; k < others.size(); ++k) {
      rep.importance(others[k], j) = imp(k);
      rep.candidates(others[k], j) = keep[k] ? 1 : 0;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd bspline_basis(const Eigen::VectorXd& x, int interior_knots) {
  constexpr int kDegree = 3;
  const Eigen::Index n = x.size();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const double lo = x.minCoeff(), hi = x.maxCoeff();
  if (!(hi > lo)) return Eigen::MatrixXd(n, 0);

  std::vector<double> sorted(x.data(), x.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots(kDegree + 1, lo);
  for (int k = 1; k <= interior_knots; ++k) {
    const double pos = static_cast<double>(k) / (interior_knots + 1) * static_cast<double>(n - 1);
    const auto base = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(base);
    const double q = base + 1 < sorted.size() ? sorted[base] + frac * (sorted[base + 1] - sorted[base]) : sorted[base];
    if (q > knots.back() && q < hi) knots.push_back(q);
  }
  knots.insert(knots.end(), kDegree + 1, hi);
  const int n_basis = static_cast<int>(knots.size()) - kDegree - 1;
  const int last_span = n_basis - 1;  // knots[last_span] < knots[last_span + 1] == hi

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n_basis);
  double left[kDegree + 1], right[kDegree + 1], vals[kDegree + 1];
  for (Eigen::Index r = 0; r < n; ++r) {
    const double v = x(r);
    int span = static_cast<int>(std::upper_bound(knots.begin(), knots.end(), v) - knots.begin()) - 1;
    span = std::clamp(span, kDegree, last_span);
    // Cox-de Boor, triangular form
    vals[0] = 1.0;
    for (int p = 1; p <= kDegree; ++p) {
      left[p] = v - knots[span + 1 - p];
      right[p] = knots[span + p] - v;
      double saved = 0.0;
      for (int k = 0; k < p; ++k) {
        const double tmp = vals[k] / (right[k + 1] + left[p - k]);
        vals[k] = saved + right[k + 1] * tmp;
        saved = left[p - k] * tmp;
      }
      vals[p] = saved;
    }
    for (int k = 0; k <= kDegree; ++k) out(r, span - kDegree + k) = vals[k];
  }
  return out;
}

AdditiveTest additive_f_test(const Eigen::MatrixXd& covariates, const Eigen::VectorXd& y, int interior_knots) {
  const Eigen::Index n = y.size();
  if (covariates.rows() != n) throw InvalidInput("additive_f_test: covariate and response lengths differ");
  const int k = static_cast<int>(covariates.cols());
  AdditiveTest out;
  out.p_values.assign(k, std::numeric_limits<double>::quiet_NaN());
  if (k == 0) return out;

  // Intercept plus each covariate's basis minus one column (the basis sums to one).
  std::vector<Eigen::MatrixXd> blocks(k);
  std::vector<Eigen::Index> start(k);
  Eigen::Index cols = 1;
  for (int c = 0; c < k; ++c) {
    const Eigen::MatrixXd b = bspline_basis(covariates.col(c), interior_knots);
    blocks[c] = b.cols() > 1 ? Eigen::MatrixXd(b.rightCols(b.cols() - 1)) : Eigen::MatrixXd(n, 0);
    start[c] = cols;
    cols += blocks[c].cols();
  }
  const Eigen::Index df = n - cols;
  out.residual_df = static_cast<int>(std::max<Eigen::Index>(df, 0));
  if (df < 1) return out;

  Eigen::MatrixXd design(n, cols);
  design.col(0).setOnes();
  for (int c = 0; c < k; ++c) design.middleCols(start[c], blocks[c].cols()) = blocks[c];

  Eigen::MatrixXd gram = design.transpose() * design;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < cols) {
    out.ridge = true;
    gram.diagonal().array() += 1e-8 * std::max(1.0, gram.diagonal().mean());
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(cols, cols));
  const Eigen::VectorXd beta = cov * (design.transpose() * y);
  const double rss = (y - design * beta).squaredNorm();
  const double sigma2 = rss / static_cast<double>(df);

  for (int c = 0; c < k; ++c) {
    const Eigen::Index q = blocks[c].cols();
    if (q == 0) continue;
    const Eigen::VectorXd b = beta.segment(start[c], q);
    const Eigen::MatrixXd v = cov.block(start[c], start[c], q, q);
    // RSS(reduced) - RSS(full) = b^T V^-1 b for least squares
    const double wald = b.dot(v.ldlt().solve(b));
    if (!(sigma2 > 0.0)) {
      out.p_values[c] = wald > 0.0 ? 0.0 : 1.0;
      continue;
    }
    const double f = std::max(0.0, wald / static_cast<double>(q) / sigma2);
    boost::math::fisher_f_distribution<double> dist(static_cast<double>(q), static_cast<double>(df));
    out.p_values[c] = boost::math::cdf(boost::math::complement(dist, f));
  }
  return out;
}

std::string PruneReport::to_json() const {
  json j;
  j["cutoff"] = cutoff;
  json nodes = json::array();
  for (const auto& nrep : this->nodes) {
    json node;
    node["node"] = nrep.node;
    node["parents"] = nrep.parents;
    json pv = json::array();
    for (double p : nrep.p_values) pv.push_back(std::isfinite(p) ? json(p) : json(nullptr));
    node["p_values"] = pv;
    node["removed"] = nrep.removed;
    node["ridge"] = nrep.ridge;
    nodes.push_back(node);
  }
  j["nodes"] = nodes;
  j["warnings"] = warnings;
  return j.dump(2);
}

Dag prune(const Dag& g, const Dataset& data, double cutoff, int interior_knots, PruneReport* report) {
  if (g.size() != data.d()) throw InvalidInput("prune: graph and dataset sizes differ");
  if (!(cutoff > 0.0)) throw InvalidInput("prune: cutoff must be positive");
  BinaryMatrix adj = g.adjacency();
  if (report) {
    report->cutoff = cutoff;
    report->nodes.clear();
  }
  const Eigen::MatrixXd& x = data.train;
  for (int j = 0; j < g.size(); ++j) {
    const std::vector<int> parents = g.parents(j);
    if (parents.empty()) continue;
    const AdditiveTest test = additive_f_test(x(Eigen::all, parents), x.col(j), interior_knots);
    PruneNodeReport nrep;
    nrep.node = j;
    nrep.parents = parents;
    nrep.p_values = test.p_values;
    nrep.ridge = test.ridge;
    for (std::size_t k = 0; k < parents.size(); ++k) {
      if (test.p_values[k] > cutoff) {
        adj(parents[k], j) = 0;
        nrep.removed.push_back(parents[k]);
      }
    }
    if (report) {
      if (test.ridge) report->warnings.push_back("node " + std::to_string(j) + ": rank-deficient design, ridge used");
      if (test.residual_df < 1)
        report->warnings.push_back("node " + std::to_string(j) + ": too few rows to test parents, all kept");
      report->nodes.push_back(std::move(nrep));
    }
  }
  return Dag(adj);
}

// ---------------------------------------------------------------------------

double heldout_loglik(const NnStack& stack, const Eigen::MatrixXd& heldout) {
  if (heldout.rows() == 0) throw InvalidInput("held-out split is empty");
  return -stack_nll(stack, heldout, false).mean_nll;
}

double retrain_heldout_score(const Dag& g, const Dataset& data, const TrainConfig& cfg) {
  if (g.size() != data.d()) throw InvalidInput("retrain: graph and dataset sizes differ");
  Rng init = make_stream(cfg.seed, 4);
  NnStack stack = NnStack::xavier(cfg.net_config(data.d()), init);
  stack.restrict_masks(g.adjacency());
  fit_unconstrained(stack, data, cfg);
  return heldout_loglik(stack, data.heldout);
}

}  // namespace grandag
