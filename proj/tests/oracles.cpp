#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Cholesky>

namespace oracle {

using grandag::BinaryMatrix;

Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& a, int terms) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

namespace {

bool visit(const BinaryMatrix& adj, int v, std::vector<int>& color) {
  color[v] = 1;
  for (int u = 0; u < adj.cols(); ++u) {
    if (!adj(v, u)) continue;
    if (color[u] == 1) return true;
    if (color[u] == 0 && visit(adj, u, color)) return true;
  }
  color[v] = 2;
  return false;
}

std::vector<std::vector<bool>> reach(const BinaryMatrix& adj) {
  const int d = static_cast<int>(adj.rows());
  std::vector<std::vector<bool>> r(d, std::vector<bool>(d, false));
  for (int s = 0; s < d; ++s) {
    std::vector<int> stack{s};
    r[s][s] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u = 0; u < d; ++u)
        if (adj(v, u) && !r[s][u]) {
          r[s][u] = true;
          stack.push_back(u);
        }
    }
  }
  return r;
}

}  // namespace

bool has_cycle(const BinaryMatrix& adj) {
  std::vector<int> color(adj.rows(), 0);
  for (int v = 0; v < adj.rows(); ++v)
    if (color[v] == 0 && visit(adj, v, color)) return true;
  return false;
}

std::vector<BinaryMatrix> all_dags(int d) {
  std::vector<std::pair<int, int>> slots;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j) slots.emplace_back(i, j);
  std::vector<BinaryMatrix> out;
  const long total = 1L << slots.size();
  for (long mask = 0; mask < total; ++mask) {
    BinaryMatrix adj = BinaryMatrix::Zero(d, d);
    bool two_cycle = false;
    for (std::size_t k = 0; k < slots.size(); ++k)
      if (mask >> k & 1) adj(slots[k].first, slots[k].second) = 1;
    for (int i = 0; i < d && !two_cycle; ++i)
      for (int j = 0; j < d; ++j)
        if (adj(i, j) && adj(j, i)) two_cycle = true;
    if (!two_cycle && !has_cycle(adj)) out.push_back(adj);
  }
  return out;
}

std::vector<int> equivalence_key(const BinaryMatrix& adj) {
  const int d = static_cast<int>(adj.rows());
  std::vector<int> key;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) key.push_back(adj(i, j) || adj(j, i));
  for (int c = 0; c < d; ++c)
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        key.push_back(adj(a, c) && adj(b, c) && !adj(a, b) && !adj(b, a));
  return key;
}

Eigen::MatrixXi cpdag_by_enumeration(const BinaryMatrix& adj, const std::vector<BinaryMatrix>& dags) {
  const int d = static_cast<int>(adj.rows());
  const auto key = equivalence_key(adj);
  Eigen::MatrixXi forward = Eigen::MatrixXi::Zero(d, d);
  int members = 0;
  for (const auto& g : dags) {
    if (equivalence_key(g) != key) continue;
    ++members;
    forward += g.cast<int>();
  }
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (forward(i, j) == 0) continue;
      out(i, j) = 1;
      if (forward(i, j) < members) out(j, i) = 1;  // some member points the other way
    }
  return out;
}

Eigen::MatrixXi encode(const grandag::Pdag& p) {
  const int d = p.size();
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const auto t = p.type(i, j);
      if (t == grandag::EdgeType::kForward || t == grandag::EdgeType::kUndirected) out(i, j) = 1;
    }
  return out;
}

namespace {

// Simple paths i = p0, p1, ..., pk = j in the skeleton.
void paths(const BinaryMatrix& adj, int v, int target, std::vector<int>& cur, std::vector<bool>& on,
           std::vector<std::vector<int>>& out) {
  if (v == target) {
    out.push_back(cur);
    return;
  }
  for (int u = 0; u < adj.rows(); ++u) {
    if (on[u] || !(adj(v, u) || adj(u, v))) continue;
    on[u] = true;
    cur.push_back(u);
    paths(adj, u, target, cur, on, out);
    cur.pop_back();
    on[u] = false;
  }
}

}  // namespace

int sid_by_paths(const BinaryMatrix& truth, const BinaryMatrix& est) {
  const int d = static_cast<int>(truth.rows());
  const auto desc = reach(truth);
  int mistakes = 0;
  for (int i = 0; i < d; ++i) {
    std::vector<bool> z(d, false);
    for (int p = 0; p < d; ++p) z[p] = est(p, i) != 0;
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      if (z[j]) {
        mistakes += desc[i][j] ? 1 : 0;
        continue;
      }
      std::vector<std::vector<int>> all;
      std::vector<int> cur{i};
      std::vector<bool> on(d, false);
      on[i] = true;
      paths(truth, i, j, cur, on, all);
      bool valid = true;
      for (const auto& p : all) {
        bool causal = true;
        for (std::size_t k = 0; k + 1 < p.size(); ++k) causal = causal && truth(p[k], p[k + 1]);
        if (causal) {
          for (std::size_t k = 1; k < p.size() && valid; ++k)
            for (int v = 0; v < d; ++v)
              if (desc[p[k]][v] && z[v]) valid = false;
          continue;
        }
        bool blocked = false;
        for (std::size_t k = 1; k + 1 < p.size() && !blocked; ++k) {
          const bool collider = truth(p[k - 1], p[k]) && truth(p[k + 1], p[k]);
          if (collider) {
            bool opened = false;
            for (int v = 0; v < d; ++v) opened = opened || (desc[p[k]][v] && z[v]);
            blocked = !opened;
          } else {
            blocked = z[p[k]];
          }
        }
        if (!blocked) valid = false;
      }
      if (!valid) ++mistakes;
    }
  }
  return mistakes;
}

Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.transpose() * x).llt().solve(x.transpose() * y);
}

}  // namespace oracle
