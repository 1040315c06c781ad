#include "grandag/graph.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <sstream>

#include "grandag/error.hpp"

namespace grandag {

namespace {

void check_square_binary(const BinaryMatrix& adj) {
  if (adj.rows() != adj.cols()) {
    std::ostringstream msg;
    msg << "adjacency matrix must be square, got " << adj.rows() << "x" << adj.cols();
    throw InvalidInput(msg.str());
  }
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    if (adj(i, i) != 0) {
      throw InvalidInput("adjacency matrix has a self-loop at node " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < adj.cols(); ++j) {
      if (adj(i, j) > 1) throw InvalidInput("adjacency matrix entries must be 0 or 1");
    }
  }
}

// Kahn elimination. Returns the partial order; it is complete iff acyclic.
std::vector<int> kahn(const BinaryMatrix& adj) {
  const int d = static_cast<int>(adj.rows());
  std::vector<int> indeg(d, 0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) indeg[j] += adj(i, j);
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int j = 0; j < d; ++j)
    if (indeg[j] == 0) ready.push(j);
  std::vector<int> order;
  order.reserve(d);
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int w = 0; w < d; ++w) {
      if (adj(v, w) && --indeg[w] == 0) ready.push(w);
    }
  }
  return order;
}

}  // namespace

bool is_acyclic(const BinaryMatrix& adj) {
  check_square_binary(adj);
  return static_cast<Eigen::Index>(kahn(adj).size()) == adj.rows();
}

std::vector<int> topological_order(const BinaryMatrix& adj) {
  check_square_binary(adj);
  auto order = kahn(adj);
  if (static_cast<Eigen::Index>(order.size()) != adj.rows()) {
    throw InvalidInput("graph contains a cycle; no topological order exists");
  }
  return order;
}

// ---------------------------------------------------------------------------
// Dag

Dag::Dag(int d) : adj_(BinaryMatrix::Zero(d, d)) {
  if (d < 0) throw InvalidInput("node count must be nonnegative");
}

Dag::Dag(BinaryMatrix adj) : adj_(std::move(adj)) {
  if (!is_acyclic(adj_)) throw InvalidInput("graph contains a cycle");
}

Dag Dag::from_edges(int d, const std::vector<Edge>& edges) {
  BinaryMatrix adj = BinaryMatrix::Zero(d, d);
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= d || j >= d) {
      throw InvalidInput("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") out of range for d=" + std::to_string(d));
    }
    adj(i, j) = 1;
  }
  return Dag(std::move(adj));
}

int Dag::edge_count() const { return static_cast<int>(adj_.cast<int>().sum()); }

std::vector<Edge> Dag::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < size(); ++j)
      if (adj_(i, j)) out.emplace_back(i, j);
  return out;
}

std::vector<int> Dag::parents(int node) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (adj_(i, node)) out.push_back(i);
  return out;
}

std::vector<int> Dag::children(int node) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j)
    if (adj_(node, j)) out.push_back(j);
  return out;
}

std::vector<int> Dag::topological_order() const { return kahn(adj_); }

BinaryMatrix Dag::descendants() const {
  const int d = size();
  BinaryMatrix de = BinaryMatrix::Zero(d, d);
  const auto order = kahn(adj_);
  // Reverse topological sweep: de(v) = {v} + union of de(children).
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    de(v, v) = 1;
    for (int w = 0; w < d; ++w) {
      if (!adj_(v, w)) continue;
      for (int u = 0; u < d; ++u) de(v, u) |= de(w, u);
    }
  }
  return de;
}

// ---------------------------------------------------------------------------
// Pdag

Pdag::Pdag(int d) : d_(d), cells_(static_cast<std::size_t>(d) * d, EdgeType::kNone) {
  if (d < 0) throw InvalidInput("node count must be nonnegative");
}

std::size_t Pdag::slot(int i, int j) const {
  const int lo = std::min(i, j), hi = std::max(i, j);
  return static_cast<std::size_t>(lo) * d_ + hi;
}

EdgeType Pdag::type(int i, int j) const {
  if (i == j) return EdgeType::kNone;
  const EdgeType stored = cells_[slot(i, j)];
  if (i < j || stored == EdgeType::kNone || stored == EdgeType::kUndirected) return stored;
  return stored == EdgeType::kForward ? EdgeType::kBackward : EdgeType::kForward;
}

void Pdag::set_directed(int from, int to) {
  if (from == to) throw InvalidInput("self-loops are not allowed in a PDAG");
  cells_[slot(from, to)] = from < to ? EdgeType::kForward : EdgeType::kBackward;
}

void Pdag::set_undirected(int i, int j) {
  if (i == j) throw InvalidInput("self-loops are not allowed in a PDAG");
  cells_[slot(i, j)] = EdgeType::kUndirected;
}

void Pdag::clear(int i, int j) {
  if (i != j) cells_[slot(i, j)] = EdgeType::kNone;
}

int Pdag::directed_count() const {
  int n = 0;
  for (int i = 0; i < d_; ++i)
    for (int j = i + 1; j < d_; ++j) {
      const auto t = cells_[slot(i, j)];
      n += (t == EdgeType::kForward || t == EdgeType::kBackward);
    }
  return n;
}

int Pdag::undirected_count() const {
  int n = 0;
  for (int i = 0; i < d_; ++i)
    for (int j = i + 1; j < d_; ++j) n += cells_[slot(i, j)] == EdgeType::kUndirected;
  return n;
}

Pdag Pdag::from_dag(const Dag& g) {
  Pdag p(g.size());
  for (const auto& [i, j] : g.edges()) p.set_directed(i, j);
  return p;
}

// ---------------------------------------------------------------------------
// Samplers

double er_edge_probability(int d, double expected_edges) {
  if (d < 2) throw InvalidInput("ER sampling needs d >= 2");
  const double max_edges = 0.5 * d * (d - 1);
  if (!(expected_edges >= 0.0) || expected_edges > max_edges) {
    std::ostringstream msg;
    msg << "expected edge count " << expected_edges << " outside [0, " << max_edges << "]";
    throw InvalidInput(msg.str());
  }
  return 2.0 * expected_edges / (static_cast<double>(d) * d - d);
}

Dag sample_er(int d, double expected_edges, Rng& rng) {
  const double p = er_edge_probability(d, expected_edges);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  BinaryMatrix adj = BinaryMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (unif(rng) < p) adj(order[a], order[b]) = 1;
  return Dag(std::move(adj));
}

Dag sample_sf(int d, int m, Rng& rng) {
  if (d < 2) throw InvalidInput("SF sampling needs d >= 2");
  if (m < 1) throw InvalidInput("SF sampling needs m >= 1");
  BinaryMatrix adj = BinaryMatrix::Zero(d, d);
  std::vector<double> degree(d, 0.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int v = 1; v < d; ++v) {
    const int attach = std::min(m, v);
    std::vector<char> taken(v, 0);
    for (int k = 0; k < attach; ++k) {
      double total = 0.0;
      for (int u = 0; u < v; ++u)
        if (!taken[u]) total += std::max(degree[u], 1.0);
      double r = unif(rng) * total;
      int pick = -1;
      for (int u = 0; u < v; ++u) {
        if (taken[u]) continue;
        pick = u;
        r -= std::max(degree[u], 1.0);
        if (r < 0.0) break;
      }
      taken[pick] = 1;
    }
    for (int u = 0; u < v; ++u) {
      if (!taken[u]) continue;
      adj(u, v) = 1;
      degree[u] += 1.0;
      degree[v] += 1.0;
    }
  }
  std::vector<int> label(d);
  std::iota(label.begin(), label.end(), 0);
  std::shuffle(label.begin(), label.end(), rng);
  BinaryMatrix permuted = BinaryMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (adj(i, j)) permuted(label[i], label[j]) = 1;
  return Dag(std::move(permuted));
}

// ---------------------------------------------------------------------------
// CPDAG

namespace {

// One pass of Meek rules 1-4; returns true when some edge was oriented.
bool apply_meek_rules(Pdag& p) {
  const int d = p.size();
  bool changed = false;
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      if (a == b || !p.is_undirected(a, b)) continue;
      bool orient = false;
      // R1: c -> a, a - b, c and b nonadjacent  =>  a -> b
      for (int c = 0; c < d && !orient; ++c) {
        if (c != b && p.is_directed(c, a) && !p.adjacent(c, b)) orient = true;
      }
      // R2: a -> c -> b, a - b  =>  a -> b
      for (int c = 0; c < d && !orient; ++c) {
        if (p.is_directed(a, c) && p.is_directed(c, b)) orient = true;
      }
      // R3: a - c -> b, a - e -> b, c and e nonadjacent  =>  a -> b
      for (int c = 0; c < d && !orient; ++c) {
        if (c == b || !p.is_undirected(a, c) || !p.is_directed(c, b)) continue;
        for (int e = c + 1; e < d && !orient; ++e) {
          if (e == b || !p.is_undirected(a, e) || !p.is_directed(e, b)) continue;
          if (!p.adjacent(c, e)) orient = true;
        }
      }
      // R4: a - c, c -> e -> b, a adjacent to e, c and b nonadjacent  =>  a -> b
      for (int c = 0; c < d && !orient; ++c) {
        if (c == b || !p.is_undirected(a, c) || p.adjacent(c, b)) continue;
        for (int e = 0; e < d && !orient; ++e) {
          if (e == a || e == c || e == b) continue;
          if (p.is_directed(c, e) && p.is_directed(e, b) && p.adjacent(a, e)) orient = true;
        }
      }
      if (orient) {
        p.set_directed(a, b);
        changed = true;
      }
    }
  }
  return changed;
}

}  // namespace

Pdag dag_to_cpdag(const Dag& g) {
  const int d = g.size();
  const auto& adj = g.adjacency();
  Pdag p(d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (adj(i, j) || adj(j, i)) p.set_undirected(i, j);
  // v-structures a -> c <- b with a, b nonadjacent
  for (int c = 0; c < d; ++c) {
    const auto pa = g.parents(c);
    for (std::size_t x = 0; x < pa.size(); ++x)
      for (std::size_t y = x + 1; y < pa.size(); ++y) {
        const int a = pa[x], b = pa[y];
        if (!adj(a, b) && !adj(b, a)) {
          p.set_directed(a, c);
          p.set_directed(b, c);
        }
      }
  }
  while (apply_meek_rules(p)) {
  }
  return p;
}

}  // namespace grandag
