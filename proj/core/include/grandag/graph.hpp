#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace grandag {

using Rng = std::mt19937_64;

// Square 0/1 matrix; entry (i, j) = 1 means an edge i -> j.
using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

using Edge = std::pair<int, int>;

// True iff the directed graph has a topological order (Kahn elimination).
// Throws InvalidInput for a non-square matrix, a nonzero diagonal, or
// entries other than 0/1.
bool is_acyclic(const BinaryMatrix& adj);

// Topological order of an acyclic adjacency matrix; ties resolved by the
// smallest index first so the order is deterministic.
std::vector<int> topological_order(const BinaryMatrix& adj);

// Directed acyclic graph over d nodes. Construction validates acyclicity,
// so every live Dag satisfies is_acyclic(adjacency()).
class Dag {
 public:
  explicit Dag(int d = 0);
  explicit Dag(BinaryMatrix adj);
  static Dag from_edges(int d, const std::vector<Edge>& edges);

  int size() const { return static_cast<int>(adj_.rows()); }
  bool has_edge(int from, int to) const { return adj_(from, to) != 0; }
  const BinaryMatrix& adjacency() const { return adj_; }

  int edge_count() const;
  std::vector<Edge> edges() const;
  std::vector<int> parents(int node) const;
  std::vector<int> children(int node) const;
  std::vector<int> topological_order() const;

  // Descendant sets including the node itself: row i flags every node
  // reachable from i by a directed path of length >= 0.
  BinaryMatrix descendants() const;

  bool operator==(const Dag& other) const { return adj_ == other.adj_; }

 private:
  BinaryMatrix adj_;
};

enum class EdgeType : std::uint8_t {
  kNone,
  kForward,   // i -> j for the queried pair (i, j)
  kBackward,  // i <- j
  kUndirected,
};

// Partially directed graph. Each unordered pair {i, j} is stored once, in
// the upper triangle, so undirected edges are symmetric and directed edges
// antisymmetric by construction.
class Pdag {
 public:
  explicit Pdag(int d = 0);
  static Pdag from_dag(const Dag& g);

  int size() const { return d_; }
  EdgeType type(int i, int j) const;
  bool adjacent(int i, int j) const { return type(i, j) != EdgeType::kNone; }
  bool is_directed(int from, int to) const { return type(from, to) == EdgeType::kForward; }
  bool is_undirected(int i, int j) const { return type(i, j) == EdgeType::kUndirected; }

  void set_directed(int from, int to);
  void set_undirected(int i, int j);
  void clear(int i, int j);

  int directed_count() const;
  int undirected_count() const;

  bool operator==(const Pdag& other) const { return d_ == other.d_ && cells_ == other.cells_; }

 private:
  std::size_t slot(int i, int j) const;

  int d_;
  std::vector<EdgeType> cells_;
};

// Erdos-Renyi DAG: uniformly random topological order, each allowed edge
// added independently with probability 2e / (d^2 - d).
Dag sample_er(int d, double expected_edges, Rng& rng);
double er_edge_probability(int d, double expected_edges);

// Barabasi-Albert preferential attachment. Nodes are inserted one by one and
// each attaches min(m, existing) edges from existing nodes, chosen with
// probability proportional to degree (isolated nodes count as degree 1).
// Labels are permuted uniformly at random afterwards.
Dag sample_sf(int d, int m, Rng& rng);

// Completed PDAG of the Markov equivalence class of g: skeleton plus
// v-structures, closed under Meek rules 1-4.
Pdag dag_to_cpdag(const Dag& g);

// Edge-list text format: header "d=<n>", then one zero-indexed "i j" per line.
std::string to_edge_list(const Dag& g);
Dag parse_edge_list(const std::string& text);
std::string to_adjacency_csv(const BinaryMatrix& adj);
BinaryMatrix parse_adjacency_csv(const std::string& text);

// Reads either format (edge list when the first line starts with "d=").
// Throws InvalidInput when the graph is cyclic.
Dag read_graph_file(const std::string& path);
void write_graph_file(const std::string& path, const Dag& g);

}  // namespace grandag
