#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <filesystem>

#include "grandag/error.hpp"
#include "grandag/graph.hpp"
#include "oracles.hpp"

using namespace grandag;

namespace {

BinaryMatrix mat(int d, const std::vector<Edge>& edges) {
  BinaryMatrix m = BinaryMatrix::Zero(d, d);
  for (auto [i, j] : edges) m(i, j) = 1;
  return m;
}

}  // namespace

TEST_CASE("is_acyclic on small graphs") {
  CHECK(is_acyclic(BinaryMatrix::Zero(2, 2)));
  CHECK_FALSE(is_acyclic(mat(2, {{0, 1}, {1, 0}})));
  CHECK(is_acyclic(mat(3, {{0, 1}, {1, 2}})));
  CHECK_FALSE(is_acyclic(mat(3, {{0, 1}, {1, 2}, {2, 0}})));
  CHECK_THROWS_AS(is_acyclic(BinaryMatrix::Zero(2, 3)), InvalidInput);
  CHECK_THROWS_AS(is_acyclic(mat(2, {{1, 1}})), InvalidInput);
}

TEST_CASE("is_acyclic agrees with a depth-first cycle search") {
  Rng rng(5);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 2 + trial % 6;
    BinaryMatrix m = BinaryMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i != j && coin(rng)) m(i, j) = 1;
    CHECK(is_acyclic(m) == !oracle::has_cycle(m));
  }
}

TEST_CASE("Dag rejects cycles and exposes structure") {
  CHECK_THROWS_AS(Dag(mat(2, {{0, 1}, {1, 0}})), InvalidInput);
  const Dag g = Dag::from_edges(4, {{0, 1}, {0, 2}, {2, 3}});
  CHECK(g.edge_count() == 3);
  CHECK(g.parents(3) == std::vector<int>{2});
  CHECK(g.children(0) == std::vector<int>{1, 2});
  const BinaryMatrix desc = g.descendants();
  CHECK(desc(0, 3) == 1);
  CHECK(desc(3, 3) == 1);
  CHECK(desc(1, 3) == 0);
  const auto order = g.topological_order();
  std::vector<int> pos(4);
  for (int k = 0; k < 4; ++k) pos[order[k]] = k;
  for (auto [i, j] : g.edges()) CHECK(pos[i] < pos[j]);
}

TEST_CASE("ER sampling") {
  CHECK(er_edge_probability(10, 10) == doctest::Approx(20.0 / 90.0));
  Rng rng(1);
  CHECK(sample_er(2, 0, rng).edge_count() == 0);
  CHECK_THROWS_AS(sample_er(4, 7, rng), InvalidInput);
  CHECK_THROWS_AS(sample_er(4, -1, rng), InvalidInput);
  CHECK_THROWS_AS(sample_er(1, 0, rng), InvalidInput);

  const Dag full = sample_er(6, 15, rng);
  CHECK(full.edge_count() == 15);

  // Edge count is Binomial(d(d-1)/2, p): mean e, variance e (1 - p).
  const int draws = 10000;
  double sum = 0;
  for (int k = 0; k < draws; ++k) sum += sample_er(10, 10, rng).edge_count();
  const double p = 20.0 / 90.0;
  const double se = std::sqrt(45 * p * (1 - p) / draws);
  CHECK(std::abs(sum / draws - 10.0) < 3 * se);
}

TEST_CASE("SF sampling") {
  Rng rng(2);
  CHECK(sample_sf(2, 1, rng).edge_count() == 1);
  for (int s = 0; s < 20; ++s) {
    const Dag g = sample_sf(50, 1, rng);
    CHECK(g.edge_count() == 49);
    // connected: undirected reachability from node 0 covers everything
    std::vector<bool> seen(50, false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u = 0; u < 50; ++u)
        if ((g.has_edge(v, u) || g.has_edge(u, v)) && !seen[u]) {
          seen[u] = true;
          stack.push_back(u);
        }
    }
    CHECK(std::count(seen.begin(), seen.end(), true) == 50);
  }
  // min(m, existing) attachments: 1 + 2 + 3 + 4 (d - 4)
  CHECK(sample_sf(10, 4, rng).edge_count() == 1 + 2 + 3 + 4 * 6);
  CHECK_THROWS_AS(sample_sf(5, 0, rng), InvalidInput);
}

TEST_CASE("Pdag storage") {
  Pdag p(3);
  p.set_directed(2, 0);
  CHECK(p.type(2, 0) == EdgeType::kForward);
  CHECK(p.type(0, 2) == EdgeType::kBackward);
  p.set_undirected(0, 1);
  CHECK(p.is_undirected(1, 0));
  CHECK(p.directed_count() == 1);
  CHECK(p.undirected_count() == 1);
  p.clear(0, 2);
  CHECK_FALSE(p.adjacent(2, 0));
}

TEST_CASE("CPDAG of small graphs") {
  const Pdag chain = dag_to_cpdag(Dag::from_edges(3, {{0, 1}, {1, 2}}));
  CHECK(chain.is_undirected(0, 1));
  CHECK(chain.is_undirected(1, 2));
  const Pdag collider = dag_to_cpdag(Dag::from_edges(3, {{0, 2}, {1, 2}}));
  CHECK(collider.is_directed(0, 2));
  CHECK(collider.is_directed(1, 2));
  CHECK(dag_to_cpdag(Dag(1)).directed_count() == 0);
  // v-structure propagates through Meek rule 1
  const Pdag r1 = dag_to_cpdag(Dag::from_edges(4, {{0, 2}, {1, 2}, {2, 3}}));
  CHECK(r1.is_directed(2, 3));
}

TEST_CASE("CPDAG matches equivalence-class enumeration for d <= 4") {
  for (int d = 1; d <= 4; ++d) {
    const auto dags = oracle::all_dags(d);
    const std::size_t expected[] = {0, 1, 3, 25, 543};
    CHECK(dags.size() == expected[d]);
    for (const auto& adj : dags) {
      const Pdag p = dag_to_cpdag(Dag(adj));
      CHECK(oracle::encode(p) == oracle::cpdag_by_enumeration(adj, dags));
    }
  }
}

TEST_CASE("edge list and adjacency CSV round trip") {
  const Dag g = Dag::from_edges(4, {{0, 1}, {3, 2}});
  const std::string text = to_edge_list(g);
  CHECK(text.rfind("d=4\n", 0) == 0);
  CHECK(parse_edge_list(text) == g);
  CHECK(parse_edge_list("# comment\nd=3\n0 2\n") == Dag::from_edges(3, {{0, 2}}));
  CHECK(parse_adjacency_csv(to_adjacency_csv(g.adjacency())) == g.adjacency());
  CHECK_THROWS_AS(parse_edge_list("d=2\n0 5\n"), InvalidInput);
  CHECK_THROWS_AS(parse_edge_list("d=2\n0 1\n1 0\n"), InvalidInput);

  const auto dir = std::filesystem::temp_directory_path() / "grandag_graph_io";
  std::filesystem::create_directories(dir);
  write_graph_file((dir / "g.txt").string(), g);
  CHECK(read_graph_file((dir / "g.txt").string()) == g);
  {
    std::ofstream csv(dir / "g.csv");
    csv << to_adjacency_csv(g.adjacency());
  }
  CHECK(read_graph_file((dir / "g.csv").string()) == g);
  CHECK_THROWS_AS(read_graph_file((dir / "missing.txt").string()), IoError);
}
