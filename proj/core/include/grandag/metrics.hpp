#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grandag/graph.hpp"

namespace grandag {

// Number of unordered pairs whose edge type differs (none, i->j, j->i, i-j).
int shd(const Pdag& a, const Pdag& b);
int shd(const Dag& a, const Dag& b);

// SHD between the CPDAGs of both graphs.
int shd_c(const Dag& a, const Dag& b);

// d-separation of x and y given z in the DAG `adj` (reachability on
// (node, direction) states).
bool d_separated(const BinaryMatrix& adj, int x, int y, const std::vector<bool>& z);

// Whether adjusting for z identifies the effect of x on y in the DAG
// `truth`: z avoids every descendant of the non-x nodes on directed x -> y
// paths, and d-separates x from y once the first edge of every such path
// is removed.
bool valid_adjustment(const Dag& truth, int x, int y, const std::vector<bool>& z);

// Ordered pairs (i, j), i != j, whose interventional distribution
// p(x_j | do(x_i)) is wrong when computed with the estimated parents of i
// as adjustment set. If j is an estimated parent of i, the estimate implies
// no effect, which is wrong exactly when j descends from i in the truth.
int sid(const Dag& truth, const Dag& est);

// Per-pair mistake matrix behind sid(): entry (i, j) = 1 for a mistake.
BinaryMatrix sid_mistakes(const Dag& truth, const Dag& est);

struct MetricsReport {
  int d = 0;
  std::optional<int> shd;
  std::optional<int> shd_c;
  std::optional<int> sid;
  int edges_true = 0;
  int edges_est = 0;
  std::string provenance_json = "{}";  // seed, config and file names; free form

  std::string to_json() const;
};

struct MetricSelection {
  bool shd = true;
  bool shd_c = true;
  bool sid = true;
};

// Comma-separated subset of "shd", "shdc", "sid".
MetricSelection parse_metric_selection(const std::string& list);

MetricsReport evaluate_graphs(const Dag& truth, const Dag& est, const MetricSelection& which = {},
                              const std::string& provenance_json = "{}");

}  // namespace grandag
