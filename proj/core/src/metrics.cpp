#include "grandag/metrics.hpp"

#include <sstream>

#include <json.hpp>

#include "grandag/error.hpp"

namespace grandag {

using nlohmann::json;

int shd(const Pdag& a, const Pdag& b) {
  if (a.size() != b.size()) throw InvalidInput("shd: graphs have different node counts");
  int count = 0;
  for (int i = 0; i < a.size(); ++i)
    for (int j = i + 1; j < a.size(); ++j)
      if (a.type(i, j) != b.type(i, j)) ++count;
  return count;
}

int shd(const Dag& a, const Dag& b) { return shd(Pdag::from_dag(a), Pdag::from_dag(b)); }

int shd_c(const Dag& a, const Dag& b) {
  if (a.size() != b.size()) throw InvalidInput("shd_c: graphs have different node counts");
  return shd(dag_to_cpdag(a), dag_to_cpdag(b));
}

bool d_separated(const BinaryMatrix& adj, int x, int y, const std::vector<bool>& z) {
  const int d = static_cast<int>(adj.rows());
  // Nodes with a descendant in z (z included) open colliders.
  std::vector<bool> anc_z(z.begin(), z.end());
  std::vector<int> stack;
  for (int v = 0; v < d; ++v)
    if (z[v]) stack.push_back(v);
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int p = 0; p < d; ++p)
      if (adj(p, v) && !anc_z[p]) {
        anc_z[p] = true;
        stack.push_back(p);
      }
  }
  // State (v, up): reached v from a child; (v, down): reached v from a parent.
  std::vector<bool> seen_up(d, false), seen_down(d, false);
  std::vector<std::pair<int, bool>> todo{{x, true}};
  while (!todo.empty()) {
    const auto [v, up] = todo.back();
    todo.pop_back();
    if (up ? seen_up[v] : seen_down[v]) continue;
    (up ? seen_up : seen_down)[v] = true;
    if (v == y && !z[v]) return false;
    if (up) {
      if (z[v]) continue;
      for (int u = 0; u < d; ++u) {
        if (adj(u, v)) todo.emplace_back(u, true);
        if (adj(v, u)) todo.emplace_back(u, false);
      }
    } else {
      if (!z[v])
        for (int u = 0; u < d; ++u)
          if (adj(v, u)) todo.emplace_back(u, false);
      if (anc_z[v])
        for (int u = 0; u < d; ++u)
          if (adj(u, v)) todo.emplace_back(u, true);
    }
  }
  return true;
}

namespace {

bool valid_with_desc(const Dag& truth, const BinaryMatrix& desc, int x, int y, const std::vector<bool>& z) {
  const int d = truth.size();
  // Nodes other than x on directed x -> y paths: descendants of x that are ancestors of y.
  std::vector<int> causal;
  for (int w = 0; w < d; ++w)
    if (w != x && desc(x, w) && desc(w, y)) causal.push_back(w);
  for (int w : causal)
    for (int v = 0; v < d; ++v)
      if (desc(w, v) && z[v]) return false;
  BinaryMatrix backdoor = truth.adjacency();
  for (int w : causal) backdoor(x, w) = 0;
  return d_separated(backdoor, x, y, z);
}

}  // namespace

bool valid_adjustment(const Dag& truth, int x, int y, const std::vector<bool>& z) {
  if (static_cast<int>(z.size()) != truth.size()) throw InvalidInput("valid_adjustment: set size mismatch");
  if (z[x] || z[y]) return false;
  return valid_with_desc(truth, truth.descendants(), x, y, z);
}

BinaryMatrix sid_mistakes(const Dag& truth, const Dag& est) {
  const int d = truth.size();
  if (est.size() != d) throw InvalidInput("sid: graphs have different node counts");
  const BinaryMatrix desc = truth.descendants();
  BinaryMatrix wrong = BinaryMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    std::vector<bool> z(d, false);
    for (int p : est.parents(i)) z[p] = true;
    for (int j = 0; j < d; ++j) {
      if (j == i) continue;
      const bool mistake = z[j] ? desc(i, j) != 0 : !valid_with_desc(truth, desc, i, j, z);
      wrong(i, j) = mistake ? 1 : 0;
    }
  }
  return wrong;
}

int sid(const Dag& truth, const Dag& est) {
  return static_cast<int>(sid_mistakes(truth, est).cast<int>().sum());
}

std::string MetricsReport::to_json() const {
  json j;
  j["d"] = d;
  j["shd"] = shd ? json(*shd) : json(nullptr);
  j["shd_c"] = shd_c ? json(*shd_c) : json(nullptr);
  j["sid"] = sid ? json(*sid) : json(nullptr);
  j["edges_true"] = edges_true;
  j["edges_est"] = edges_est;
  try {
    j["provenance"] = json::parse(provenance_json);
  } catch (const json::parse_error&) {
    j["provenance"] = provenance_json;
  }
  return j.dump(2);
}

MetricSelection parse_metric_selection(const std::string& list) {
  MetricSelection sel{false, false, false};
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "shd") sel.shd = true;
    else if (item == "shdc" || item == "shd_c" || item == "shd-c") sel.shd_c = true;
    else if (item == "sid") sel.sid = true;
    else if (!item.empty()) throw InvalidInput("unknown metric '" + item + "' (expected shd, shdc, sid)");
  }
  return sel;
}

MetricsReport evaluate_graphs(const Dag& truth, const Dag& est, const MetricSelection& which,
                              const std::string& provenance_json) {
  if (truth.size() != est.size()) throw InvalidInput("true and estimated graphs have different node counts");
  MetricsReport r;
  r.d = truth.size();
  r.edges_true = truth.edge_count();
  r.edges_est = est.edge_count();
  if (which.shd) r.shd = shd(truth, est);
  if (which.shd_c) r.shd_c = shd_c(truth, est);
  if (which.sid) r.sid = sid(truth, est);
  r.provenance_json = provenance_json;
  return r;
}

}  // namespace grandag
