// Acceptance suite: property checks (1-5) and small-scale reproduction runs
// (6-10). Prints one PASS/FAIL line per criterion; exits nonzero if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grandag/config.hpp"
#include "grandag/constraint.hpp"
#include "grandag/graph.hpp"
#include "grandag/linear.hpp"
#include "grandag/metrics.hpp"
#include "grandag/nn.hpp"
#include "grandag/optim.hpp"
#include "grandag/pipeline.hpp"
#include "grandag/simul.hpp"
#include "oracles.hpp"

using namespace grandag;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

NetConfig random_net(Rng& rng, int d) {
  NetConfig c;
  c.d = d;
  c.hidden.assign(uniform_int(rng, 1, 2), uniform_int(rng, 2, 5));
  c.head = std::bernoulli_distribution(0.5)(rng) ? Head::kMean : Head::kMeanLogVar;
  return c;
}

// Random stack with some inputs masked off. With `dag_masks` the surviving
// masks are restricted to a random DAG, so both acyclic and cyclic supports
// show up.
NnStack random_masked_stack(Rng& rng, int d, bool dag_masks) {
  NnStack s = NnStack::xavier(random_net(rng, d), rng);
  std::bernoulli_distribution drop(0.3);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      if (i != j && drop(rng)) s.disable_input(i, j);
  if (dag_masks) {
    std::vector<int> order(d);
    for (int k = 0; k < d; ++k) order[k] = k;
    std::shuffle(order.begin(), order.end(), rng);
    BinaryMatrix allowed = BinaryMatrix::Zero(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b) allowed(order[a], order[b]) = 1;
    s.restrict_masks(allowed);
  }
  return s;
}

double leaky(double v, double slope) { return v > 0 ? v : slope * v; }

// True when every hidden pre-activation of every node stays away from the
// leaky-ReLU kink for this row, so central differences see a single piece.
bool kink_free(const NnStack& s, const Eigen::VectorXd& x, double margin) {
  for (int node = 0; node < s.d(); ++node) {
    Eigen::VectorXd h = x;
    for (int i = 0; i < s.d(); ++i)
      if (!s.mask(i, node)) h(i) = 0;
    for (int l = 0; l < s.layer_count() - 1; ++l) {
      const Eigen::VectorXd pre = s.weight(node, l) * h + s.bias(node, l);
      if (pre.cwiseAbs().minCoeff() < margin) return false;
      h = pre.unaryExpr([&](double v) { return leaky(v, s.config().leaky_slope); });
    }
  }
  return true;
}

Eigen::VectorXd kink_free_row(const NnStack& s, Rng& rng) {
  std::normal_distribution<double> z;
  for (;;) {
    Eigen::VectorXd x(s.d());
    for (int i = 0; i < s.d(); ++i) x(i) = z(rng);
    if (kink_free(s, x, 1e-3)) return x;
  }
}

// |W| in the connectivity and h is not differentiable at 0.
bool weights_off_zero(const NnStack& s) {
  for (int j = 0; j < s.d(); ++j)
    for (int l = 0; l < s.layer_count(); ++l)
      if (s.weight(j, l).cwiseAbs().minCoeff() < 1e-3) return false;
  return true;
}

NnStack smooth_stack(Rng& rng, int d) {
  for (;;) {
    NnStack s = NnStack::xavier(random_net(rng, d), rng);
    std::normal_distribution<double> z(0.0, 0.3);
    for (Eigen::Index k = 0; k < s.param_count(); ++k) s.params()(k) += z(rng) * 0.1;
    if (weights_off_zero(s)) return s;
  }
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
  Rng rng(101);
  int acyclic = 0, cyclic = 0, bad = 0;
  double worst_acyclic = 0.0, min_cyclic = INFINITY;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = uniform_int(rng, 2, 6);
    const NnStack s = random_masked_stack(rng, d, trial % 2 == 0);
    const Eigen::MatrixXd a = weighted_adjacency(s);
    const BinaryMatrix support = (a.array() > 0.0).cast<std::uint8_t>();
    const bool dag = is_acyclic(support);
    if (dag == oracle::has_cycle(support)) ++bad;  // the two cycle checks disagree
    const double h = constraint_value(s);
    if (dag) {
      ++acyclic;
      worst_acyclic = std::max(worst_acyclic, h);
      if (!(h < 1e-12)) ++bad;
    } else {
      ++cyclic;
      min_cyclic = std::min(min_cyclic, h);
      if (!(h > 0.0) || h < 1e-12) ++bad;
    }
  }
  return {bad == 0 && acyclic > 0 && cyclic > 0,
          std::to_string(acyclic) + " acyclic (max h " + fmt(worst_acyclic) + "), " + std::to_string(cyclic) +
              " cyclic (min h " + fmt(min_cyclic) + "), " + std::to_string(bad) + " violations"};
}

Verdict criterion2() {
  Rng rng(202);
  std::map<std::string, double> worst;
  const double h_step = 1e-6;

  for (int trial = 0; trial < 50; ++trial) {
    NnStack s = smooth_stack(rng, uniform_int(rng, 2, 4));
    const int node = uniform_int(rng, 0, s.d() - 1);
    const Eigen::VectorXd x = kink_free_row(s, rng);
    GradBundle g;
    nll(s, node, x, &g);
    const auto f = [&](const Eigen::VectorXd& p) {
      NnStack t = s;
      t.params() = p;
      return nll(t, node, x);
    };
    worst["nll"] = std::max(worst["nll"], oracle::rel_error(g.grad, oracle::fd_gradient(f, s.params(), h_step)));
  }

  for (int trial = 0; trial < 50; ++trial) {
    const NnStack s = smooth_stack(rng, uniform_int(rng, 2, 4));
    const ConstraintGrad cg = h_and_grad(s);
    const auto f = [&](const Eigen::VectorXd& p) {
      NnStack t = s;
      t.params() = p;
      return constraint_value(t);
    };
    worst["h_and_grad"] =
        std::max(worst["h_and_grad"], oracle::rel_error(cg.grad.grad, oracle::fd_gradient(f, s.params(), h_step)));
  }

  for (int trial = 0; trial < 50; ++trial) {
    const NnStack s = smooth_stack(rng, uniform_int(rng, 2, 4));
    Eigen::MatrixXd batch(4, s.d());
    for (int r = 0; r < 4; ++r) batch.row(r) = kink_free_row(s, rng).transpose();
    const double lambda = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const double mu = std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 1.0)(rng));
    const SubproblemEval e = subproblem_objective(s, batch, lambda, mu, true);
    const auto f = [&](const Eigen::VectorXd& p) {
      NnStack t = s;
      t.params() = p;
      return subproblem_objective(t, batch, lambda, mu, false).objective;
    };
    worst["subproblem_objective"] = std::max(worst["subproblem_objective"],
                                             oracle::rel_error(e.grad, oracle::fd_gradient(f, s.params(), h_step)));
  }

  std::normal_distribution<double> z;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = uniform_int(rng, 2, 5);
    const int n = uniform_int(rng, 10, 40);
    Eigen::MatrixXd x(n, d), u(d, d);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = z(rng);
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      double v = z(rng);
      while (std::abs(v) < 1e-2) v = z(rng);  // off the L1 kink
      u.data()[k] = v;
    }
    u.diagonal().setZero();
    const double l1 = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    const LinearScore sc = linear_score(u, x, l1);
    const auto f = [&](const Eigen::VectorXd& p) {
      const Eigen::MatrixXd v = Eigen::Map<const Eigen::MatrixXd>(p.data(), d, d);
      return linear_score(v, x, l1).value;
    };
    Eigen::VectorXd fd = oracle::fd_gradient(f, Eigen::Map<const Eigen::VectorXd>(u.data(), u.size()), h_step);
    Eigen::Map<Eigen::MatrixXd>(fd.data(), d, d).diagonal().setZero();  // not a free parameter
    const Eigen::VectorXd an = Eigen::Map<const Eigen::VectorXd>(sc.grad.data(), sc.grad.size());
    worst["linear_score"] = std::max(worst["linear_score"], oracle::rel_error(an, fd));
  }

  bool pass = true;
  std::string detail = "max relative error:";
  for (const auto& [name, err] : worst) {
    pass = pass && err < 1e-4;
    detail += " " + name + " " + fmt(err, 2);
  }
  return {pass, detail};
}

Verdict criterion3() {
  Rng rng(303);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = uniform_int(rng, 1, 8);
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = u01(rng);
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    a *= u01(rng) * 5.0 / norm1;  // 1-norm in (0, 5]
    const Eigen::MatrixXd t = oracle::taylor_expm(a, 60);
    worst = std::max(worst, (matrix_exp(a) - t).cwiseAbs().maxCoeff() / t.cwiseAbs().maxCoeff());
  }
  double worst_nil = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = uniform_int(rng, 2, 8);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) a(i, j) = u01(rng);
    // strictly upper triangular: the series stops after d terms
    const Eigen::MatrixXd exact = oracle::taylor_expm(a, d);
    worst_nil = std::max(worst_nil, (matrix_exp(a) - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff());
  }
  return {worst < 1e-10 && worst_nil < 1e-14,
          "random max rel error " + fmt(worst, 2) + ", nilpotent max rel error " + fmt(worst_nil, 2)};
}

Verdict criterion4() {
  long pairs = 0, sid_bad = 0, shdc_bad = 0, cpdag_bad = 0, dags = 0;
  for (int d = 1; d <= 4; ++d) {
    const auto all = oracle::all_dags(d);
    std::vector<Eigen::MatrixXi> cp;
    for (const auto& g : all) {
      cp.push_back(oracle::cpdag_by_enumeration(g, all));
      if (oracle::encode(dag_to_cpdag(Dag(g))) != cp.back()) ++cpdag_bad;
      ++dags;
    }
    for (std::size_t a = 0; a < all.size(); ++a) {
      const Dag ta(all[a]);
      for (std::size_t b = 0; b < all.size(); ++b) {
        const Dag eb(all[b]);
        ++pairs;
        if (sid(ta, eb) != oracle::sid_by_paths(all[a], all[b])) ++sid_bad;
        int ref = 0;
        for (int i = 0; i < d; ++i)
          for (int j = i + 1; j < d; ++j)
            if (cp[a](i, j) != cp[b](i, j) || cp[a](j, i) != cp[b](j, i)) ++ref;
        if (shd_c(ta, eb) != ref) ++shdc_bad;
      }
    }
  }
  return {sid_bad == 0 && shdc_bad == 0 && cpdag_bad == 0,
          std::to_string(pairs) + " pairs over " + std::to_string(dags) + " DAGs; mismatches: SID " +
              std::to_string(sid_bad) + ", SHD-C " + std::to_string(shdc_bad) + ", CPDAG " +
              std::to_string(cpdag_bad)};
}

Verdict criterion5() {
  Rng rng(505);
  std::bernoulli_distribution coin(0.3);
  std::normal_distribution<double> z;
  long tested = 0, by_weights = 0, bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = uniform_int(rng, 2, 6);
    NnStack s = random_masked_stack(rng, d, false);
    // Cut paths inside the networks too: zero first-layer columns and the
    // outgoing weights of some hidden units.
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i)
        if (coin(rng)) s.weight(j, 0).col(i).setZero();
      if (s.layer_count() > 1)
        for (int h = 0; h < s.out_dim(0); ++h)
          if (coin(rng)) s.weight(j, 1).col(h).setZero();
    }
    for (int j = 0; j < d; ++j) {
      const Eigen::MatrixXd c = connectivity(s, j);
      for (int i = 0; i < d; ++i) {
        if (c.col(i).cwiseAbs().maxCoeff() != 0.0) continue;
        ++tested;
        if (s.mask(i, j)) ++by_weights;
        for (int rep = 0; rep < 5; ++rep) {
          Eigen::VectorXd x(d);
          for (int k = 0; k < d; ++k) x(k) = z(rng);
          const Eigen::VectorXd base = forward(s, j, x);
          x(i) += (rep % 2 ? -1.0 : 1.0) * 1e3 * (1.0 + rep);
          const double delta = (forward(s, j, x) - base).cwiseAbs().maxCoeff();
          worst = std::max(worst, delta);
          if (!(delta < 1e-12)) ++bad;
        }
      }
    }
  }
  return {bad == 0 && by_weights > 0,
          std::to_string(tested) + " zero columns (" + std::to_string(by_weights) +
              " from weights, not masks), max output change " + fmt(worst, 2)};
}

// ---------------------------------------------------------------------------
// Reproduction runs

struct RunRecord {
  std::uint64_t seed = 0;
  int shd = 0;
  int sid = 0;
  int shd_thresholded = 0;
  int edges_true = 0;
  int edges_est = 0;
  double h = 0.0;
  long iterations = 0;
  bool converged = false;
  double seconds = 0.0;
};

RunRecord run_one(int d, double edges, Scheme scheme, Method method, std::uint64_t seed,
                  const std::function<void(TrainConfig&)>& tweak = {}) {
  Rng rng(seed);
  const Dag truth = sample_er(d, edges, rng);
  const Generated gen = generate(scheme, truth, 1000, rng);
  TrainConfig cfg;
  cfg.seed = seed;
  if (tweak) tweak(cfg);
  Rng split = make_stream(seed, 0);
  const Dataset data = split_and_standardize(gen.x, cfg.train_fraction, cfg.standardize, split);
  const PipelineResult r = run_pipeline(data, method, cfg);
  RunRecord rec;
  rec.seed = seed;
  rec.shd = shd(truth, r.estimate);
  rec.sid = sid(truth, r.estimate);
  rec.shd_thresholded = shd(truth, r.thresholded);
  rec.edges_true = truth.edge_count();
  rec.edges_est = r.estimate.edge_count();
  rec.h = r.state.h_hist.empty() ? NAN : r.state.h_hist.back();
  rec.iterations = r.state.iter_total;
  rec.converged = r.converged;
  rec.seconds = r.seconds;
  std::cerr << "  d=" << d << " seed " << seed << ": SHD " << rec.shd << " SID " << rec.sid << " (thresholded SHD "
            << rec.shd_thresholded << "), edges " << rec.edges_est << "/" << rec.edges_true << ", h " << rec.h
            << ", " << rec.iterations << " iterations, " << fmt(rec.seconds) << " s\n";
  return rec;
}

std::vector<RunRecord> run_seeds(int d, double edges, Scheme scheme, Method method, int seeds,
                                 const std::function<void(TrainConfig&)>& tweak = {}) {
  std::vector<RunRecord> out;
  for (int s = 0; s < seeds; ++s) out.push_back(run_one(d, edges, scheme, method, static_cast<std::uint64_t>(s), tweak));
  return out;
}

double mean_of(const std::vector<RunRecord>& runs, int RunRecord::*field) {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.*field);
  return mean(v);
}

// Runs of criteria 6-8 are reused by criterion 9.
std::optional<std::vector<RunRecord>> g_er1, g_er4, g_lin;

const std::vector<RunRecord>& er1_runs() {
  if (!g_er1) g_er1 = run_seeds(10, 10, Scheme::kGaussAnm, Method::kGranDag, 5);
  return *g_er1;
}
const std::vector<RunRecord>& er4_runs() {
  if (!g_er4) g_er4 = run_seeds(10, 40, Scheme::kGaussAnm, Method::kGranDag, 3);
  return *g_er4;
}
const std::vector<RunRecord>& lin_runs() {
  if (!g_lin) g_lin = run_seeds(10, 10, Scheme::kLin, Method::kLinear, 3);
  return *g_lin;
}

Verdict criterion6() {
  const auto& runs = er1_runs();
  const double s = mean_of(runs, &RunRecord::shd), i = mean_of(runs, &RunRecord::sid);
  return {s <= 6.0 && i <= 15.0, "mean SHD " + fmt(s) + " (<= 6), mean SID " + fmt(i) + " (<= 15) over 5 seeds"};
}

Verdict criterion7() {
  const auto& runs = er4_runs();
  const double s = mean_of(runs, &RunRecord::shd);
  return {s <= 15.0, "mean SHD " + fmt(s) + " (<= 15) over 3 seeds; before pruning " +
                         fmt(mean_of(runs, &RunRecord::shd_thresholded))};
}

Verdict criterion8() {
  const auto& runs = lin_runs();
  const double s = mean_of(runs, &RunRecord::shd);
  return {s <= 18.0, "linear baseline mean SHD " + fmt(s) + " (<= 18) over 3 seeds"};
}

Verdict criterion9() {
  bool pass = true;
  double worst_h = 0.0;
  long worst_iter = 0;
  for (const auto* set : {&er1_runs(), &er4_runs(), &lin_runs()})
    for (const auto& r : *set) {
      pass = pass && r.converged && r.h <= 1e-8 && r.iterations < 500000;
      worst_h = std::max(worst_h, r.h);
      worst_iter = std::max(worst_iter, r.iterations);
    }
  const RunRecord d20 = run_one(20, 20, Scheme::kGaussAnm, Method::kGranDag, 0);
  const double ref = 27.3e3;
  const bool within = d20.iterations >= ref / 5 && d20.iterations <= ref * 5;
  return {pass && within && d20.converged,
          "runs of criteria 6-8: max h " + fmt(worst_h, 2) + ", max iterations " + std::to_string(worst_iter) +
              "; d=20 ER1: " + std::to_string(d20.iterations) + " iterations (reference 27300, allowed " +
              fmt(ref / 5) + ".." + fmt(ref * 5) + ")"};
}

Verdict criterion10() {
  const auto none = [](TrainConfig& c) {
    c.pns = PnsMode::kOff;
    c.prune = false;
  };
  const auto both = [](TrainConfig& c) {
    c.pns = PnsMode::kOn;
    c.prune = true;
  };
  const auto off = run_seeds(50, 50, Scheme::kGaussAnm, Method::kGranDag, 2, none);
  const auto on = run_seeds(50, 50, Scheme::kGaussAnm, Method::kGranDag, 2, both);
  const double shd_off = mean_of(off, &RunRecord::shd), shd_on = mean_of(on, &RunRecord::shd);
  const double sid_off = mean_of(off, &RunRecord::sid), sid_on = mean_of(on, &RunRecord::sid);
  const bool shd_ok = shd_on * 5.0 <= shd_off;
  const double sid_change = sid_off > 0 ? std::abs(sid_on - sid_off) / sid_off : (sid_on == 0 ? 0.0 : INFINITY);
  return {shd_ok && sid_change < 0.5, "mean SHD " + fmt(shd_off) + " -> " + fmt(shd_on) + " (needs 5x), mean SID " +
                                          fmt(sid_off) + " -> " + fmt(sid_on) + " (change " +
                                          fmt(100 * sid_change) + "%, needs < 50%)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                          criterion6, criterion7, criterion8, criterion9, criterion10};
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) {
    const int c = std::atoi(argv[k]);
    if (c < 1 || c > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [criterion numbers 1-10]\n";
      return 2;
    }
    wanted.insert(c);
  }
  if (wanted.empty())
    for (int c = 1; c <= static_cast<int>(criteria.size()); ++c) wanted.insert(c);

  int failed = 0;
  for (int c : wanted) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[c - 1]();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << c << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << " [" << fmt(secs)
              << " s]" << std::endl;
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
