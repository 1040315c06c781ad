#include <doctest.h>

#include <cmath>

#include "grandag/constraint.hpp"
#include "grandag/error.hpp"
#include "oracles.hpp"

using namespace grandag;

namespace {

NetConfig cfg(int d, std::vector<int> hidden, Head head = Head::kMean) {
  NetConfig c;
  c.d = d;
  c.hidden = std::move(hidden);
  c.head = head;
  return c;
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("weighted adjacency") {
  CHECK(weighted_adjacency(NnStack(cfg(3, {4}))).isZero());

  NnStack s(cfg(2, {2}));
  for (int j = 0; j < 2; ++j) {
    s.weight(j, 0) << 1, -2, 0, 3;
    s.weight(j, 1) << 1, 1;
  }
  const Eigen::MatrixXd a = weighted_adjacency(s);
  CHECK(a(0, 1) == doctest::Approx(1.0));
  CHECK(a(1, 0) == doctest::Approx(5.0));
  CHECK(a.diagonal().isZero());

  Rng rng(1);
  NnStack r = NnStack::xavier(cfg(4, {3}, Head::kMeanLogVar), rng);
  r.disable_input(2, 1);
  const Eigen::MatrixXd ar = weighted_adjacency(r);
  CHECK(ar(2, 1) == 0.0);
  CHECK(ar.minCoeff() >= 0.0);
  // column sums over both outputs of the connectivity matrix
  CHECK(ar(0, 3) == doctest::Approx(connectivity(r, 3).col(0).sum()));
}

TEST_CASE("matrix exponential") {
  CHECK(matrix_exp(Eigen::MatrixXd::Zero(3, 3)).isIdentity());
  Eigen::MatrixXd n(2, 2);
  n << 0, 1, 0, 0;
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 1, 0, 1;
  CHECK(max_rel(matrix_exp(n), expected) < 1e-15);

  const Eigen::MatrixXd e = matrix_exp(Eigen::Vector2d(1, 2).asDiagonal().toDenseMatrix());
  CHECK(e(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(e(1, 1) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
  CHECK(e(0, 1) == 0.0);

  Rng rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 7;
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = u(rng);
    // scale to a 1-norm spread over (0, 5]
    const double target = 5.0 * (trial + 1) / 50.0;
    a *= target / a.cwiseAbs().colwise().sum().maxCoeff();
    CHECK(max_rel(matrix_exp(a), oracle::taylor_expm(a)) < 1e-10);
  }

  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(matrix_exp(bad), NumericError);
  CHECK_THROWS_AS(matrix_exp(Eigen::MatrixXd::Constant(2, 2, 1e6)), NumericError);
}

TEST_CASE("trace-exponential constraint") {
  CHECK(trace_exp_constraint(Eigen::MatrixXd::Zero(4, 4)) == 0.0);
  Eigen::MatrixXd cyc(2, 2);
  cyc << 0, 1, 1, 0;
  CHECK(trace_exp_constraint(cyc) == doctest::Approx(2 * std::cosh(1.0) - 2).epsilon(1e-12));
  CHECK(trace_exp_constraint(cyc) == doctest::Approx(1.086161).epsilon(1e-6));
  CHECK(trace_exp_constraint(cyc) == doctest::Approx(oracle::taylor_expm(cyc).trace() - 2).epsilon(1e-12));
}

TEST_CASE("h vanishes exactly on acyclic supports") {
  Rng rng(3);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 5;  // d <= 6
    NnStack s = NnStack::xavier(cfg(d, {4}), rng);
    for (Eigen::Index k = 0; k < s.param_count(); ++k) s.params()(k) *= 3;
    BinaryMatrix allowed = BinaryMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i != j && coin(rng)) allowed(i, j) = 1;
    s.restrict_masks(allowed);

    const Eigen::MatrixXd a = weighted_adjacency(s);
    BinaryMatrix support = (a.array() > 0).cast<std::uint8_t>();
    const bool acyclic = !oracle::has_cycle(support);
    const double h = constraint_value(s);
    CHECK(h >= 0.0);
    if (acyclic && a.maxCoeff() <= 10) CHECK(h < 1e-12);
    if (!acyclic) CHECK(h > 1e-12);

    // tr(A^k) = 0 for every k <= d exactly when acyclic
    bool traces_vanish = true;
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(d, d);
    for (int k = 1; k <= d; ++k) {
      p = p * a;
      if (p.trace() > 0) traces_vanish = false;
    }
    CHECK(traces_vanish == acyclic);
  }
}

TEST_CASE("gradient of h matches finite differences") {
  for (Head head : {Head::kMean, Head::kMeanLogVar}) {
    Rng rng(head == Head::kMean ? 4 : 5);
    NnStack s = NnStack::xavier(cfg(4, {5, 3}, head), rng);
    s.disable_input(0, 3);
    const ConstraintGrad cg = h_and_grad(s);
    CHECK(cg.h == doctest::Approx(constraint_value(s)));
    CHECK(cg.grad.loss == cg.h);
    CHECK(cg.adjacency == weighted_adjacency(s));
    NnStack probe = s;
    const auto f = [&](const Eigen::VectorXd& p) {
      probe.params() = p;
      return constraint_value(probe);
    };
    // h is piecewise smooth in the weights (kinks only at zero entries,
    // which xavier draws avoid almost surely).
    CHECK(oracle::rel_error(cg.grad.grad, oracle::fd_gradient(f, s.params(), 1e-6)) < 1e-5);
  }
}
