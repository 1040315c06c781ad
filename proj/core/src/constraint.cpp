#include "grandag/constraint.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "grandag/error.hpp"

namespace grandag {

Eigen::MatrixXd weighted_adjacency(const NnStack& stack) {
  const int d = stack.d();
  Eigen::MatrixXd a(d, d);
  for (int j = 0; j < d; ++j) a.col(j) = connectivity(stack, j).colwise().sum().transpose();
  a.diagonal().setZero();
  return a;
}

namespace {

// Higham (2005) scaling and squaring. theta_m bounds the 1-norm for which the
// [m/m] approximant is accurate to unit roundoff.
constexpr std::array<double, 5> kTheta = {1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
                                          2.097847961257068e0, 5.371920351148152e0};

void pade_low(const Eigen::MatrixXd& a, int m, Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  static const double b3[] = {120., 60., 12., 1.};
  static const double b5[] = {30240., 15120., 3360., 420., 30., 1.};
  static const double b7[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
  static const double b9[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                              2162160.,     110880.,     3960.,       90.,         1.};
  const double* b = m == 3 ? b3 : m == 5 ? b5 : m == 7 ? b7 : b9;
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd a2 = a * a;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd odd = b[1] * power;
  v = b[0] * power;
  for (int k = 2; k <= m; k += 2) {
    power = power * a2;
    odd += b[k + 1] * power;
    v += b[k] * power;
  }
  u = a * odd;
}

void pade13(const Eigen::MatrixXd& a, Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  static const double b[] = {64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
                             129060195264000.,   10559470521600.,    670442572800.,    33522128640.,
                             1323241920.,        40840800.,          960960.,          16380.,
                             182.,               1.};
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = a * a;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a4 * a2;
  Eigen::MatrixXd inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
  u = a * (a6 * inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  inner = b[12] * a6 + b[10] * a4 + b[8] * a2;
  v = a6 * inner + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InvalidInput("matrix_exp needs a square matrix");
  if (a.size() == 0) return a;
  if (!a.allFinite()) throw NumericError("matrix_exp input has non-finite entries");
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  Eigen::MatrixXd u, v;
  int squarings = 0;
  if (norm <= kTheta[3]) {
    const int degree = norm <= kTheta[0] ? 3 : norm <= kTheta[1] ? 5 : norm <= kTheta[2] ? 7 : 9;
    pade_low(a, degree, u, v);
  } else {
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta[4]))));
    pade13(std::ldexp(1.0, -squarings) * a, u, v);
  }
  Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  if (!r.allFinite()) {
    std::ostringstream msg;
    msg << "matrix exponential overflowed (1-norm of input = " << norm << ")";
    throw NumericError(msg.str());
  }
  return r;
}

namespace {

// tr(e^A) >= d for nonnegative A; the Pade value can dip below by a few ulps
// on nilpotent inputs, so the difference is clamped at zero.
double trace_minus_d(const Eigen::MatrixXd& e) {
  return std::max(0.0, (e.diagonal().array() - 1.0).sum());
}

}  // namespace

double trace_exp_constraint(const Eigen::MatrixXd& a) { return trace_minus_d(matrix_exp(a)); }

double constraint_value(const NnStack& stack) { return trace_exp_constraint(weighted_adjacency(stack)); }

ConstraintGrad h_and_grad(const NnStack& stack) {
  const int d = stack.d();
  const int layers = stack.layer_count();
  ConstraintGrad out;
  out.adjacency = weighted_adjacency(stack);
  const Eigen::MatrixXd e = matrix_exp(out.adjacency);
  out.h = trace_minus_d(e);
  out.grad.loss = out.h;
  out.grad.grad = Eigen::VectorXd::Zero(stack.param_count());

  // dh/dA = e^T; the diagonal of A is identically zero, so its entries get no gradient.
  Eigen::MatrixXd g = e.transpose();
  g.diagonal().setZero();

  std::vector<Eigen::MatrixXd> abs_w(layers);
  std::vector<Eigen::MatrixXd> right(layers);  // right[l] = |W_{l-1}| ... |W_0| diag(M)
  for (int j = 0; j < d; ++j) {
    for (int l = 0; l < layers; ++l) abs_w[l] = stack.weight(j, l).cwiseAbs();
    right[0] = stack.masks().col(j).cast<double>().asDiagonal().toDenseMatrix();
    for (int l = 1; l < layers; ++l) right[l] = abs_w[l - 1] * right[l - 1];
    // C = |W_L| ... |W_0| diag(M); A_ij = sum_k C_ki, so dh/dC = 1_m g_j^T.
    Eigen::MatrixXd left = Eigen::MatrixXd::Ones(1, stack.outputs());  // 1_m^T |W_L| ... |W_{l+1}|
    const Eigen::RowVectorXd gj = g.col(j).transpose();
    for (int l = layers - 1; l >= 0; --l) {
      // d h / d|W_l| = left^T gj right[l]^T, a rank-one outer product
      const Eigen::VectorXd lhs = left.transpose();
      const Eigen::RowVectorXd rhs = gj * right[l].transpose();
      const auto w = stack.weight(j, l);
      auto gw = stack.weight_in(out.grad.grad, j, l);
      gw = (lhs * rhs).cwiseProduct(w.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }));
      left = left * abs_w[l];
    }
  }
  return out;
}

}  // namespace grandag
