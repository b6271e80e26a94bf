#include <cmath>

#include "doctest.h"
#include "elosslab/autodiff.hpp"
#include "elosslab/nn.hpp"
#include "test_util.hpp"

using namespace elosslab;
using ad::Matrix;
using ad::Tape;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

/// Finite-difference check of d(scalar_graph)/d(leaf) for a graph builder
/// that maps a leaf id to a scalar node id.
double graph_fd_error(const Matrix& x0, const std::function<int(Tape&, int)>& build,
                      double step = 1e-6) {
  Tape tape;
  const int x = tape.leaf(x0);
  const int out = build(tape, x);
  tape.backward(out);
  const Matrix analytic = tape.grad(x);

  const auto eval = [&](const Matrix& xv) {
    Tape t2;
    const int xx = t2.leaf(xv);
    return t2.value(build(t2, xx))(0, 0);
  };
  return testutil::fd_gradient_rel_error(eval, x0, analytic, step);
}

}  // namespace

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("linear and quadratic scalar derivatives") {
  Tape tape;
  const int x = tape.leaf(scalar(2.0));
  const int three_x = tape.scale(x, 3.0);
  tape.backward(three_x);
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(3.0));

  Tape tape2;
  const int y = tape2.leaf(scalar(2.0));
  const int y2 = tape2.square(y);
  tape2.backward(y2);
  CHECK(tape2.grad(y)(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("every primitive passes a finite-difference check") {
  rng::Engine eng(808);
  const Matrix x34 = testutil::random_cloud(3, 4, eng);
  const Matrix pos = x34.array().abs() + 0.5;
  const Matrix other = testutil::random_cloud(3, 4, eng);
  const Matrix mat43 = testutil::random_cloud(4, 3, eng);
  const Matrix rowvec = testutil::random_cloud(1, 4, eng);

  const double tol = 1e-5;
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.add(x, t.constant(other))); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.sub(t.constant(other), x)); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.mul(x, t.constant(other))); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.square(t.mul(x, x))); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.matmul(x, t.constant(mat43))); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.add_rowvec(x, t.constant(rowvec))); }) <= tol);
  CHECK(graph_fd_error(rowvec, [&](Tape& t, int x) {
          return t.sum(t.add_rowvec(t.constant(x34), x));
        }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.scale(x, -1.7)); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.add_scalar(x, 2.5)); }) <= tol);
  CHECK(graph_fd_error(pos, [&](Tape& t, int x) { return t.sum(t.relu(t.add_scalar(x, -1.0))); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.silu(x)); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.tanh(x)); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.exp(x)); }) <= tol);
  CHECK(graph_fd_error(pos, [&](Tape& t, int x) { return t.sum(t.log(x)); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.square(x)); }) <= tol);
  CHECK(graph_fd_error(pos, [&](Tape& t, int x) { return t.sum(t.sqrt(x)); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.softplus(x)); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.mean(t.exp(x)); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.smooth_norm(x, 1e-12); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) { return t.sum(t.block(x, 1, 1, 2, 3)); }) <= tol);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) {
          return t.sum(t.square(t.reshape(x, 4, 3)));
        }) <= tol);
  const Matrix gather_weights = testutil::random_cloud(3, 4, eng);
  CHECK(graph_fd_error(x34, [&](Tape& t, int x) {
          return t.sum(t.mul(t.gather_cols(x, {0, 2, 2, 3}), t.constant(gather_weights)));
        }) <= tol);
}

TEST_CASE("backward validates its root and tape membership") {
  rng::Engine eng(1);
  Tape tape;
  const int x = tape.leaf(testutil::random_cloud(2, 2, eng));
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);  // non-scalar root
  CHECK_THROWS_AS(tape.value(99), std::invalid_argument);    // unrecorded id
}

TEST_CASE("mlp_forward: zero params, passthrough, shapes, plain-apply agreement") {
  nn::MlpConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden_dim = 4;
  cfg.output_dim = 2;
  cfg.n_hidden_layers = 2;

  nn::Params zeros;
  for (const auto& p : nn::init_params(cfg, 1)) zeros.push_back(Matrix::Zero(p.rows(), p.cols()));
  rng::Engine eng(6);
  const Matrix x = testutil::random_cloud(5, 3, eng);
  CHECK(nn::mlp_apply(cfg, zeros, x).cwiseAbs().maxCoeff() == 0.0);

  // single affine layer with identity weights passes the input through
  nn::MlpConfig id_cfg;
  id_cfg.input_dim = 3;
  id_cfg.hidden_dim = 1;
  id_cfg.output_dim = 3;
  id_cfg.n_hidden_layers = 0;
  nn::Params id_params = {Matrix::Identity(3, 3), Matrix::Zero(1, 3)};
  CHECK((nn::mlp_apply(id_cfg, id_params, x) - x).cwiseAbs().maxCoeff() == 0.0);

  const nn::Params params = nn::init_params(cfg, 99);
  const Matrix out = nn::mlp_apply(cfg, params, x);
  CHECK(out.rows() == 5);
  CHECK(out.cols() == 2);

  ad::Tape tape;
  const auto pvars = nn::param_leaves(tape, params);
  const ad::Var taped = nn::mlp_forward(tape, cfg, pvars, ad::wrap(tape, tape.constant(x)));
  CHECK((taped.value() - out).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("mlp gradients match finite differences on every parameter") {
  nn::MlpConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_dim = 5;
  cfg.output_dim = 3;
  cfg.n_hidden_layers = 3;
  rng::Engine eng(123);
  const nn::Params params = nn::init_params(cfg, 5);
  const Matrix x = testutil::random_cloud(4, 2, eng);

  ad::Tape tape;
  const auto pvars = nn::param_leaves(tape, params);
  const ad::Var out = nn::mlp_forward(tape, cfg, pvars, ad::wrap(tape, tape.constant(x)));
  const int root = tape.sum(tape.square(out.id));
  tape.backward(root);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const auto eval = [&](const Matrix& pv) {
      nn::Params p2 = params;
      p2[pi] = pv;
      return nn::mlp_apply(cfg, p2, x).squaredNorm();
    };
    CHECK(testutil::fd_gradient_rel_error(eval, params[pi], pvars[pi].grad()) <= 1e-5);
  }
}

TEST_CASE("adam: zero grad, first step, two-step recurrence") {
  nn::Params params = {scalar(1.0)};
  nn::AdamState st = nn::make_adam(params, 1e-3);
  nn::adam_step(st, params, {scalar(0.0)});
  CHECK(params[0](0, 0) == doctest::Approx(1.0));

  params = {scalar(0.0)};
  st = nn::make_adam(params, 1e-3);
  nn::adam_step(st, params, {scalar(1.0)});
  const double expected1 = -1e-3 * 1.0 / (1.0 + 1e-8);
  CHECK(params[0](0, 0) == doctest::Approx(expected1).epsilon(1e-12));

  // hand-evaluated two-step recursion with constant gradient g = 1
  double m = 0.0, v = 0.0, theta = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = 0.9 * m + 0.1 * 1.0;
    v = 0.999 * v + 0.001 * 1.0;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    theta -= 1e-3 * mhat / (std::sqrt(vhat) + 1e-8);
  }
  params = {scalar(0.0)};
  st = nn::make_adam(params, 1e-3);
  nn::adam_step(st, params, {scalar(1.0)});
  nn::adam_step(st, params, {scalar(1.0)});
  CHECK(params[0](0, 0) == doctest::Approx(theta).epsilon(1e-12));
}

TEST_CASE("init_params: determinism, bound, near-zero mean") {
  nn::MlpConfig cfg;
  cfg.input_dim = 100;
  cfg.hidden_dim = 500;
  cfg.output_dim = 100;
  cfg.n_hidden_layers = 1;
  const nn::Params a = nn::init_params(cfg, 777);
  const nn::Params b = nn::init_params(cfg, 777);
  double total = 0.0, count = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(a[i].rows() == 1 ? cfg.hidden_dim : a[i].rows()));
    if (a[i].rows() > 1) CHECK(a[i].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(static_cast<double>(a[i].rows())));
    (void)bound;
    total += a[i].sum();
    count += static_cast<double>(a[i].size());
  }
  // mean of count uniform(-b, b) entries: sd ~ b/sqrt(3*count) with b <= 0.1
  const double se = 0.1 / std::sqrt(3.0 * count);
  CHECK(std::abs(total / count) <= 3.0 * se);
}

TEST_SUITE_END();
