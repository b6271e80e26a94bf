#include <array>
#include <cmath>

#include "doctest.h"
#include "elosslab/energy_loss.hpp"
#include "elosslab/nn.hpp"
#include "test_util.hpp"

using namespace elosslab;
using geom::Matrix;
using loss::CoefficientScheme;
using loss::LossReport;

namespace {

std::array<CoefficientScheme, 4> all_schemes() {
  return {CoefficientScheme::constant(1.0), CoefficientScheme::inverse_distance(1e-3),
          CoefficientScheme::inverse_squared(1e-3), CoefficientScheme::exponential_decay(1.0)};
}

// Vertex permutations of the unit square's distance-matrix automorphism group
// (dihedral of order 8), acting on vertices listed in cyclic order.
const std::array<std::array<int, 4>, 8> kSquareAutomorphisms = {{{0, 1, 2, 3},
                                                                 {1, 2, 3, 0},
                                                                 {2, 3, 0, 1},
                                                                 {3, 0, 1, 2},
                                                                 {3, 2, 1, 0},
                                                                 {0, 3, 2, 1},
                                                                 {1, 0, 3, 2},
                                                                 {2, 1, 0, 3}}};

Matrix permute_rows(const Matrix& m, const std::array<int, 4>& perm) {
  Matrix out(m.rows(), m.cols());
  for (int i = 0; i < 4; ++i) out.row(i) = m.row(perm[i]);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("energy_loss");

TEST_CASE("coefficients: constant and exponential values") {
  Matrix cloud(3, 2);
  cloud << 0, 0, 1, 0, 0, 1;
  const Matrix kc = loss::coefficients(CoefficientScheme::constant(1.0), cloud);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(kc(i, j) == (i == j ? 0.0 : 1.0));

  const Matrix ke = loss::coefficients(CoefficientScheme::exponential_decay(1.0), cloud);
  CHECK(ke(0, 1) == doctest::Approx(0.3678794411714423).epsilon(1e-12));
}

TEST_CASE("coefficients: inverse-squared tracks the Lennard-Jones stiffness shape") {
  // The LJ second-order stiffness at equilibrium distance r is 72*eps/r^2;
  // with eps = 1, r = 2 that is 18, i.e. 72 times the inverse-squared weight.
  Matrix pair(2, 1);
  pair << 0.0, 2.0;
  const Matrix k = loss::coefficients(CoefficientScheme::inverse_squared(1e-3), pair);
  CHECK(72.0 * k(0, 1) == doctest::Approx(18.0).epsilon(1e-12));
}

TEST_CASE("coefficient schemes validate their parameter") {
  CHECK_THROWS_AS(CoefficientScheme::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(CoefficientScheme::exponential_decay(-1.0), std::invalid_argument);
}

TEST_CASE("energy loss: zero at the data, hand value on one pair") {
  rng::Engine eng(99);
  const Matrix target = testutil::random_cloud(5, 2, eng);
  for (const auto& scheme : all_schemes()) {
    const LossReport rep = loss::energy_loss(target, target, scheme);
    CHECK(rep.value <= 1e-18);
    CHECK(rep.grad.cwiseAbs().maxCoeff() <= 1e-9);
  }

  Matrix y(2, 1), p(2, 1);
  y << 0.0, 1.0;
  p << 0.0, 2.0;
  CHECK(loss::energy_loss(p, y, CoefficientScheme::constant(1.0)).value == doctest::Approx(1.0));

  Matrix one_point = Matrix::Zero(1, 2);
  CHECK_THROWS_AS(loss::energy_loss(one_point, one_point, CoefficientScheme::constant(1.0)),
                  std::invalid_argument);
}

TEST_CASE("energy loss: invariant under E(d) on either argument") {
  for (int d = 1; d <= 3; ++d) {
    rng::Engine eng(7 + static_cast<std::uint64_t>(d));
    const Matrix target = testutil::random_cloud(6, d, eng);
    const Matrix pred = testutil::random_cloud(6, d, eng);
    for (const auto& scheme : all_schemes()) {
      const double base = loss::energy_loss(pred, target, scheme).value;
      for (int t = 0; t < 100; ++t) {
        const auto g = geom::random_transform(d, 5.0, rng::derive_seed(800 + d, t));
        const double moved_pred =
            loss::energy_loss(geom::apply_transform(pred, g), target, scheme).value;
        const double moved_target =
            loss::energy_loss(pred, geom::apply_transform(target, g), scheme).value;
        CHECK(std::abs(moved_pred - base) / (base + 1e-30) <= 1e-9);
        CHECK(std::abs(moved_target - base) / (base + 1e-30) <= 1e-9);
      }
    }
  }
}

TEST_CASE("energy loss: invariant under the square's automorphism group") {
  Matrix square(4, 2);
  square << 1, 1, -1, 1, -1, -1, 1, -1;
  rng::Engine eng(404);
  const Matrix pred = testutil::random_cloud(4, 2, eng);
  for (const auto& scheme : all_schemes()) {
    const double base = loss::energy_loss(pred, square, scheme).value;
    for (const auto& perm : kSquareAutomorphisms) {
      const double permuted = loss::energy_loss(permute_rows(pred, perm), square, scheme).value;
      CHECK(std::abs(permuted - base) / (base + 1e-30) <= 1e-9);
    }
  }
}

TEST_CASE("corollary: zero loss iff equal distance matrices") {
  rng::Engine eng(2718);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(eng.uniform_below(3));
    const Matrix target = testutil::random_cloud(5, d, eng);

    // same distances (rigid copy) -> zero loss
    const auto g = geom::random_transform(d, 2.0, rng::derive_seed(33, trial));
    const Matrix copy = geom::apply_transform(target, g);
    CHECK(loss::energy_loss(copy, target, CoefficientScheme::constant(1.0)).value <= 1e-18);

    // zero loss -> equal distances: a perturbed cloud must score positive
    Matrix perturbed = copy;
    perturbed(0, 0) += 0.35;
    const double e = loss::energy_loss(perturbed, target, CoefficientScheme::constant(1.0)).value;
    CHECK(e > 1e-6);
    const Matrix dp = geom::pairwise_distances(perturbed);
    const Matrix dt = geom::pairwise_distances(target);
    CHECK((dp - dt).cwiseAbs().maxCoeff() > 1e-4);
  }
}

TEST_CASE("sparse energy loss: reduction to full loss and edge validation") {
  rng::Engine eng(11);
  const Matrix target = testutil::random_cloud(6, 2, eng);
  const Matrix pred = testutil::random_cloud(6, 2, eng);
  const rigidity::EdgeSet all = rigidity::EdgeSet::complete(6);
  for (const auto& scheme : all_schemes()) {
    const LossReport full = loss::energy_loss(pred, target, scheme);
    const LossReport sparse = loss::sparse_energy_loss(pred, target, scheme, all);
    CHECK(std::abs(full.value - sparse.value) <= 1e-12 * (1.0 + std::abs(full.value)));
    CHECK((full.grad - sparse.grad).cwiseAbs().maxCoeff() <= 1e-12);
  }

  rigidity::EdgeSet triangle;
  triangle.n = 6;
  triangle.edges = {{0, 1}, {1, 2}, {0, 2}};
  CHECK(loss::sparse_energy_loss(target, target, CoefficientScheme::constant(1.0), triangle).value <=
        1e-18);

  rigidity::EdgeSet bad;
  bad.n = 3;
  bad.edges = {{0, 7}};
  CHECK_THROWS_AS(loss::sparse_energy_loss(pred, target, CoefficientScheme::constant(1.0), bad),
                  std::invalid_argument);
}

TEST_CASE("sparse loss descent on a rigid triangle recovers the distance matrix") {
  Matrix target(3, 2);
  target << 0.0, 0.0, 1.0, 0.0, 0.4, 0.9;
  rigidity::EdgeSet triangle;
  triangle.n = 3;
  triangle.edges = {{0, 1}, {1, 2}, {0, 2}};

  rng::Engine eng(5);
  Matrix pred = testutil::random_cloud(3, 2, eng);
  nn::Params params = {pred};
  nn::AdamState adam = nn::make_adam(params, 0.02);
  for (int step = 0; step < 6000; ++step) {
    const LossReport rep =
        loss::sparse_energy_loss(params[0], target, CoefficientScheme::constant(1.0), triangle);
    nn::adam_step(adam, params, {rep.grad});
  }
  const Matrix dp = geom::pairwise_distances(params[0]);
  const Matrix dt = geom::pairwise_distances(target);
  CHECK((dp - dt).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("mse loss: values and the non-invariance witness") {
  Matrix y(1, 1), p(1, 1);
  y << 0.0;
  p << 2.0;
  CHECK(loss::mse_loss(p, y).value == doctest::Approx(4.0));
  CHECK(loss::mse_loss(y, y).value == 0.0);

  // a quarter turn changes the MSE of an asymmetric cloud
  Matrix cloud(3, 2), targ(3, 2);
  cloud << 1, 0, 2, 0, 0, 1;
  targ << 1, 0, 2, 0, 0, 2;
  geom::RigidTransform quarter{Matrix(2, 2), geom::Vector::Zero(2)};
  quarter.linear << 0, -1, 1, 0;
  const double before = loss::mse_loss(cloud, targ).value;
  const double after = loss::mse_loss(geom::apply_transform(cloud, quarter), targ).value;
  CHECK(std::abs(before - after) > 1e-3);
}

TEST_CASE("kabsch mse loss: invariance, dominance, grid oracle") {
  rng::Engine eng(909);
  const Matrix target = testutil::random_cloud(4, 2, eng);
  const auto g = geom::random_transform(2, 1.0, 3333);
  geom::RigidTransform proper = g;
  if (proper.linear.determinant() < 0.0) proper.linear.col(0) *= -1.0;
  CHECK(loss::kabsch_mse_loss(geom::apply_transform(target, proper), target).value <= 1e-12);

  for (int trial = 0; trial < 50; ++trial) {
    const Matrix pred = testutil::random_cloud(4, 2, eng);
    CHECK(loss::kabsch_mse_loss(pred, target).value <=
          loss::mse_loss(pred, target).value + 1e-12);
  }

  // rotation-grid oracle: minimize the centered MSE over a dense angle grid
  const Matrix pred = testutil::random_cloud(4, 2, eng);
  const Eigen::RowVector2d cp = pred.colwise().mean();
  const Eigen::RowVector2d ct = target.colwise().mean();
  const Matrix pc = pred.rowwise() - cp;
  const Matrix tc = target.rowwise() - ct;
  double best = 1e300;
  for (int k = 0; k < 2000000; ++k) {
    const double theta = 2.0 * M_PI * k / 2000000;
    const double c = std::cos(theta), s = std::sin(theta);
    double sq = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double x = c * pc(i, 0) - s * pc(i, 1) - tc(i, 0);
      const double y2 = s * pc(i, 0) + c * pc(i, 1) - tc(i, 1);
      sq += x * x + y2 * y2;
    }
    best = std::min(best, sq / 8.0);
  }
  CHECK(std::abs(loss::kabsch_mse_loss(pred, target).value - best) <= 1e-6);
}

TEST_CASE("gradients match central finite differences") {
  rng::Engine eng(1717);
  const auto check_loss = [&](const std::function<LossReport(const Matrix&, const Matrix&)>& fn,
                              int n, int d, int instances, double tol) {
    for (int t = 0; t < instances; ++t) {
      const Matrix target = testutil::random_cloud(n, d, eng);
      const Matrix pred = testutil::random_cloud(n, d, eng);
      const LossReport rep = fn(pred, target);
      const double err = testutil::fd_gradient_rel_error(
          [&](const Matrix& x) { return fn(x, target).value; }, pred, rep.grad);
      CHECK(err <= tol);
    }
  };

  for (const auto& scheme : all_schemes()) {
    check_loss([&](const Matrix& p, const Matrix& y) { return loss::energy_loss(p, y, scheme); },
               5, 2, 25, 1e-5);
  }
  rigidity::EdgeSet ring;
  ring.n = 5;
  ring.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {0, 2}};
  check_loss(
      [&](const Matrix& p, const Matrix& y) {
        return loss::sparse_energy_loss(p, y, CoefficientScheme::exponential_decay(1.0), ring);
      },
      5, 2, 25, 1e-5);
  check_loss([](const Matrix& p, const Matrix& y) { return loss::mse_loss(p, y); }, 5, 3, 25, 1e-5);
  check_loss([](const Matrix& p, const Matrix& y) { return loss::kabsch_mse_loss(p, y); }, 5, 2, 25,
             1e-5);
}

TEST_CASE("losses are nonnegative and zero at the data") {
  rng::Engine eng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix target = testutil::random_cloud(5, 2, eng);
    const Matrix pred = testutil::random_cloud(5, 2, eng);
    CHECK(loss::mse_loss(pred, target).value >= 0.0);
    CHECK(loss::kabsch_mse_loss(pred, target).value >= 0.0);
    CHECK(loss::energy_loss(pred, target, CoefficientScheme::exponential_decay(1.0)).value >= 0.0);
    CHECK(loss::mse_loss(target, target).value == 0.0);
    CHECK(loss::kabsch_mse_loss(target, target).value <= 1e-15);
  }
}

TEST_SUITE_END();
