#include <cmath>

#include "doctest.h"
#include "elosslab/score_lab.hpp"
#include "test_util.hpp"

using namespace elosslab;
using geom::Matrix;
using geom::Vector;

namespace {

score::ToyDiffusionConfig default_cfg(std::uint64_t seed = 0) {
  score::ToyDiffusionConfig cfg;
  cfg.sigma_t = 0.05;
  cfg.alpha_t = 1.0;
  cfg.mc_samples = 64;
  cfg.trials = 64;
  cfg.seed = seed;
  return cfg;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE_BEGIN("score_lab");

TEST_CASE("distance_jacobian: 2-particle 1D row and rigid-motion kernel") {
  Matrix pair(2, 1);
  pair << 0.0, 1.0;
  const Matrix jac = score::distance_jacobian(pair);
  CHECK(jac.rows() == 1);
  CHECK(jac(0, 0) == doctest::Approx(-1.0));
  CHECK(jac(0, 1) == doctest::Approx(1.0));

  rng::Engine eng(10);
  for (int d = 1; d <= 3; ++d) {
    const Matrix cloud = testutil::random_cloud(5, d, eng);
    const Matrix j = score::distance_jacobian(cloud);
    for (int axis = 0; axis < d; ++axis) {
      Vector t = Vector::Zero(5 * d);
      for (int node = 0; node < 5; ++node) t(node * d + axis) = 1.0;
      CHECK((j * t).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("distance_jacobian matches finite differences of pairwise distances") {
  rng::Engine eng(20);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 1 + static_cast<int>(eng.uniform_below(3));
    const Matrix cloud = testutil::random_cloud(4, d, eng);
    const Matrix jac = score::distance_jacobian(cloud);
    const double step = 1e-6;
    Eigen::Index row = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j, ++row)
        for (int node = 0; node < 4; ++node)
          for (int axis = 0; axis < d; ++axis) {
            Matrix hi = cloud, lo = cloud;
            hi(node, axis) += step;
            lo(node, axis) -= step;
            const double fd = ((hi.row(i) - hi.row(j)).norm() - (lo.row(i) - lo.row(j)).norm()) /
                              (2.0 * step);
            CHECK(std::abs(fd - jac(row, node * d + axis)) <= 1e-6);
          }
  }
}

TEST_CASE("projector: axioms, rigid-motion kernel, hand value in 1D") {
  rng::Engine eng(30);
  for (int d = 1; d <= 3; ++d) {
    const Matrix cloud = testutil::random_cloud(4, d, eng);
    const Matrix jac = score::distance_jacobian(cloud);
    const Matrix p = score::projector_onto_row_space(jac);
    CHECK((p * p - p).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    for (int axis = 0; axis < d; ++axis) {
      Vector t = Vector::Zero(4 * d);
      for (int node = 0; node < 4; ++node) t(node * d + axis) = 1.0;
      CHECK((p * t).cwiseAbs().maxCoeff() <= 1e-10);
    }
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b) {
        Vector v(4 * d);
        for (int node = 0; node < 4; ++node) {
          Vector rot = Vector::Zero(d);
          rot(a) = -cloud(node, b);
          rot(b) = cloud(node, a);
          v.segment(node * d, d) = rot;
        }
        CHECK((p * v).cwiseAbs().maxCoeff() <= 1e-10);
      }
  }

  Matrix pair(2, 1);
  pair << 0.0, 1.0;
  const Matrix p = score::projector_onto_row_space(score::distance_jacobian(pair));
  Matrix expected(2, 2);
  expected << 0.5, -0.5, -0.5, 0.5;
  CHECK((p - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("quadrature matches the isotropic-Gaussian closed form") {
  const score::ToyDensity density = score::ToyDensity::isotropic(1.0);
  rng::Engine eng(40);
  for (int trial = 0; trial < 20; ++trial) {
    score::ToyDiffusionConfig cfg = default_cfg();
    const Vector x_t = vec2(eng.uniform(-1.5, 1.5), eng.uniform(-1.5, 1.5));
    const Vector eps = score::quadrature_score(density, x_t, cfg);
    // p(x_t) Gaussian with variance alpha^2 s^2 + sigma^2, so
    // eps* = sigma_t * x_t / (alpha^2 s^2 + sigma^2)
    const Vector closed = cfg.sigma_t * x_t /
                          (cfg.alpha_t * cfg.alpha_t + cfg.sigma_t * cfg.sigma_t);
    CHECK((eps - closed).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("quadrature score symmetry and translation component") {
  const score::ToyDensity density = score::ToyDensity::pair_distance(1.0, 0.25);
  score::ToyDiffusionConfig cfg = default_cfg();

  // coincident particles: swapping them negates the score components
  const Vector eps = score::quadrature_score(density, vec2(0.2, 0.2), cfg);
  CHECK(std::abs(eps(0) + eps(1)) <= 1e-6);

  // translation-invariant density: the score has no translation component
  const Vector eps2 = score::quadrature_score(density, vec2(-0.45, 0.62), cfg);
  CHECK(std::abs(eps2.sum()) <= 1e-6);
}

TEST_CASE("mc estimators: construction identities and convergence") {
  const score::ToyDensity density = score::ToyDensity::pair_distance(1.0, 0.25);
  const Vector x_t = vec2(-0.55, 0.5);

  score::ToyDiffusionConfig cfg = default_cfg(77);
  const score::McEstimate est = score::mc_estimators(density, x_t, cfg);
  const Matrix p = score::projector_onto_row_space(score::distance_jacobian(
      (Matrix(2, 1) << x_t(0), x_t(1)).finished()));
  CHECK((est.eps_dist - p * est.eps_mse).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(std::abs(est.eps_dist.sum()) <= 1e-12);            // translation component is zero
  CHECK(est.eps_dist.norm() <= est.eps_mse.norm() + 1e-14);  // projection contracts

  // large sample limit approaches the quadrature value
  score::ToyDiffusionConfig big = default_cfg(99);
  big.mc_samples = 200000;
  const score::McEstimate est_big = score::mc_estimators(density, x_t, big);
  const Vector ref = score::quadrature_score(density, x_t, big);
  CHECK((est_big.eps_mse - ref).norm() <= 0.02);
}

TEST_CASE("bias/variance experiment: ordering, unbiasedness, collapse limit") {
  const score::ToyDensity density = score::ToyDensity::pair_distance(1.0, 0.25);
  const Vector x_t = vec2(-0.48, 0.55);

  int ordered = 0;
  double bias = 0.0, se = 0.0;
  const int batches = 20;
  for (int b = 0; b < batches; ++b) {
    score::ToyDiffusionConfig cfg = default_cfg(rng::derive_seed(5, b));
    const auto rep = score::bias_variance_experiment(density, x_t, cfg);
    if (rep.var_trace_dist <= rep.var_trace_mse) ++ordered;
    bias += rep.bias_norm_dist / batches;
    se += rep.se_mean_dist / batches;
  }
  CHECK(ordered == batches);
  CHECK(bias <= 3.0 * se);  // per-batch bias norms hover around one SE

  // sigma_t -> 0 with alpha = 1: the posterior collapses onto x_t and both
  // estimators become exact
  score::ToyDiffusionConfig tight = default_cfg(3);
  tight.sigma_t = 1e-4;
  const auto rep = score::bias_variance_experiment(density, x_t, tight);
  CHECK(rep.bias_norm_mse <= 1e-2);
  CHECK(rep.bias_norm_dist <= 1e-2);
  CHECK(rep.var_trace_mse <= 1e-2);
}

TEST_CASE("config validation") {
  score::ToyDiffusionConfig cfg = default_cfg();
  cfg.sigma_t = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = default_cfg();
  cfg.mc_samples = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = default_cfg();
  cfg.n_particles = 3;
  CHECK_THROWS_AS(score::quadrature_score(score::ToyDensity::isotropic(1.0), vec2(0, 0), cfg),
                  std::invalid_argument);
}

TEST_SUITE_END();
