#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "elosslab/geometry.hpp"
#include "elosslab/rng.hpp"

namespace elosslab::score {

using geom::Matrix;
using geom::Vector;

/// Jacobian of the pairwise-distance map: rows indexed by unordered pairs
/// (i<j) in lexicographic order, columns by the n*d coordinates (node-major).
/// Row (i,j) carries +-(x_i - x_j)/|x_i - x_j| with the smoothed norm, so the
/// map stays total at coincident particles.
Matrix distance_jacobian(const Eigen::Ref<const Matrix>& cloud);

/// Orthogonal projector onto the row space of J (the complement of ker J),
/// from an SVD with relative singular-value cutoff 1e-10.
Matrix projector_onto_row_space(const Eigen::Ref<const Matrix>& jac);

struct ToyDiffusionConfig {
  double sigma_t = 0.05;
  double alpha_t = 1.0;
  int n_particles = 2;
  int d = 1;
  int mc_samples = 64;
  int trials = 64;
  std::uint64_t seed = 0;
  int grid_nodes = 801;  // per axis; the Richardson check halves this

  void validate() const;
};

/// Unnormalized 2-particle 1D toy density. The pair-distance kind depends
/// only on |x1 - x2| and is therefore translation-invariant by construction.
struct ToyDensity {
  enum class Kind { pair_distance_gaussian, isotropic_gaussian };
  Kind kind = Kind::pair_distance_gaussian;
  double r0 = 1.0;  // preferred pair distance (pair kind only)
  double s = 0.25;  // width

  static ToyDensity pair_distance(double r0, double s);
  static ToyDensity isotropic(double s);

  double box_halfwidth() const;
  double log_density(double x1, double x2) const;
};

/// Optimal noise prediction eps* = -sigma_t * grad log p(x_t) where
/// p(x_t) = integral p(x) N(x_t; alpha_t x, sigma_t^2 I) dx, evaluated by
/// trapezoid quadrature on a grid_nodes^2 tensor grid. Throws "grid too
/// coarse" if the half-resolution result disagrees by more than 1e-4.
Vector quadrature_score(const ToyDensity& density, const Eigen::Ref<const Vector>& x_t,
                        const ToyDiffusionConfig& cfg);

struct McEstimate {
  Vector eps_mse;   // (x_t - alpha_t * mean(x samples)) / sigma_t
  Vector eps_dist;  // projector at x_t applied to eps_mse
};

/// Monte-Carlo estimators from mc_samples posterior draws (grid-based
/// inverse-CDF sampling, exact for the discretized density). Seeded by cfg.
McEstimate mc_estimators(const ToyDensity& density, const Eigen::Ref<const Vector>& x_t,
                         const ToyDiffusionConfig& cfg);

/// One batch of cfg.trials independent estimator draws at a fixed x_t.
/// Biases are measured against the quadrature score (projected reference for
/// the dist estimator); variance is the trace of the empirical covariance.
struct BiasVarianceReport {
  double bias_norm_dist = 0.0;
  double bias_norm_mse = 0.0;
  double var_trace_dist = 0.0;
  double var_trace_mse = 0.0;
  double se_mean_dist = 0.0;  // sqrt(var_trace / trials)
  double se_mean_mse = 0.0;
  int trials = 0;
  int mc_samples = 0;
};

BiasVarianceReport bias_variance_experiment(const ToyDensity& density,
                                            const Eigen::Ref<const Vector>& x_t,
                                            const ToyDiffusionConfig& cfg);

/// Deterministic noisy observation x_t = alpha_t x + sigma_t eps with
/// x drawn from the density on the quadrature grid and eps standard normal.
Vector sample_xt(const ToyDensity& density, const ToyDiffusionConfig& cfg);

}  // namespace elosslab::score
