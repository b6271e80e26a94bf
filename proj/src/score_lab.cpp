#include "elosslab/score_lab.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace elosslab::score {

namespace {

constexpr double kProjectorRelCutoff = 1e-10;
constexpr double kRichardsonTol = 1e-4;

void check_toy_setting(const ToyDiffusionConfig& cfg) {
  cfg.validate();
  if (cfg.n_particles != 2 || cfg.d != 1)
    throw std::invalid_argument("score quadrature is restricted to 2 particles in 1D");
}

/// Discretized posterior p(x | x_t) on the tensor grid: node coordinates,
/// normalized cumulative weights for inverse-CDF sampling, and the posterior
/// mean. Trapezoid weights are folded into the node masses.
struct PosteriorGrid {
  Eigen::VectorXd axis;
  Eigen::VectorXd cdf;  // length nodes^2, flattened index k = i * nodes + j
  Eigen::Vector2d mean;

  Eigen::Vector2d node(Eigen::Index k) const {
    const Eigen::Index n = axis.size();
    return {axis(k / n), axis(k % n)};
  }

  Eigen::Vector2d sample(rng::Engine& eng) const {
    const double u = eng.uniform();
    const auto it = std::upper_bound(cdf.data(), cdf.data() + cdf.size(), u);
    Eigen::Index k = static_cast<Eigen::Index>(it - cdf.data());
    if (k >= cdf.size()) k = cdf.size() - 1;
    return node(k);
  }
};

PosteriorGrid build_posterior(const ToyDensity& density, const Eigen::Ref<const Vector>& x_t,
                              const ToyDiffusionConfig& cfg, int nodes) {
  const double half = density.box_halfwidth();
  const double inv2s2 = 1.0 / (2.0 * cfg.sigma_t * cfg.sigma_t);

  PosteriorGrid grid;
  grid.axis = Eigen::VectorXd::LinSpaced(nodes, -half, half);

  Eigen::VectorXd logw(static_cast<Eigen::Index>(nodes) * nodes);
  double logmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nodes; ++i) {
    const double x1 = grid.axis(i);
    const double r1 = x_t(0) - cfg.alpha_t * x1;
    for (int j = 0; j < nodes; ++j) {
      const double x2 = grid.axis(j);
      const double r2 = x_t(1) - cfg.alpha_t * x2;
      double lw = density.log_density(x1, x2) - (r1 * r1 + r2 * r2) * inv2s2;
      if (i == 0 || i == nodes - 1) lw += std::log(0.5);  // trapezoid boundary weights
      if (j == 0 || j == nodes - 1) lw += std::log(0.5);
      logw(static_cast<Eigen::Index>(i) * nodes + j) = lw;
      logmax = std::max(logmax, lw);
    }
  }

  Eigen::VectorXd w = (logw.array() - logmax).exp();
  const double total = w.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::runtime_error("posterior quadrature: degenerate weights");
  w /= total;

  grid.mean.setZero();
  grid.cdf.resize(w.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    grid.mean += w(k) * grid.node(k);
    acc += w(k);
    grid.cdf(k) = acc;
  }
  grid.cdf(w.size() - 1) = 1.0;
  return grid;
}

Vector eps_from_mean(const Eigen::Vector2d& mean, const Eigen::Ref<const Vector>& x_t,
                     const ToyDiffusionConfig& cfg) {
  return (x_t - cfg.alpha_t * mean) / cfg.sigma_t;
}

Matrix projector_at(const Eigen::Ref<const Vector>& x_t) {
  Matrix cloud(2, 1);
  cloud << x_t(0), x_t(1);
  return projector_onto_row_space(distance_jacobian(cloud));
}

McEstimate estimate_on_grid(const PosteriorGrid& grid, const Matrix& proj,
                            const Eigen::Ref<const Vector>& x_t, const ToyDiffusionConfig& cfg,
                            rng::Engine& eng) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (int i = 0; i < cfg.mc_samples; ++i) mean += grid.sample(eng);
  mean /= static_cast<double>(cfg.mc_samples);
  McEstimate est;
  est.eps_mse = eps_from_mean(mean, x_t, cfg);
  est.eps_dist = proj * est.eps_mse;
  return est;
}

}  // namespace

void ToyDiffusionConfig::validate() const {
  if (!(sigma_t > 0.0)) throw std::invalid_argument("ToyDiffusionConfig: sigma_t must be > 0");
  if (!(alpha_t > 0.0)) throw std::invalid_argument("ToyDiffusionConfig: alpha_t must be > 0");
  if (mc_samples < 2) throw std::invalid_argument("ToyDiffusionConfig: mc_samples must be >= 2");
  if (trials < 2) throw std::invalid_argument("ToyDiffusionConfig: trials must be >= 2");
  if (grid_nodes < 51) throw std::invalid_argument("ToyDiffusionConfig: grid too small");
}

ToyDensity ToyDensity::pair_distance(double r0, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("ToyDensity: width must be > 0");
  return ToyDensity{Kind::pair_distance_gaussian, r0, s};
}

ToyDensity ToyDensity::isotropic(double s) {
  if (!(s > 0.0)) throw std::invalid_argument("ToyDensity: width must be > 0");
  return ToyDensity{Kind::isotropic_gaussian, 0.0, s};
}

double ToyDensity::box_halfwidth() const { return 8.0 * s + std::abs(r0); }

double ToyDensity::log_density(double x1, double x2) const {
  if (kind == Kind::pair_distance_gaussian) {
    const double dr = std::abs(x1 - x2) - r0;
    return -dr * dr / (2.0 * s * s);
  }
  return -(x1 * x1 + x2 * x2) / (2.0 * s * s);
}

Matrix distance_jacobian(const Eigen::Ref<const Matrix>& cloud) {
  if (!geom::is_valid_cloud(cloud)) throw std::invalid_argument("distance_jacobian: invalid cloud");
  const Eigen::Index n = cloud.rows();
  const Eigen::Index d = cloud.cols();
  Matrix jac = Matrix::Zero(n * (n - 1) / 2, n * d);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++row) {
      Eigen::RowVectorXd u = cloud.row(i) - cloud.row(j);
      u /= geom::smooth_norm(u.transpose());
      jac.block(row, i * d, 1, d) = u;
      jac.block(row, j * d, 1, d) = -u;
    }
  }
  return jac;
}

Matrix projector_onto_row_space(const Eigen::Ref<const Matrix>& jac) {
  if (!jac.allFinite()) throw std::invalid_argument("projector_onto_row_space: non-finite input");
  const Eigen::Index dim = jac.cols();
  if (jac.rows() == 0) return Matrix::Zero(dim, dim);
  const Eigen::JacobiSVD<Matrix> svd(jac, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = (sv.size() > 0 ? sv(0) : 0.0) * kProjectorRelCutoff;
  Matrix p = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0)
      p.noalias() += svd.matrixV().col(i) * svd.matrixV().col(i).transpose();
  }
  return p;
}

Vector quadrature_score(const ToyDensity& density, const Eigen::Ref<const Vector>& x_t,
                        const ToyDiffusionConfig& cfg) {
  check_toy_setting(cfg);
  if (x_t.size() != 2) throw std::invalid_argument("quadrature_score: x_t must have 2 entries");

  const PosteriorGrid fine = build_posterior(density, x_t, cfg, cfg.grid_nodes);
  const Vector eps = eps_from_mean(fine.mean, x_t, cfg);

  const int coarse_nodes = (cfg.grid_nodes + 1) / 2;
  const PosteriorGrid coarse = build_posterior(density, x_t, cfg, coarse_nodes);
  const Vector eps_coarse = eps_from_mean(coarse.mean, x_t, cfg);
  if ((eps - eps_coarse).cwiseAbs().maxCoeff() > kRichardsonTol)
    throw std::runtime_error("quadrature_score: grid too coarse (Richardson check failed)");
  return eps;
}

McEstimate mc_estimators(const ToyDensity& density, const Eigen::Ref<const Vector>& x_t,
                         const ToyDiffusionConfig& cfg) {
  check_toy_setting(cfg);
  const PosteriorGrid grid = build_posterior(density, x_t, cfg, cfg.grid_nodes);
  const Matrix proj = projector_at(x_t);
  rng::Engine eng(rng::derive_seed(cfg.seed, 0x6d63ULL));
  return estimate_on_grid(grid, proj, x_t, cfg, eng);
}

BiasVarianceReport bias_variance_experiment(const ToyDensity& density,
                                            const Eigen::Ref<const Vector>& x_t,
                                            const ToyDiffusionConfig& cfg) {
  check_toy_setting(cfg);
  const PosteriorGrid grid = build_posterior(density, x_t, cfg, cfg.grid_nodes);
  const Matrix proj = projector_at(x_t);
  const Vector ref_mse = eps_from_mean(grid.mean, x_t, cfg);
  const Vector ref_dist = proj * ref_mse;

  rng::Engine eng(rng::derive_seed(cfg.seed, 0x7472ULL));
  Matrix mse_draws(cfg.trials, 2);
  Matrix dist_draws(cfg.trials, 2);
  for (int t = 0; t < cfg.trials; ++t) {
    const McEstimate est = estimate_on_grid(grid, proj, x_t, cfg, eng);
    mse_draws.row(t) = est.eps_mse.transpose();
    dist_draws.row(t) = est.eps_dist.transpose();
  }

  const auto summarize = [&](const Matrix& draws, const Vector& ref, double& bias_norm,
                             double& var_trace, double& se_mean) {
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    bias_norm = (mean.transpose() - ref).norm();
    const Matrix centered = draws.rowwise() - mean;
    var_trace = centered.squaredNorm() / static_cast<double>(cfg.trials - 1);
    se_mean = std::sqrt(var_trace / static_cast<double>(cfg.trials));
  };

  BiasVarianceReport rep;
  rep.trials = cfg.trials;
  rep.mc_samples = cfg.mc_samples;
  summarize(mse_draws, ref_mse, rep.bias_norm_mse, rep.var_trace_mse, rep.se_mean_mse);
  summarize(dist_draws, ref_dist, rep.bias_norm_dist, rep.var_trace_dist, rep.se_mean_dist);
  return rep;
}

Vector sample_xt(const ToyDensity& density, const ToyDiffusionConfig& cfg) {
  check_toy_setting(cfg);
  // Prior draw via the same grid machinery with a flat observation kernel:
  // sample from the density restricted to the box.
  const double half = density.box_halfwidth();
  const int nodes = cfg.grid_nodes;
  Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(nodes, -half, half);
  Eigen::VectorXd w(static_cast<Eigen::Index>(nodes) * nodes);
  double logmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nodes; ++i)
    for (int j = 0; j < nodes; ++j) {
      const double lw = density.log_density(axis(i), axis(j));
      w(static_cast<Eigen::Index>(i) * nodes + j) = lw;
      logmax = std::max(logmax, lw);
    }
  w = (w.array() - logmax).exp();
  w /= w.sum();
  for (Eigen::Index k = 1; k < w.size(); ++k) w(k) += w(k - 1);

  rng::Engine eng(rng::derive_seed(cfg.seed, 0x7874ULL));
  const double u = eng.uniform();
  Eigen::Index k = static_cast<Eigen::Index>(
      std::upper_bound(w.data(), w.data() + w.size(), u) - w.data());
  if (k >= w.size()) k = w.size() - 1;
  const Eigen::Vector2d x(axis(k / nodes), axis(k % nodes));

  Vector x_t(2);
  x_t(0) = cfg.alpha_t * x(0) + cfg.sigma_t * eng.normal();
  x_t(1) = cfg.alpha_t * x(1) + cfg.sigma_t * eng.normal();
  return x_t;
}

}  // namespace elosslab::score
