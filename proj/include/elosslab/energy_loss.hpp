#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "elosslab/geometry.hpp"
#include "elosslab/rigidity.hpp"

namespace elosslab::loss {

using geom::Matrix;
using geom::Vector;

/// Rule producing the pairwise weight k_ij from the target distance r_ij.
/// All four kinds keep every off-diagonal weight strictly positive, which is
/// what makes the distance matrix of the data the unique loss minimizer (up
/// to rigid motions and distance-matrix automorphisms).
struct CoefficientScheme {
  enum class Kind { constant, inverse_distance, inverse_squared, exponential_decay };

  Kind kind = Kind::constant;
  double param = 1.0;  // k / floor / floor / lambda depending on kind

  static CoefficientScheme constant(double k = 1.0) { return make(Kind::constant, k); }
  static CoefficientScheme inverse_distance(double floor = 1e-3) {
    return make(Kind::inverse_distance, floor);
  }
  static CoefficientScheme inverse_squared(double floor = 1e-3) {
    return make(Kind::inverse_squared, floor);
  }
  static CoefficientScheme exponential_decay(double lambda = 1.0) {
    return make(Kind::exponential_decay, lambda);
  }

  double operator()(double r) const {
    switch (kind) {
      case Kind::constant: return param;
      case Kind::inverse_distance: return 1.0 / std::max(r, param);
      case Kind::inverse_squared: {
        const double c = std::max(r, param);
        return 1.0 / (c * c);
      }
      case Kind::exponential_decay: return std::exp(-r / param);
    }
    return param;
  }

 private:
  static CoefficientScheme make(Kind kind, double param) {
    if (!(param > 0.0)) throw std::invalid_argument("CoefficientScheme: parameter must be > 0");
    return CoefficientScheme{kind, param};
  }
};

/// Scalar loss plus its exact gradient with respect to the prediction.
struct LossReport {
  double value = 0.0;
  Matrix grad;
};

/// Full n x n coefficient matrix k_ij(target), zero diagonal.
template <typename Derived>
Matrix coefficients(const CoefficientScheme& scheme, const Eigen::MatrixBase<Derived>& target) {
  Matrix k = geom::pairwise_distances(target).unaryExpr(
      [&scheme](double r) { return scheme(r); });
  k.diagonal().setZero();
  return k;
}

namespace detail {

inline void check_pair_shapes(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("energy loss: shape mismatch");
  if (!geom::is_valid_cloud(pred) || !geom::is_valid_cloud(target))
    throw std::invalid_argument("energy loss: invalid cloud");
}

}  // namespace detail

/// Pair-potential energy loss: mean over unordered pairs of
/// k_ij(target) * (|y_i - y_j| - |yhat_i - yhat_j|)^2, predicted distances
/// smoothed as sqrt(|u|^2 + eps^2) so the gradient is total.
inline LossReport energy_loss(const Eigen::Ref<const Matrix>& pred,
                              const Eigen::Ref<const Matrix>& target,
                              const CoefficientScheme& scheme) {
  detail::check_pair_shapes(pred, target);
  const Eigen::Index n = pred.rows();
  if (n < 2) throw std::invalid_argument("energy_loss: need at least two points");

  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  constexpr double eps2 = geom::kNormSmoothingEps * geom::kNormSmoothingEps;

  LossReport rep;
  rep.grad = Matrix::Zero(n, pred.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double ry = (target.row(i) - target.row(j)).norm();
      const Eigen::RowVectorXd u = pred.row(i) - pred.row(j);
      const double s = std::sqrt(u.squaredNorm() + eps2);
      const double k = scheme(ry);
      const double diff = ry - s;
      rep.value += k * diff * diff;
      const double c = -2.0 * k * diff / s;
      rep.grad.row(i) += c * u;
      rep.grad.row(j) -= c * u;
    }
  }
  rep.value /= pairs;
  rep.grad /= pairs;
  return rep;
}

/// Energy loss restricted to the given unordered pairs, normalized by |E|.
/// With the complete edge set this equals energy_loss. Vectorized over edges.
inline LossReport sparse_energy_loss(const Eigen::Ref<const Matrix>& pred,
                                     const Eigen::Ref<const Matrix>& target,
                                     const CoefficientScheme& scheme,
                                     const rigidity::EdgeSet& edges) {
  detail::check_pair_shapes(pred, target);
  const Eigen::Index n = pred.rows();
  if (edges.n != static_cast<int>(n))
    throw std::invalid_argument("sparse_energy_loss: edge set node count mismatch");
  const auto ne = static_cast<Eigen::Index>(edges.edges.size());
  if (ne < 1) throw std::invalid_argument("sparse_energy_loss: need at least one edge");
  const Eigen::Index d = pred.cols();
  constexpr double eps2 = geom::kNormSmoothingEps * geom::kNormSmoothingEps;

  Matrix uy(ne, d), up(ne, d);
  for (Eigen::Index e = 0; e < ne; ++e) {
    const auto [i, j] = edges.edges[static_cast<std::size_t>(e)];
    if (j >= n) throw std::invalid_argument("sparse_energy_loss: edge index out of range");
    uy.row(e) = target.row(i) - target.row(j);
    up.row(e) = pred.row(i) - pred.row(j);
  }
  const Eigen::ArrayXd ry = uy.rowwise().norm().array();
  const Eigen::ArrayXd s = (up.rowwise().squaredNorm().array() + eps2).sqrt();

  Eigen::ArrayXd k(ne);
  switch (scheme.kind) {
    case CoefficientScheme::Kind::constant: k.setConstant(scheme.param); break;
    case CoefficientScheme::Kind::inverse_distance: k = ry.max(scheme.param).inverse(); break;
    case CoefficientScheme::Kind::inverse_squared: k = ry.max(scheme.param).square().inverse(); break;
    case CoefficientScheme::Kind::exponential_decay: k = (-ry / scheme.param).exp(); break;
  }

  const Eigen::ArrayXd diff = ry - s;
  const double norm = static_cast<double>(ne);

  LossReport rep;
  rep.value = (k * diff.square()).sum() / norm;
  rep.grad = Matrix::Zero(n, d);
  const Eigen::ArrayXd c = (-2.0 / norm) * k * diff / s;
  for (Eigen::Index e = 0; e < ne; ++e) {
    const auto [i, j] = edges.edges[static_cast<std::size_t>(e)];
    rep.grad.row(i) += c(e) * up.row(e);
    rep.grad.row(j) -= c(e) * up.row(e);
  }
  return rep;
}

/// Plain coordinate MSE: |pred - target|_F^2 / (n*d). The physically
/// unsound baseline; not invariant to rigid motions of either argument.
inline LossReport mse_loss(const Eigen::Ref<const Matrix>& pred,
                           const Eigen::Ref<const Matrix>& target) {
  detail::check_pair_shapes(pred, target);
  const double scale = 1.0 / static_cast<double>(pred.size());
  LossReport rep;
  rep.value = scale * (pred - target).squaredNorm();
  rep.grad = 2.0 * scale * (pred - target);
  return rep;
}

/// MSE after Kabsch superposition of pred onto target. The alignment is
/// treated as constant for the gradient; at the Kabsch optimum this equals
/// the total derivative (stationarity along the rotation/translation
/// manifold), so finite differences of the full function agree with it.
inline LossReport kabsch_mse_loss(const Eigen::Ref<const Matrix>& pred,
                                  const Eigen::Ref<const Matrix>& target) {
  detail::check_pair_shapes(pred, target);
  const geom::AlignResult res = geom::kabsch_align(pred, target);
  const Matrix aligned = geom::apply_transform(pred, res.transform);
  const double scale = 1.0 / static_cast<double>(pred.size());
  LossReport rep;
  rep.value = scale * (aligned - target).squaredNorm();
  rep.grad = 2.0 * scale * (aligned - target) * res.transform.linear;
  return rep;
}

}  // namespace elosslab::loss
