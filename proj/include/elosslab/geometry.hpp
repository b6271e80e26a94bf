#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

#include "elosslab/rng.hpp"

// Point clouds are n x d real matrices, one point per row, d in {1,2,3},
// double precision throughout.

namespace elosslab::geom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Smoothing width used wherever a Euclidean norm must stay differentiable
/// at zero: |u| is evaluated as sqrt(|u|^2 + eps^2).
inline constexpr double kNormSmoothingEps = 1e-12;

inline double smooth_norm(const Eigen::Ref<const Vector>& u,
                          double eps = kNormSmoothingEps) {
  return std::sqrt(u.squaredNorm() + eps * eps);
}

template <typename Derived>
bool is_valid_cloud(const Eigen::MatrixBase<Derived>& coords) {
  return coords.rows() >= 1 && coords.cols() >= 1 && coords.allFinite();
}

/// n x n matrix of Euclidean distances between rows. Computed pairwise from
/// coordinate differences (not the Gram trick), so tiny distances keep full
/// relative accuracy; symmetric with a zero diagonal by construction.
template <typename Derived>
Matrix pairwise_distances(const Eigen::MatrixBase<Derived>& coords) {
  const Matrix pts = coords;
  const Eigen::Index n = pts.rows();
  if (!is_valid_cloud(pts)) throw std::invalid_argument("pairwise_distances: invalid cloud");
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double r = (pts.row(i) - pts.row(j)).norm();
      out(i, j) = r;
      out(j, i) = r;
    }
  }
  return out;
}

/// Element of E(d): x -> linear * x + translation with orthogonal `linear`
/// (det -1 allowed, i.e. reflections are part of the group).
struct RigidTransform {
  Matrix linear;
  Vector translation;

  int dim() const { return static_cast<int>(translation.size()); }

  bool is_orthogonal(double tol = 1e-12) const {
    const Matrix err = linear.transpose() * linear - Matrix::Identity(linear.rows(), linear.cols());
    return err.cwiseAbs().maxCoeff() <= tol;
  }

  static RigidTransform identity(int d) {
    return RigidTransform{Matrix::Identity(d, d), Vector::Zero(d)};
  }
};

/// Composition: (g2 * g1)(x) = g2(g1(x)).
inline RigidTransform compose(const RigidTransform& g2, const RigidTransform& g1) {
  if (g1.dim() != g2.dim()) throw std::invalid_argument("compose: dimension mismatch");
  return RigidTransform{g2.linear * g1.linear, g2.linear * g1.translation + g2.translation};
}

template <typename Derived>
Matrix apply_transform(const Eigen::MatrixBase<Derived>& cloud, const RigidTransform& g) {
  if (cloud.cols() != g.linear.cols())
    throw std::invalid_argument("apply_transform: dimension mismatch");
  Matrix out = cloud * g.linear.transpose();
  out.rowwise() += g.translation.transpose();
  return out;
}

/// Haar-uniform element of O(d) (QR of a Gaussian matrix with the diagonal
/// sign correction; reflections occur with probability 1/2) plus a translation
/// uniform in [-max_translation, max_translation]^d. Deterministic per seed.
inline RigidTransform random_transform(int d, double max_translation, std::uint64_t seed) {
  if (d < 1 || d > 3) throw std::invalid_argument("random_transform: dimension must be 1, 2 or 3");
  rng::Engine eng(seed);
  Matrix gauss(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) gauss(i, j) = eng.normal();
  const Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  Vector t(d);
  for (int i = 0; i < d; ++i) t(i) = eng.uniform(-max_translation, max_translation);
  return RigidTransform{q, t};
}

struct AlignResult {
  RigidTransform transform;  // proper rigid motion mapping pred onto target
  double rmsd = 0.0;
};

/// Kabsch superposition: the proper rotation + translation minimizing the
/// RMSD of pred onto target (SVD construction with determinant correction;
/// reflections are not searched). Coincident degenerate input falls back to
/// the identity rotation with a centroid-difference translation.
template <typename DerivedA, typename DerivedB>
AlignResult kabsch_align(const Eigen::MatrixBase<DerivedA>& pred,
                         const Eigen::MatrixBase<DerivedB>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw std::invalid_argument("kabsch_align: shape mismatch");
  if (pred.rows() < 1) throw std::invalid_argument("kabsch_align: empty cloud");
  const Eigen::Index n = pred.rows();
  const Eigen::Index d = pred.cols();

  const Vector cp = pred.colwise().mean().transpose();
  const Vector ct = target.colwise().mean().transpose();
  const Matrix pc = pred.rowwise() - cp.transpose();
  const Matrix tc = target.rowwise() - ct.transpose();

  const Matrix m = pc.transpose() * tc;  // sum of p_i t_i^T
  Matrix rot = Matrix::Identity(d, d);
  if (m.norm() > 0.0) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vector corr = Vector::Ones(d);
    corr(d - 1) = ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) ? -1.0 : 1.0;
    rot = svd.matrixV() * corr.asDiagonal() * svd.matrixU().transpose();
  }
  const Vector t = ct - rot * cp;

  Matrix aligned = pred * rot.transpose();
  aligned.rowwise() += t.transpose();
  const double rmsd = std::sqrt((aligned - target).squaredNorm() / static_cast<double>(n));
  return AlignResult{RigidTransform{rot, t}, rmsd};
}

}  // namespace elosslab::geom
