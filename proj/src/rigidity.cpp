#include "elosslab/rigidity.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>

#include "elosslab/parallel.hpp"

namespace elosslab::rigidity {

namespace {

constexpr int kPairingBudget = 10000;
constexpr int kPoolAttempts = 100;
constexpr double kRankRelTol = 1e-10;

int numeric_rank(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double cutoff = sv(0) * static_cast<double>(std::max(m.rows(), m.cols())) * kRankRelTol;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

Matrix generic_placement(int n, int d, std::uint64_t seed) {
  rng::Engine eng(seed);
  Matrix p(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) p(i, j) = eng.normal();
  return p;
}

int expected_rigid_rank(int n, int d) { return n * d - d * (d + 1) / 2; }

}  // namespace

void EdgeSet::validate() const {
  if (n < 1) throw std::invalid_argument("EdgeSet: n must be >= 1");
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : edges) {
    if (!(0 <= i && i < j && j < n))
      throw std::invalid_argument("EdgeSet: edge (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") out of range");
    if (!seen.insert({i, j}).second) throw std::invalid_argument("EdgeSet: duplicate edge");
  }
}

EdgeSet EdgeSet::complete(int n) {
  EdgeSet es;
  es.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) es.edges.emplace_back(i, j);
  return es;
}

void OrbitAction::validate(int n) const {
  for (const auto& perm : generators) {
    if (static_cast<int>(perm.size()) != n)
      throw std::invalid_argument("OrbitAction: generator size mismatch");
    std::vector<bool> hit(n, false);
    for (int v : perm) {
      if (v < 0 || v >= n || hit[v])
        throw std::invalid_argument("OrbitAction: generator is not a permutation");
      hit[v] = true;
    }
  }
  if (!orbits.empty()) {
    std::vector<bool> hit(n, false);
    for (const auto& orbit : orbits)
      for (int v : orbit) {
        if (v < 0 || v >= n || hit[v])
          throw std::invalid_argument("OrbitAction: orbits do not partition the nodes");
        hit[v] = true;
      }
    for (bool h : hit)
      if (!h) throw std::invalid_argument("OrbitAction: orbits do not cover the nodes");
  }
}

OrbitAction OrbitAction::trivial(int n) {
  OrbitAction a;
  a.orbits.reserve(n);
  for (int i = 0; i < n; ++i) a.orbits.push_back({i});
  return a;
}

EdgeSet random_k_regular(int n, int k, std::uint64_t seed) {
  if (k >= n) throw std::invalid_argument("random_k_regular: k must be < n");
  if (k < 1) throw std::invalid_argument("random_k_regular: k must be >= 1");
  if ((static_cast<long long>(n) * k) % 2 != 0)
    throw std::invalid_argument("random_k_regular: n*k must be even");

  rng::Engine eng(seed);
  std::vector<int> stubs(static_cast<std::size_t>(n) * k);
  for (int v = 0; v < n; ++v)
    for (int s = 0; s < k; ++s) stubs[static_cast<std::size_t>(v) * k + s] = v;

  for (int attempt = 0; attempt < kPairingBudget; ++attempt) {
    eng.shuffle(stubs);
    std::set<std::pair<int, int>> edges;
    bool ok = true;
    for (std::size_t m = 0; m + 1 < stubs.size(); m += 2) {
      int a = stubs[m], b = stubs[m + 1];
      if (a == b) { ok = false; break; }
      if (a > b) std::swap(a, b);
      if (!edges.insert({a, b}).second) { ok = false; break; }
    }
    if (ok) {
      EdgeSet es;
      es.n = n;
      es.edges.assign(edges.begin(), edges.end());
      return es;
    }
  }
  throw std::runtime_error("random_k_regular: pairing rejection budget exhausted");
}

Matrix rigidity_matrix(const Framework& fw, int d) {
  fw.edges.validate();
  if (fw.placement.rows() != fw.edges.n || fw.placement.cols() != d)
    throw std::invalid_argument("rigidity_matrix: placement shape mismatch");
  const auto ne = static_cast<Eigen::Index>(fw.edges.edges.size());
  Matrix r = Matrix::Zero(ne, static_cast<Eigen::Index>(fw.edges.n) * d);
  for (Eigen::Index e = 0; e < ne; ++e) {
    const auto [i, j] = fw.edges.edges[static_cast<std::size_t>(e)];
    const Eigen::RowVectorXd diff = fw.placement.row(i) - fw.placement.row(j);
    r.block(e, static_cast<Eigen::Index>(i) * d, 1, d) = diff;
    r.block(e, static_cast<Eigen::Index>(j) * d, 1, d) = -diff;
  }
  return r;
}

bool is_rigid(const EdgeSet& edges, int d, std::uint64_t seed) {
  edges.validate();
  if (edges.n <= d) throw std::invalid_argument("is_rigid: need n >= d+1");
  const Framework fw{edges, generic_placement(edges.n, d, seed)};
  return numeric_rank(rigidity_matrix(fw, d)) == expected_rigid_rank(edges.n, d);
}

bool is_globally_rigid(const EdgeSet& edges, int d, std::uint64_t seed) {
  edges.validate();
  if (edges.n < d + 2) throw std::invalid_argument("is_globally_rigid: need n >= d+2");
  if (!is_rigid(edges, d, rng::derive_seed(seed, 1))) return false;

  // Random equilibrium stress at a fresh generic placement.
  const int n = edges.n;
  const Framework fw{edges, generic_placement(n, d, rng::derive_seed(seed, 2))};
  const Matrix r = rigidity_matrix(fw, d);
  const Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double cutoff =
      (sv.size() > 0 ? sv(0) : 0.0) * static_cast<double>(std::max(r.rows(), r.cols())) * kRankRelTol;
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    if (i >= sv.size() || sv(i) <= cutoff) null_cols.push_back(i);
  if (null_cols.empty()) return false;  // no nonzero stress exists

  rng::Engine eng(rng::derive_seed(seed, 3));
  Eigen::VectorXd stress = Eigen::VectorXd::Zero(r.rows());
  for (const Eigen::Index c : null_cols) {
    stress += eng.normal() * svd.matrixU().col(c);
  }

  Matrix omega = Matrix::Zero(n, n);
  for (std::size_t e = 0; e < edges.edges.size(); ++e) {
    const auto [i, j] = edges.edges[e];
    const double w = stress(static_cast<Eigen::Index>(e));
    omega(i, j) -= w;
    omega(j, i) -= w;
    omega(i, i) += w;
    omega(j, j) += w;
  }
  return numeric_rank(omega) == n - d - 1;
}

EdgeSet symmetrize_edges(const EdgeSet& edges, const OrbitAction& action) {
  edges.validate();
  action.validate(edges.n);

  std::set<std::pair<int, int>> closed(edges.edges.begin(), edges.edges.end());
  std::deque<std::pair<int, int>> queue(edges.edges.begin(), edges.edges.end());
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    for (const auto& perm : action.generators) {
      int a = perm[static_cast<std::size_t>(i)];
      int b = perm[static_cast<std::size_t>(j)];
      if (a > b) std::swap(a, b);
      if (closed.insert({a, b}).second) queue.emplace_back(a, b);
    }
  }
  EdgeSet out;
  out.n = edges.n;
  out.edges.assign(closed.begin(), closed.end());
  return out;
}

std::vector<EdgeSet> edge_pool(int n, int d, int pool_size, std::uint64_t seed, int k) {
  if (pool_size < 1) throw std::invalid_argument("edge_pool: pool_size must be >= 1");
  if (k < 0) k = 2 * d;
  if ((static_cast<long long>(n) * k) % 2 != 0) ++k;  // keep degree >= 2d when parity forces a bump
  if (k >= n) throw std::invalid_argument("edge_pool: degree must be < n");
  if (n <= d) throw std::invalid_argument("edge_pool: need n >= d+1");

  std::vector<EdgeSet> pool(static_cast<std::size_t>(pool_size));
  std::vector<char> failed(static_cast<std::size_t>(pool_size), 0);
  parallel_for(0, pool_size, [&](int idx) {
    const std::uint64_t candidate_seed = rng::derive_seed(seed, static_cast<std::uint64_t>(idx));
    bool done = false;
    for (int attempt = 0; attempt < kPoolAttempts && !done; ++attempt) {
      try {
        EdgeSet es = random_k_regular(n, k, rng::derive_seed(candidate_seed, 2 * attempt));
        if (is_rigid(es, d, rng::derive_seed(candidate_seed, 2 * attempt + 1))) {
          pool[static_cast<std::size_t>(idx)] = std::move(es);
          done = true;
        }
      } catch (const std::runtime_error&) {
        // pairing rejection budget; retry with the next attempt seed
      }
    }
    if (!done) failed[static_cast<std::size_t>(idx)] = 1;
  });
  for (const char f : failed)
    if (f) throw std::runtime_error("edge_pool: rigidity/regeneration budget exhausted");
  return pool;
}

}  // namespace elosslab::rigidity
