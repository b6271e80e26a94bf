#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "elosslab/geometry.hpp"

namespace elosslab::rigidity {

using geom::Matrix;

/// Undirected simple graph on nodes {0..n-1}; pairs stored with i < j,
/// sorted lexicographically, no duplicates.
struct EdgeSet {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  void validate() const;
  static EdgeSet complete(int n);
};

/// Graph plus a geometric placement of its nodes (one point per row).
struct Framework {
  EdgeSet edges;
  Matrix placement;
};

/// Node permutations generating a symmetry group, plus the orbit partition
/// they induce. Generators are supplied externally; this module never
/// computes automorphism groups.
struct OrbitAction {
  std::vector<std::vector<int>> generators;  // each a bijection of {0..n-1}
  std::vector<std::vector<int>> orbits;      // partition of {0..n-1}

  void validate(int n) const;
  static OrbitAction trivial(int n);
};

/// Random simple k-regular graph via the pairing (configuration) model with
/// rejection of self-loops and multi-edges. Deterministic per seed.
/// Throws if n*k is odd, k >= n, or the rejection budget (1e4 pairings) runs out.
EdgeSet random_k_regular(int n, int k, std::uint64_t seed);

/// |E| x (n*d) rigidity matrix: the row of edge (i,j) carries p_i - p_j in
/// node i's column block and p_j - p_i in node j's block.
Matrix rigidity_matrix(const Framework& fw, int d);

/// Generic-placement rigidity test: nodes placed i.i.d. standard normal
/// (seeded) and the rigidity matrix rank compared against n*d - d(d+1)/2.
/// Rank uses singular values with threshold max_sigma * max(rows,cols) * 1e-10.
bool is_rigid(const EdgeSet& edges, int d, std::uint64_t seed);

/// Randomized sufficient certificate for global rigidity: the rigidity rank
/// check plus a random equilibrium stress whose n x n stress matrix must have
/// rank n - d - 1. "false" means "not certified".
bool is_globally_rigid(const EdgeSet& edges, int d, std::uint64_t seed);

/// Closure of the edge set under the group generated by action.generators
/// (BFS over edge orbits; group elements are never materialized).
EdgeSet symmetrize_edges(const EdgeSet& edges, const OrbitAction& action);

/// Pool of `pool_size` random k-regular edge sets (k defaults to 2d, bumped
/// by one when n*k is odd), each verified by is_rigid with up to 100
/// regeneration attempts. A consumer draws one uniformly per loss evaluation.
std::vector<EdgeSet> edge_pool(int n, int d, int pool_size, std::uint64_t seed, int k = -1);

}  // namespace elosslab::rigidity
