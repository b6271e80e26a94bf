#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "elosslab/autodiff.hpp"
#include "elosslab/energy_loss.hpp"

namespace elosslab::spin {

using geom::Matrix;

/// Ising spin-glass couplings on the open L x L square lattice.
/// J_horizontal(r, c) couples sites (r, c)-(r, c+1); J_vertical(r, c) couples
/// (r, c)-(r+1, c). All couplings lie in [-1, 1].
struct LatticeHamiltonian {
  int L = 0;
  Matrix J_horizontal;  // L x (L-1)
  Matrix J_vertical;    // (L-1) x L

  void validate() const;
  int n_edges() const { return 2 * L * (L - 1); }
};

/// L x L configuration with entries in {-1, +1}.
using SpinConfig = Eigen::ArrayXXi;

/// Per-site logits; site magnetization is m = tanh(z).
using SpinLogits = Matrix;

/// Flattened site index, row-major.
inline int site_index(int r, int c, int L) { return r * L + c; }

/// Lattice edges in a fixed order: all horizontal edges row-major, then all
/// vertical edges row-major. Sites are flattened row-major.
void lattice_edges(int L, std::vector<int>& from, std::vector<int>& to);

/// Couplings of H in lattice_edges order as a single row vector.
Eigen::RowVectorXd flatten_couplings(const LatticeHamiltonian& H);

/// I.i.d. couplings uniform in [-1, 1], deterministic per seed.
LatticeHamiltonian sample_hamiltonian(int L, std::uint64_t seed);

/// -sum over lattice edges of J_edge * s_i * s_j.
double true_energy(const LatticeHamiltonian& H, const SpinConfig& s);

struct GroundState {
  SpinConfig config;
  double energy = 0.0;
};

/// Exact global minimizer by Gray-code enumeration of 2^(L^2 - 1)
/// configurations (site (0,0) fixed to +1 by the global flip symmetry).
/// Ties break toward the smallest enumeration bit pattern. Requires L^2 <= 26.
GroundState ground_state_exhaustive(const LatticeHamiltonian& H);

/// h_i = sum_j J_ij y_j + h0 * y_i  (h0 = 0 gives the true local field;
/// 2 y_i h_i is then the exact cost of flipping spin i).
Eigen::ArrayXXd local_field(const LatticeHamiltonian& H, const SpinConfig& y, double h0);

/// Surrogate energy around the data: E(yhat, y) = -sum_i h_i(y) * yhat_i.
/// Linear in yhat; y is its unique minimizer over configurations when h0 > 4.
double local_energy(const SpinConfig& y_hat, const SpinConfig& y, const LatticeHamiltonian& H,
                    double h0);

enum class SpinLossKind { cross_entropy, margin, local_energy, true_energy };

/// Constants feeding the spin loss graphs, one row per batch sample.
/// Logits z are (B, L^2), sites flattened row-major.
struct SpinLossInputs {
  int L = 0;
  Matrix targets;             // (B, L^2) data spins (+-1); unused by true_energy
  Matrix fields;              // (B, L^2) local fields h(y); local_energy only
  Matrix couplings;           // (B, n_edges); true_energy only
  std::vector<int> edge_from; // lattice_edges order
  std::vector<int> edge_to;

  static SpinLossInputs for_sample(const LatticeHamiltonian& H, const SpinConfig& y, double h0,
                                   SpinLossKind kind);
};

/// Records the chosen loss on the tape and returns the scalar loss node
/// (batch mean of per-sample losses). The free-energy losses are site-summed
/// per sample; cross-entropy and margin are site-averaged.
ad::Var spin_loss_graph(ad::Tape& tape, ad::Var z, SpinLossKind kind, const SpinLossInputs& in,
                        double T);

/// Free energy of the factorized distribution m = tanh(z) in the landscape of
/// the local fields: (1/T) * (-sum_i h_i(y) m_i) - sum_i S_b(m_i), with the
/// binary entropy S_b and the constant log Z dropped. Gradient via the tape.
loss::LossReport local_energy_loss(const SpinLogits& z, const SpinConfig& y,
                                   const LatticeHamiltonian& H, double h0, double T);

/// Mean over sites of softplus(-2 y_i z_i)  (p(+1) = sigma(2 z)).
loss::LossReport cross_entropy_loss(const SpinLogits& z, const SpinConfig& y);

/// Mean over sites of max(0, 1 - y_i z_i).
loss::LossReport margin_loss(const SpinLogits& z, const SpinConfig& y);

/// Mean-field expected true energy minus entropy; uses no data:
/// (1/T) * (-sum_edges J m_i m_j) - sum_i S_b(m_i).
loss::LossReport true_energy_loss(const SpinLogits& z, const LatticeHamiltonian& H, double T);

/// Energy and entropy pieces of the free-energy losses, before the 1/T
/// weighting: loss = energy_term / T - entropy_term.
struct FreeEnergyParts {
  double energy_term = 0.0;
  double entropy_term = 0.0;
};
FreeEnergyParts local_energy_loss_parts(const SpinLogits& z, const SpinConfig& y,
                                        const LatticeHamiltonian& H, double h0);
FreeEnergyParts true_energy_loss_parts(const SpinLogits& z, const LatticeHamiltonian& H);

/// sign(z) with zeros resolving to +1.
SpinConfig predict_config(const SpinLogits& z);

}  // namespace elosslab::spin
