#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elosslab/nn.hpp"
#include "elosslab/spin.hpp"
#include "elosslab/train_config.hpp"

namespace elosslab::tasks {

struct SpinSample {
  spin::LatticeHamiltonian hamiltonian;
  spin::SpinConfig ground;
  double ground_energy = 0.0;
};

struct SpinDataset {
  std::uint64_t seed = 0;
  int L = 0;
  std::vector<SpinSample> samples;
};

/// (Hamiltonian, exact ground state, ground energy) triples with i.i.d.
/// uniform couplings and the exhaustive solver as oracle. Deterministic
/// bytes per master seed; requires L^2 <= 26.
SpinDataset gen_spin_dataset(int L, int size, std::uint64_t seed);

void write_spin_dataset(const SpinDataset& ds, const std::string& path);
SpinDataset read_spin_dataset(const std::string& path);

struct SpinSplitMetrics {
  double mean_pred_energy = 0.0;
  double mean_ground_energy = 0.0;
  double accuracy_per_site = 0.0;  // best agreement over the global flip
};

struct SpinTrainResult {
  nn::MlpConfig mlp;
  nn::Params params;
  SpinSplitMetrics final_test;
  double wall_time_s = 0.0;
  std::string metrics_csv;
  std::string manifest_path;
  std::string checkpoint_path;
};

/// Trains the couplings -> logits MLP with the configured loss; the test
/// metric is the mean true energy of predicted configurations next to the
/// mean exact ground energy. Writes metrics.csv, checkpoint and manifest.
SpinTrainResult train_spin(const TrainConfig& cfg, const std::string& out_dir);

SpinSplitMetrics eval_spin_model(const nn::MlpConfig& mlp, const nn::Params& params,
                                 const SpinDataset& ds);

}  // namespace elosslab::tasks
