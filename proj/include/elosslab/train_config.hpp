#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "elosslab/energy_loss.hpp"
#include "elosslab/manifest.hpp"

namespace elosslab::tasks {

/// Run configuration for the shape and spin experiments. Loss/task
/// compatibility is enforced by validate(); a config round-trips through the
/// flat key=value manifest format, which is how runs are replayed.
struct TrainConfig {
  enum class Task { shapes, spins };

  Task task = Task::shapes;
  std::string loss = "energy";      // shapes: mse|energy|kabsch|sparse-energy
                                    // spins:  cross-entropy|margin|local-energy|true-energy
  std::string coeff = "exponential";  // constant|inverse|inverse-squared|exponential
  double coeff_param = 1.0;           // k / floor / floor / lambda

  double lr = 1e-3;
  int epochs = 50;
  int batch_size = 128;
  int train_size = 10000;
  int test_size = 1000;

  // shapes
  int n_vertices = 5;
  double theta_aug = M_PI;

  // spins
  int L = 4;
  double h0 = 4.01;
  double T = 0.1;

  // model
  int hidden_dim = 64;
  int n_hidden_layers = 2;
  std::string activation = "silu";

  std::uint64_t seed = 0;

  static TrainConfig shape_defaults();
  static TrainConfig spin_defaults();

  void validate() const;
  loss::CoefficientScheme scheme() const;

  io::Manifest to_manifest() const;
  /// Reads config keys (meta.* entries are ignored), keeping current values
  /// for keys that are absent.
  void apply_manifest(const io::Manifest& m);
};

}  // namespace elosslab::tasks
