#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elosslab/autodiff.hpp"

namespace elosslab::nn {

using ad::Matrix;

struct MlpConfig {
  int input_dim = 1;
  int hidden_dim = 64;
  int output_dim = 1;
  int n_hidden_layers = 2;
  enum class Activation { relu, silu } activation = Activation::silu;

  void validate() const;
  int n_param_tensors() const { return 2 * (n_hidden_layers + 1); }
};

/// Flat parameter list [W1, b1, W2, b2, ...]; W is (fan_in, fan_out),
/// b is (1, fan_out).
using Params = std::vector<Matrix>;

/// Uniform fan-in scaled init: every entry U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
/// Deterministic per seed.
Params init_params(const MlpConfig& cfg, std::uint64_t seed);

/// Plain (untaped) forward pass; kept in lockstep with mlp_forward.
Matrix mlp_apply(const MlpConfig& cfg, const Params& params, const Matrix& input);

/// Registers each parameter as a tape leaf, in parameter order.
std::vector<ad::Var> param_leaves(ad::Tape& tape, const Params& params);

/// Affine-activation stack with an affine final layer, recorded on the tape.
ad::Var mlp_forward(ad::Tape& tape, const MlpConfig& cfg,
                    const std::vector<ad::Var>& param_vars, ad::Var input);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m;  // first moments, shaped like the parameters
  std::vector<Matrix> v;  // second moments
};

AdamState make_adam(const Params& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                    double eps = 1e-8);

/// One Adam update with bias correction. Zero gradients leave parameters
/// unchanged.
void adam_step(AdamState& state, Params& params, const std::vector<Matrix>& grads);

}  // namespace elosslab::nn
