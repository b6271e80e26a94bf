#include "elosslab/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "elosslab/rng.hpp"

namespace elosslab::nn {

void MlpConfig::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1)
    throw std::invalid_argument("MlpConfig: all dims must be >= 1");
  if (n_hidden_layers < 0) throw std::invalid_argument("MlpConfig: n_hidden_layers must be >= 0");
}

namespace {

std::vector<std::pair<int, int>> layer_dims(const MlpConfig& cfg) {
  std::vector<std::pair<int, int>> dims;
  int in = cfg.input_dim;
  for (int l = 0; l < cfg.n_hidden_layers; ++l) {
    dims.emplace_back(in, cfg.hidden_dim);
    in = cfg.hidden_dim;
  }
  dims.emplace_back(in, cfg.output_dim);
  return dims;
}

Matrix activate(const MlpConfig& cfg, const Matrix& x) {
  if (cfg.activation == MlpConfig::Activation::relu) return x.cwiseMax(0.0);
  return x.unaryExpr([](double v) {
    const double s = (v >= 0.0) ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    return v * s;
  });
}

}  // namespace

Params init_params(const MlpConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  rng::Engine eng(seed);
  Params params;
  for (const auto& [fan_in, fan_out] : layer_dims(cfg)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = eng.uniform(-bound, bound);
    Matrix b(1, fan_out);
    for (Eigen::Index j = 0; j < b.cols(); ++j) b(0, j) = eng.uniform(-bound, bound);
    params.push_back(std::move(w));
    params.push_back(std::move(b));
  }
  return params;
}

Matrix mlp_apply(const MlpConfig& cfg, const Params& params, const Matrix& input) {
  cfg.validate();
  if (static_cast<int>(params.size()) != cfg.n_param_tensors())
    throw std::invalid_argument("mlp_apply: parameter count mismatch");
  if (input.cols() != cfg.input_dim) throw std::invalid_argument("mlp_apply: input dim mismatch");
  Matrix h = input;
  const int n_layers = cfg.n_hidden_layers + 1;
  for (int l = 0; l < n_layers; ++l) {
    h = h * params[static_cast<std::size_t>(2 * l)];
    h.rowwise() += params[static_cast<std::size_t>(2 * l + 1)].row(0);
    if (l + 1 < n_layers) h = activate(cfg, h);
  }
  return h;
}

std::vector<ad::Var> param_leaves(ad::Tape& tape, const Params& params) {
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(ad::wrap(tape, tape.leaf(p)));
  return vars;
}

ad::Var mlp_forward(ad::Tape& tape, const MlpConfig& cfg, const std::vector<ad::Var>& param_vars,
                    ad::Var input) {
  cfg.validate();
  if (static_cast<int>(param_vars.size()) != cfg.n_param_tensors())
    throw std::invalid_argument("mlp_forward: parameter count mismatch");
  if (input.value().cols() != cfg.input_dim)
    throw std::invalid_argument("mlp_forward: input dim mismatch");
  int h = input.id;
  const int n_layers = cfg.n_hidden_layers + 1;
  for (int l = 0; l < n_layers; ++l) {
    h = tape.matmul(h, param_vars[static_cast<std::size_t>(2 * l)].id);
    h = tape.add_rowvec(h, param_vars[static_cast<std::size_t>(2 * l + 1)].id);
    if (l + 1 < n_layers)
      h = (cfg.activation == MlpConfig::Activation::relu) ? tape.relu(h) : tape.silu(h);
  }
  return ad::wrap(tape, h);
}

AdamState make_adam(const Params& params, double lr, double beta1, double beta2, double eps) {
  if (!(lr > 0.0)) throw std::invalid_argument("make_adam: lr must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("make_adam: betas must lie in [0, 1)");
  AdamState st;
  st.lr = lr;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.eps = eps;
  for (const auto& p : params) {
    st.m.push_back(Matrix::Zero(p.rows(), p.cols()));
    st.v.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return st;
}

void adam_step(AdamState& state, Params& params, const std::vector<Matrix>& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i].cwiseProduct(grads[i]);
    const Matrix mhat = state.m[i] / bc1;
    const Matrix vhat = state.v[i] / bc2;
    params[i].array() -= state.lr * mhat.array() / (vhat.array().sqrt() + state.eps);
  }
}

}  // namespace elosslab::nn
