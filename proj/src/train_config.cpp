#include "elosslab/train_config.hpp"

#include <stdexcept>

namespace elosslab::tasks {

TrainConfig TrainConfig::shape_defaults() {
  TrainConfig cfg;
  cfg.task = Task::shapes;
  cfg.loss = "energy";
  cfg.coeff = "exponential";
  cfg.coeff_param = 1.0;
  cfg.lr = 1e-3;
  cfg.epochs = 50;
  cfg.batch_size = 128;
  cfg.train_size = 10000;
  cfg.test_size = 1000;
  cfg.n_vertices = 5;
  cfg.theta_aug = M_PI;
  cfg.hidden_dim = 64;
  cfg.n_hidden_layers = 2;
  return cfg;
}

TrainConfig TrainConfig::spin_defaults() {
  TrainConfig cfg;
  cfg.task = Task::spins;
  cfg.loss = "local-energy";
  cfg.lr = 1e-3;
  cfg.epochs = 80;
  cfg.batch_size = 256;
  cfg.train_size = 2000;
  cfg.test_size = 500;
  cfg.L = 4;
  cfg.h0 = 4.01;
  cfg.T = 0.1;
  cfg.hidden_dim = 256;
  cfg.n_hidden_layers = 2;
  return cfg;
}

void TrainConfig::validate() const {
  const bool shape_loss =
      loss == "mse" || loss == "energy" || loss == "kabsch" || loss == "sparse-energy";
  const bool spin_loss = loss == "cross-entropy" || loss == "margin" || loss == "local-energy" ||
                         loss == "true-energy";
  if (task == Task::shapes && !shape_loss)
    throw std::invalid_argument("TrainConfig: loss '" + loss + "' is not a shape-task loss");
  if (task == Task::spins && !spin_loss)
    throw std::invalid_argument("TrainConfig: loss '" + loss + "' is not a spin-task loss");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (epochs < 1 || batch_size < 1 || train_size < 1 || test_size < 1)
    throw std::invalid_argument("TrainConfig: counts must be >= 1");
  if (task == Task::shapes) {
    if (n_vertices < 3) throw std::invalid_argument("TrainConfig: n_vertices must be >= 3");
    if (theta_aug < 0.0 || theta_aug > M_PI)
      throw std::invalid_argument("TrainConfig: theta_aug must lie in [0, pi]");
  } else {
    if (L < 2) throw std::invalid_argument("TrainConfig: L must be >= 2");
    if (static_cast<long long>(L) * L > 26)
      throw std::invalid_argument("TrainConfig: L^2 must be <= 26 for the exhaustive oracle");
    if (h0 < 0.0) throw std::invalid_argument("TrainConfig: h0 must be >= 0");
    if (!(T > 0.0)) throw std::invalid_argument("TrainConfig: T must be > 0");
  }
  if (hidden_dim < 1 || n_hidden_layers < 0)
    throw std::invalid_argument("TrainConfig: bad model dims");
  if (activation != "relu" && activation != "silu")
    throw std::invalid_argument("TrainConfig: activation must be relu or silu");
  scheme();  // validates coeff kind + parameter
}

loss::CoefficientScheme TrainConfig::scheme() const {
  if (coeff == "constant") return loss::CoefficientScheme::constant(coeff_param);
  if (coeff == "inverse") return loss::CoefficientScheme::inverse_distance(coeff_param);
  if (coeff == "inverse-squared") return loss::CoefficientScheme::inverse_squared(coeff_param);
  if (coeff == "exponential") return loss::CoefficientScheme::exponential_decay(coeff_param);
  throw std::invalid_argument("TrainConfig: unknown coefficient scheme '" + coeff + "'");
}

io::Manifest TrainConfig::to_manifest() const {
  io::Manifest m;
  m.set("task", task == Task::shapes ? "shapes" : "spins");
  m.set("loss", loss);
  m.set("coeff", coeff);
  m.set_f64("coeff_param", coeff_param);
  m.set_f64("lr", lr);
  m.set_i64("epochs", epochs);
  m.set_i64("batch_size", batch_size);
  m.set_i64("train_size", train_size);
  m.set_i64("test_size", test_size);
  m.set_i64("n_vertices", n_vertices);
  m.set_f64("theta_aug", theta_aug);
  m.set_i64("L", L);
  m.set_f64("h0", h0);
  m.set_f64("T", T);
  m.set_i64("hidden_dim", hidden_dim);
  m.set_i64("n_hidden_layers", n_hidden_layers);
  m.set("activation", activation);
  m.set_u64("seed", seed);
  return m;
}

void TrainConfig::apply_manifest(const io::Manifest& m) {
  if (const auto v = m.get("task")) task = (*v == "spins") ? Task::spins : Task::shapes;
  if (const auto v = m.get("loss")) loss = *v;
  if (const auto v = m.get("coeff")) coeff = *v;
  if (const auto v = m.get_f64("coeff_param")) coeff_param = *v;
  if (const auto v = m.get_f64("lr")) lr = *v;
  if (const auto v = m.get_i64("epochs")) epochs = static_cast<int>(*v);
  if (const auto v = m.get_i64("batch_size")) batch_size = static_cast<int>(*v);
  if (const auto v = m.get_i64("train_size")) train_size = static_cast<int>(*v);
  if (const auto v = m.get_i64("test_size")) test_size = static_cast<int>(*v);
  if (const auto v = m.get_i64("n_vertices")) n_vertices = static_cast<int>(*v);
  if (const auto v = m.get_f64("theta_aug")) theta_aug = *v;
  if (const auto v = m.get_i64("L")) L = static_cast<int>(*v);
  if (const auto v = m.get_f64("h0")) h0 = *v;
  if (const auto v = m.get_f64("T")) T = *v;
  if (const auto v = m.get_i64("hidden_dim")) hidden_dim = static_cast<int>(*v);
  if (const auto v = m.get_i64("n_hidden_layers")) n_hidden_layers = static_cast<int>(*v);
  if (const auto v = m.get("activation")) activation = *v;
  if (const auto v = m.get_u64("seed")) seed = *v;
}

}  // namespace elosslab::tasks
