#include "elosslab/spin_task.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "elosslab/binio.hpp"
#include "elosslab/csv.hpp"
#include "elosslab/parallel.hpp"
#include "elosslab/svg.hpp"

namespace elosslab::tasks {

namespace {

constexpr char kSpinMagic[8] = {'E', 'L', 'S', 'P', 'I', 'N', 'D', 'S'};
constexpr std::uint32_t kSpinVersion = 1;

enum Stream : std::uint64_t {
  kTrainData = 11,
  kTestData = 12,
  kParamInit = 13,
  kShuffleBase = 2000,
};

spin::SpinLossKind loss_kind(const std::string& name) {
  if (name == "cross-entropy") return spin::SpinLossKind::cross_entropy;
  if (name == "margin") return spin::SpinLossKind::margin;
  if (name == "local-energy") return spin::SpinLossKind::local_energy;
  if (name == "true-energy") return spin::SpinLossKind::true_energy;
  throw std::invalid_argument("unknown spin loss '" + name + "'");
}

Eigen::RowVectorXd flatten_spins(const spin::SpinConfig& s) {
  Eigen::RowVectorXd row(s.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < s.rows(); ++r)
    for (Eigen::Index c = 0; c < s.cols(); ++c) row(k++) = s(r, c);
  return row;
}

spin::SpinLogits logits_grid(const Eigen::Ref<const Eigen::RowVectorXd>& row, int L) {
  spin::SpinLogits z(L, L);
  Eigen::Index k = 0;
  for (int r = 0; r < L; ++r)
    for (int c = 0; c < L; ++c) z(r, c) = row(k++);
  return z;
}

/// Dataset tensors consumed by the trainer, one row per sample.
struct SpinTensors {
  geom::Matrix inputs;     // (size, 2L(L-1)) flattened couplings
  geom::Matrix targets;    // (size, L^2) spins
  geom::Matrix fields;     // (size, L^2) local fields (h0 applied)
  geom::Matrix couplings;  // same as inputs; aliased for the loss graph
};

SpinTensors make_tensors(const SpinDataset& ds, double h0) {
  const auto size = static_cast<Eigen::Index>(ds.samples.size());
  const int L = ds.L;
  SpinTensors t;
  t.inputs.resize(size, 2 * L * (L - 1));
  t.targets.resize(size, L * L);
  t.fields.resize(size, L * L);
  for (Eigen::Index i = 0; i < size; ++i) {
    const SpinSample& s = ds.samples[static_cast<std::size_t>(i)];
    t.inputs.row(i) = spin::flatten_couplings(s.hamiltonian);
    t.targets.row(i) = flatten_spins(s.ground);
    Eigen::Index k = 0;
    const Eigen::ArrayXXd h = spin::local_field(s.hamiltonian, s.ground, h0);
    for (int r = 0; r < L; ++r)
      for (int c = 0; c < L; ++c) t.fields(i, k++) = h(r, c);
  }
  t.couplings = t.inputs;
  return t;
}

}  // namespace

SpinDataset gen_spin_dataset(int L, int size, std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("gen_spin_dataset: size must be >= 1");
  if (static_cast<long long>(L) * L > 26)
    throw std::invalid_argument("gen_spin_dataset: lattice too large for the exhaustive oracle");
  SpinDataset ds;
  ds.seed = seed;
  ds.L = L;
  ds.samples.resize(static_cast<std::size_t>(size));
  parallel_for(0, size, [&](int i) {
    SpinSample& s = ds.samples[static_cast<std::size_t>(i)];
    s.hamiltonian = spin::sample_hamiltonian(L, rng::derive_seed(seed, static_cast<std::uint64_t>(i)));
    const spin::GroundState gs = spin::ground_state_exhaustive(s.hamiltonian);
    s.ground = gs.config;
    s.ground_energy = gs.energy;
  });
  return ds;
}

void write_spin_dataset(const SpinDataset& ds, const std::string& path) {
  io::BinWriter w(path);
  w.magic(kSpinMagic);
  w.u32(kSpinVersion);
  w.u64(ds.seed);
  w.u64(ds.samples.size());
  w.u64(static_cast<std::uint64_t>(ds.L));
  for (const auto& s : ds.samples) {
    w.matrix(s.hamiltonian.J_horizontal);
    w.matrix(s.hamiltonian.J_vertical);
    w.matrix(s.ground.cast<double>().matrix());
    w.f64(s.ground_energy);
  }
}

SpinDataset read_spin_dataset(const std::string& path) {
  io::BinReader r(path);
  r.expect_magic(kSpinMagic);
  if (r.u32() != kSpinVersion) throw std::runtime_error("read_spin_dataset: bad version");
  SpinDataset ds;
  ds.seed = r.u64();
  const std::uint64_t count = r.u64();
  ds.L = static_cast<int>(r.u64());
  ds.samples.resize(count);
  for (auto& s : ds.samples) {
    s.hamiltonian.L = ds.L;
    s.hamiltonian.J_horizontal = r.matrix();
    s.hamiltonian.J_vertical = r.matrix();
    s.ground = r.matrix().cast<int>().array();
    s.ground_energy = r.f64();
    s.hamiltonian.validate();
  }
  return ds;
}

SpinSplitMetrics eval_spin_model(const nn::MlpConfig& mlp, const nn::Params& params,
                                 const SpinDataset& ds) {
  const int L = ds.L;
  geom::Matrix inputs(static_cast<Eigen::Index>(ds.samples.size()), 2 * L * (L - 1));
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    inputs.row(static_cast<Eigen::Index>(i)) = spin::flatten_couplings(ds.samples[i].hamiltonian);
  const geom::Matrix out = nn::mlp_apply(mlp, params, inputs);

  SpinSplitMetrics m;
  const double n = static_cast<double>(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const SpinSample& s = ds.samples[i];
    const spin::SpinConfig pred =
        spin::predict_config(logits_grid(out.row(static_cast<Eigen::Index>(i)), L));
    m.mean_pred_energy += spin::true_energy(s.hamiltonian, pred) / n;
    m.mean_ground_energy += s.ground_energy / n;
    // Energies are flip-invariant; accuracy scores the better of the two
    // symmetry-equivalent readings of the prediction.
    const int match = (pred == s.ground).count();
    const int flipped = L * L - match;
    m.accuracy_per_site += static_cast<double>(std::max(match, flipped)) / (n * L * L);
  }
  return m;
}

SpinTrainResult train_spin(const TrainConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  if (cfg.task != TrainConfig::Task::spins)
    throw std::invalid_argument("train_spin: config is not a spin config");
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  const SpinDataset train = gen_spin_dataset(cfg.L, cfg.train_size, rng::derive_seed(cfg.seed, kTrainData));
  const SpinDataset test = gen_spin_dataset(cfg.L, cfg.test_size, rng::derive_seed(cfg.seed, kTestData));
  const SpinTensors tensors = make_tensors(train, cfg.h0);
  const spin::SpinLossKind kind = loss_kind(cfg.loss);

  const int L = cfg.L;
  nn::MlpConfig mlp;
  mlp.input_dim = 2 * L * (L - 1);
  mlp.hidden_dim = cfg.hidden_dim;
  mlp.output_dim = L * L;
  mlp.n_hidden_layers = cfg.n_hidden_layers;
  mlp.activation = (cfg.activation == "relu") ? nn::MlpConfig::Activation::relu
                                              : nn::MlpConfig::Activation::silu;
  nn::Params params = nn::init_params(mlp, rng::derive_seed(cfg.seed, kParamInit));
  nn::AdamState adam = nn::make_adam(params, cfg.lr);

  spin::SpinLossInputs batch_inputs;
  batch_inputs.L = L;
  spin::lattice_edges(L, batch_inputs.edge_from, batch_inputs.edge_to);

  const std::string csv_path = out_dir + "/metrics.csv";
  io::CsvWriter csv(csv_path, "epoch,split,mean_pred_energy,mean_ground_energy,accuracy_per_site");
  std::vector<double> epoch_axis, test_energy_curve;

  std::vector<int> order(static_cast<std::size_t>(cfg.train_size));
  std::iota(order.begin(), order.end(), 0);
  SpinSplitMetrics last_test{};

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng::Engine shuffle_eng(rng::derive_seed(cfg.seed, kShuffleBase + static_cast<std::uint64_t>(epoch)));
    shuffle_eng.shuffle(order);

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto batch = static_cast<Eigen::Index>(stop - start);

      geom::Matrix x(batch, mlp.input_dim);
      batch_inputs.targets.resize(batch, L * L);
      batch_inputs.fields.resize(batch, L * L);
      batch_inputs.couplings.resize(batch, mlp.input_dim);
      for (Eigen::Index b = 0; b < batch; ++b) {
        const int idx = order[start + static_cast<std::size_t>(b)];
        x.row(b) = tensors.inputs.row(idx);
        batch_inputs.targets.row(b) = tensors.targets.row(idx);
        batch_inputs.fields.row(b) = tensors.fields.row(idx);
        batch_inputs.couplings.row(b) = tensors.couplings.row(idx);
      }

      ad::Tape tape;
      const std::vector<ad::Var> pvars = nn::param_leaves(tape, params);
      const ad::Var z = nn::mlp_forward(tape, mlp, pvars, ad::wrap(tape, tape.constant(x)));
      const ad::Var total = spin::spin_loss_graph(tape, z, kind, batch_inputs, cfg.T);
      tape.backward(total.id);

      std::vector<geom::Matrix> grads;
      grads.reserve(params.size());
      for (const auto& pv : pvars) grads.push_back(pv.grad());
      nn::adam_step(adam, params, grads);
    }

    const SpinSplitMetrics train_m = eval_spin_model(mlp, params, train);
    const SpinSplitMetrics test_m = eval_spin_model(mlp, params, test);
    last_test = test_m;
    csv.row({io::fmt_num(epoch), "train", io::fmt_num(train_m.mean_pred_energy),
             io::fmt_num(train_m.mean_ground_energy), io::fmt_num(train_m.accuracy_per_site)});
    csv.row({io::fmt_num(epoch), "test", io::fmt_num(test_m.mean_pred_energy),
             io::fmt_num(test_m.mean_ground_energy), io::fmt_num(test_m.accuracy_per_site)});
    epoch_axis.push_back(epoch);
    test_energy_curve.push_back(test_m.mean_pred_energy);
  }

  SpinTrainResult res;
  res.mlp = mlp;
  res.params = params;
  res.final_test = last_test;
  res.metrics_csv = csv_path;
  res.checkpoint_path = out_dir + "/checkpoint.bin";
  io::write_checkpoint(res.checkpoint_path, mlp, params, cfg.seed);
  io::write_svg_lines(out_dir + "/test_energy.svg", "spin test energy (" + cfg.loss + ")", "epoch",
                      "mean predicted energy", {{"test", epoch_axis, test_energy_curve}});

  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  io::Manifest manifest = cfg.to_manifest();
  manifest.set("meta.version", "elosslab 0.1.0");
  manifest.set("meta.command", "spins train");
  manifest.set_f64("meta.wall_time_s", res.wall_time_s);
  manifest.set_f64("meta.metric.final_test_mean_pred_energy", last_test.mean_pred_energy);
  manifest.set_f64("meta.metric.final_test_mean_ground_energy", last_test.mean_ground_energy);
  manifest.set_f64("meta.metric.final_test_accuracy_per_site", last_test.accuracy_per_site);
  res.manifest_path = out_dir + "/run_manifest.txt";
  manifest.write(res.manifest_path);
  return res;
}

}  // namespace elosslab::tasks
