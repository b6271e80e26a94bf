#include "elosslab/shapes.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "elosslab/binio.hpp"
#include "elosslab/csv.hpp"
#include "elosslab/parallel.hpp"
#include "elosslab/rigidity.hpp"
#include "elosslab/svg.hpp"

namespace elosslab::tasks {

namespace {

constexpr char kShapeMagic[8] = {'E', 'L', 'S', 'H', 'A', 'P', 'E', 'S'};
constexpr std::uint32_t kShapeVersion = 1;
constexpr double kRadiusLo = 0.3;
constexpr double kRadiusHi = 5.0;
constexpr double kQualityClamp = 1e-12;

// Seed streams within a run.
enum Stream : std::uint64_t {
  kTrainData = 1,
  kTestData = 2,
  kParamInit = 3,
  kEdgePool = 4,
  kEdgeDraw = 5,
  kShuffleBase = 1000,
};

double population_std(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().mean());
}

Eigen::RowVectorXd flatten_cloud(const Matrix& cloud) {
  Eigen::RowVectorXd row(cloud.size());
  for (Eigen::Index k = 0; k < cloud.rows(); ++k) {
    row(2 * k) = cloud(k, 0);
    row(2 * k + 1) = cloud(k, 1);
  }
  return row;
}

/// Per-sample loss dispatch; the sparse variant draws one edge set from the
/// pool per evaluation.
struct ShapeLossEval {
  const TrainConfig& cfg;
  loss::CoefficientScheme scheme;
  std::vector<rigidity::EdgeSet> pool;
  rng::Engine edge_rng;

  ShapeLossEval(const TrainConfig& cfg_)
      : cfg(cfg_), scheme(cfg_.scheme()), edge_rng(rng::derive_seed(cfg_.seed, kEdgeDraw)) {
    if (cfg.loss == "sparse-energy") {
      // K_N is forced when 2d >= N-1; the pool is degenerate there but the
      // draw path is identical.
      pool = rigidity::edge_pool(cfg.n_vertices, 2, 100, rng::derive_seed(cfg.seed, kEdgePool));
    }
  }

  loss::LossReport operator()(const Matrix& pred, const Matrix& target) {
    if (cfg.loss == "mse") return loss::mse_loss(pred, target);
    if (cfg.loss == "kabsch") return loss::kabsch_mse_loss(pred, target);
    if (cfg.loss == "energy") return loss::energy_loss(pred, target, scheme);
    const auto idx = static_cast<std::size_t>(edge_rng.uniform_below(pool.size()));
    return loss::sparse_energy_loss(pred, target, scheme, pool[idx]);
  }
};

Matrix dataset_inputs(const ShapeDataset& ds) {
  Matrix x(static_cast<Eigen::Index>(ds.samples.size()), 1);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = ds.samples[i].radius;
  return x;
}

ShapeSplitMetrics eval_split(const nn::MlpConfig& mlp, const nn::Params& params,
                             const ShapeDataset& ds, ShapeLossEval& loss_eval) {
  const Matrix out = nn::mlp_apply(mlp, params, dataset_inputs(ds));
  ShapeSplitMetrics m;
  const auto n = static_cast<double>(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Matrix cloud = prediction_to_cloud(out.row(static_cast<Eigen::Index>(i)), ds.n_vertices);
    const QualityReport q = shape_quality(cloud);
    m.mean_quality += q.value / n;
    m.mean_sigma_dangle += q.sigma_dangle / n;
    m.mean_sigma_radius += q.sigma_radius / n;
    m.loss_value += loss_eval(cloud, ds.samples[i].target).value / n;
  }
  return m;
}

}  // namespace

ShapeDataset gen_shape_dataset(int n_vertices, double theta_aug, int size, std::uint64_t seed) {
  if (n_vertices < 3) throw std::invalid_argument("gen_shape_dataset: n_vertices must be >= 3");
  if (theta_aug < 0.0 || theta_aug > M_PI)
    throw std::invalid_argument("gen_shape_dataset: theta_aug must lie in [0, pi]");
  if (size < 1) throw std::invalid_argument("gen_shape_dataset: size must be >= 1");

  ShapeDataset ds;
  ds.seed = seed;
  ds.n_vertices = n_vertices;
  ds.samples.resize(static_cast<std::size_t>(size));
  parallel_for(0, size, [&](int i) {
    rng::Engine eng(rng::derive_seed(seed, static_cast<std::uint64_t>(i)));
    ShapeSample& s = ds.samples[static_cast<std::size_t>(i)];
    s.radius = eng.uniform(kRadiusLo, kRadiusHi);
    s.rotation = (theta_aug == 0.0) ? 0.0 : eng.uniform(-theta_aug, theta_aug);
    s.target = Matrix(n_vertices, 2);
    for (int k = 0; k < n_vertices; ++k) {
      const double angle = 2.0 * M_PI * k / n_vertices + s.rotation;
      s.target(k, 0) = s.radius * std::cos(angle);
      s.target(k, 1) = s.radius * std::sin(angle);
    }
  });
  return ds;
}

void write_shape_dataset(const ShapeDataset& ds, const std::string& path) {
  io::BinWriter w(path);
  w.magic(kShapeMagic);
  w.u32(kShapeVersion);
  w.u64(ds.seed);
  w.u64(ds.samples.size());
  w.u64(static_cast<std::uint64_t>(ds.n_vertices));
  for (const auto& s : ds.samples) {
    w.f64(s.radius);
    w.f64(s.rotation);
    w.matrix(s.target);
  }
}

ShapeDataset read_shape_dataset(const std::string& path) {
  io::BinReader r(path);
  r.expect_magic(kShapeMagic);
  if (r.u32() != kShapeVersion) throw std::runtime_error("read_shape_dataset: bad version");
  ShapeDataset ds;
  ds.seed = r.u64();
  const std::uint64_t count = r.u64();
  ds.n_vertices = static_cast<int>(r.u64());
  ds.samples.resize(count);
  for (auto& s : ds.samples) {
    s.radius = r.f64();
    s.rotation = r.f64();
    s.target = r.matrix();
  }
  return ds;
}

QualityReport shape_quality(const Eigen::Ref<const Matrix>& points) {
  if (points.rows() < 3 || points.cols() != 2)
    throw std::invalid_argument("shape_quality: need at least 3 points in 2D");
  const Eigen::Index n = points.rows();
  const Eigen::RowVector2d centroid = points.colwise().mean();
  const Matrix centered = points.rowwise() - centroid;

  QualityReport rep;
  Eigen::VectorXd radii = centered.rowwise().norm();
  rep.mean_radius = radii.mean();
  if (rep.mean_radius < 1e-15) {
    rep.degenerate = true;
    rep.value = 0.0;  // -ln(1) fallback
    return rep;
  }

  std::vector<double> angles(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    angles[static_cast<std::size_t>(i)] = std::atan2(centered(i, 1), centered(i, 0));
  std::sort(angles.begin(), angles.end());
  Eigen::VectorXd gaps(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    gaps(i) = angles[static_cast<std::size_t>(i + 1)] - angles[static_cast<std::size_t>(i)];
  gaps(n - 1) = angles.front() + 2.0 * M_PI - angles.back();

  rep.sigma_dangle = population_std(gaps);
  rep.sigma_radius = population_std(radii);
  const double arg = rep.sigma_dangle / (2.0 * M_PI) + rep.sigma_radius / rep.mean_radius;
  rep.value = -std::log(std::max(arg, kQualityClamp));
  return rep;
}

Matrix prediction_to_cloud(const Eigen::Ref<const Eigen::RowVectorXd>& row, int n_vertices) {
  if (row.size() != 2 * n_vertices)
    throw std::invalid_argument("prediction_to_cloud: row length mismatch");
  Matrix cloud(n_vertices, 2);
  for (int k = 0; k < n_vertices; ++k) {
    cloud(k, 0) = row(2 * k);
    cloud(k, 1) = row(2 * k + 1);
  }
  return cloud;
}

ShapeSplitMetrics eval_shape_model(const nn::MlpConfig& mlp, const nn::Params& params,
                                   const ShapeDataset& ds, const TrainConfig& cfg) {
  ShapeLossEval loss_eval(cfg);
  return eval_split(mlp, params, ds, loss_eval);
}

ShapeTrainResult train_shape(const TrainConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  if (cfg.task != TrainConfig::Task::shapes)
    throw std::invalid_argument("train_shape: config is not a shape config");
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  const ShapeDataset train =
      gen_shape_dataset(cfg.n_vertices, cfg.theta_aug, cfg.train_size, rng::derive_seed(cfg.seed, kTrainData));
  const ShapeDataset test =
      gen_shape_dataset(cfg.n_vertices, cfg.theta_aug, cfg.test_size, rng::derive_seed(cfg.seed, kTestData));

  // Fixed train-split eval subset so per-epoch metrics stay O(test_size).
  ShapeDataset train_eval;
  train_eval.seed = train.seed;
  train_eval.n_vertices = train.n_vertices;
  const std::size_t eval_count = std::min(train.samples.size(), test.samples.size());
  train_eval.samples.assign(train.samples.begin(),
                            train.samples.begin() + static_cast<std::ptrdiff_t>(eval_count));

  nn::MlpConfig mlp;
  mlp.input_dim = 1;
  mlp.hidden_dim = cfg.hidden_dim;
  mlp.output_dim = 2 * cfg.n_vertices;
  mlp.n_hidden_layers = cfg.n_hidden_layers;
  mlp.activation = (cfg.activation == "relu") ? nn::MlpConfig::Activation::relu
                                              : nn::MlpConfig::Activation::silu;
  nn::Params params = nn::init_params(mlp, rng::derive_seed(cfg.seed, kParamInit));
  nn::AdamState adam = nn::make_adam(params, cfg.lr);
  ShapeLossEval loss_eval(cfg);

  const std::string csv_path = out_dir + "/metrics.csv";
  io::CsvWriter csv(csv_path, "epoch,split,mean_quality,sigma_dangle,sigma_radius,loss_value");
  std::vector<double> epoch_axis, train_quality, test_quality;

  std::vector<int> order(static_cast<std::size_t>(cfg.train_size));
  std::iota(order.begin(), order.end(), 0);
  ShapeSplitMetrics last_test{};

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng::Engine shuffle_eng(rng::derive_seed(cfg.seed, kShuffleBase + static_cast<std::uint64_t>(epoch)));
    shuffle_eng.shuffle(order);

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto batch = static_cast<Eigen::Index>(stop - start);

      Matrix x(batch, 1);
      for (Eigen::Index b = 0; b < batch; ++b)
        x(b, 0) = train.samples[static_cast<std::size_t>(order[start + static_cast<std::size_t>(b)])].radius;

      ad::Tape tape;
      const std::vector<ad::Var> pvars = nn::param_leaves(tape, params);
      const ad::Var out = nn::mlp_forward(tape, mlp, pvars, ad::wrap(tape, tape.constant(x)));

      Matrix seed_grad(batch, 2 * cfg.n_vertices);
      for (Eigen::Index b = 0; b < batch; ++b) {
        const auto& sample = train.samples[static_cast<std::size_t>(order[start + static_cast<std::size_t>(b)])];
        const Matrix pred = prediction_to_cloud(out.value().row(b), cfg.n_vertices);
        const loss::LossReport rep = loss_eval(pred, sample.target);
        seed_grad.row(b) = flatten_cloud(rep.grad) / static_cast<double>(batch);
      }
      tape.backward_seed(out.id, seed_grad);

      std::vector<Matrix> grads;
      grads.reserve(params.size());
      for (const auto& pv : pvars) grads.push_back(pv.grad());
      nn::adam_step(adam, params, grads);
    }

    const ShapeSplitMetrics train_m = eval_split(mlp, params, train_eval, loss_eval);
    const ShapeSplitMetrics test_m = eval_split(mlp, params, test, loss_eval);
    last_test = test_m;
    csv.row({io::fmt_num(epoch), "train", io::fmt_num(train_m.mean_quality),
             io::fmt_num(train_m.mean_sigma_dangle), io::fmt_num(train_m.mean_sigma_radius),
             io::fmt_num(train_m.loss_value)});
    csv.row({io::fmt_num(epoch), "test", io::fmt_num(test_m.mean_quality),
             io::fmt_num(test_m.mean_sigma_dangle), io::fmt_num(test_m.mean_sigma_radius),
             io::fmt_num(test_m.loss_value)});
    epoch_axis.push_back(epoch);
    train_quality.push_back(train_m.mean_quality);
    test_quality.push_back(test_m.mean_quality);
  }

  ShapeTrainResult res;
  res.mlp = mlp;
  res.params = params;
  res.final_test = last_test;
  res.metrics_csv = csv_path;
  res.checkpoint_path = out_dir + "/checkpoint.bin";
  io::write_checkpoint(res.checkpoint_path, mlp, params, cfg.seed);

  io::write_svg_lines(out_dir + "/quality.svg", "shape quality (" + cfg.loss + ")", "epoch",
                      "mean quality",
                      {{"train", epoch_axis, train_quality}, {"test", epoch_axis, test_quality}});

  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  io::Manifest manifest = cfg.to_manifest();
  manifest.set("meta.version", "elosslab 0.1.0");
  manifest.set("meta.command", "shapes train");
  manifest.set_f64("meta.wall_time_s", res.wall_time_s);
  manifest.set_f64("meta.metric.final_test_mean_quality", last_test.mean_quality);
  manifest.set_f64("meta.metric.final_test_loss", last_test.loss_value);
  res.manifest_path = out_dir + "/run_manifest.txt";
  manifest.write(res.manifest_path);
  return res;
}

}  // namespace elosslab::tasks
