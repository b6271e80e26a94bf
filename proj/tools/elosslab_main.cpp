// elosslab command line: dataset generation, training, evaluation, rigidity
// sampling/checking, the score estimator experiment and the loss benchmark.
// Every generating or training run demands an explicit seed and writes a
// replayable run manifest next to its outputs.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "elosslab/bench.hpp"
#include "elosslab/binio.hpp"
#include "elosslab/csv.hpp"
#include "elosslab/manifest.hpp"
#include "elosslab/rigidity.hpp"
#include "elosslab/score_lab.hpp"
#include "elosslab/shapes.hpp"
#include "elosslab/spin_task.hpp"
#include "elosslab/svg.hpp"
#include "elosslab/train_config.hpp"

namespace {

using namespace elosslab;

constexpr const char* kVersion = "elosslab 0.1.0";

struct SeedOpt {
  std::uint64_t value = 0;
  bool set = false;
};

void add_seed_flag(CLI::App* cmd, SeedOpt& seed) {
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&seed](const std::uint64_t v) {
        seed.value = v;
        seed.set = true;
      },
      "master seed (required for generation/training)");
}

std::uint64_t require_seed(const SeedOpt& seed, const io::Manifest* config) {
  if (seed.set) return seed.value;
  if (config) {
    if (const auto v = config->get_u64("seed")) return *v;
  }
  throw CLI::ValidationError("--seed", "a reproducibility seed is required: pass --seed U64");
}

io::Manifest base_manifest(const std::string& command, std::uint64_t seed) {
  io::Manifest m;
  m.set("command", command);
  m.set_u64("seed", seed);
  m.set("meta.version", kVersion);
  return m;
}

void write_edge_set(std::ostream& out, const rigidity::EdgeSet& es) {
  out << "n " << es.n << "\n";
  for (const auto& [i, j] : es.edges) out << i << " " << j << "\n";
}

rigidity::EdgeSet read_edge_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge file " + path);
  rigidity::EdgeSet es;
  std::string tok;
  if (!(in >> tok) || tok != "n" || !(in >> es.n))
    throw std::runtime_error("edge file must start with 'n <count>'");
  int i, j;
  while (in >> i >> j) es.edges.emplace_back(i, j);
  es.validate();
  return es;
}

// ---------------------------------------------------------------- shapes ---

struct ShapeGenArgs {
  int n_vertices = 5;
  double theta_aug = M_PI;
  int size = 10000;
  SeedOpt seed;
  std::string out = "elosslab_out";
};

int run_shapes_gen(const ShapeGenArgs& a) {
  const std::uint64_t seed = require_seed(a.seed, nullptr);
  std::filesystem::create_directories(a.out);
  const auto t0 = std::chrono::steady_clock::now();
  const tasks::ShapeDataset ds = tasks::gen_shape_dataset(a.n_vertices, a.theta_aug, a.size, seed);
  const std::string path = a.out + "/shapes.bin";
  tasks::write_shape_dataset(ds, path);
  io::Manifest m = base_manifest("shapes gen", seed);
  m.set_i64("n_vertices", a.n_vertices);
  m.set_f64("theta_aug", a.theta_aug);
  m.set_i64("size", a.size);
  m.set("output", path);
  m.set_f64("meta.wall_time_s",
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  m.write(a.out + "/run_manifest.txt");
  std::cout << "wrote " << path << " (" << ds.samples.size() << " samples)\n";
  return 0;
}

struct TrainArgs {
  tasks::TrainConfig cfg;
  SeedOpt seed;
  std::string config_path;
  std::string out = "elosslab_out";
  std::string lr_grid;
};

void add_common_train_flags(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--config", a.config_path,
                  "key=value config file; replaces hyperparameter flags (a run manifest replays)");
  add_seed_flag(cmd, a.seed);
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--lr-grid", a.lr_grid, "comma-separated learning rates; best run is kept");
}

std::vector<double> parse_grid(const std::string& grid) {
  std::vector<double> out;
  std::stringstream ss(grid);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

int run_train(TrainArgs& a, tasks::TrainConfig::Task task) {
  if (!a.config_path.empty()) {
    const io::Manifest file = io::Manifest::read(a.config_path);
    a.cfg.apply_manifest(file);  // config file wins over hyperparameter flags
    if (!a.seed.set && file.get_u64("seed")) a.seed = {*file.get_u64("seed"), true};
  }
  a.cfg.task = task;
  a.cfg.seed = require_seed(a.seed, nullptr);
  a.cfg.validate();

  std::vector<double> lrs = a.lr_grid.empty() ? std::vector<double>{a.cfg.lr} : parse_grid(a.lr_grid);
  double best_metric = 0.0;
  std::string best_dir;
  bool first = true;
  for (const double lr : lrs) {
    tasks::TrainConfig cfg = a.cfg;
    cfg.lr = lr;
    const std::string dir = (lrs.size() == 1) ? a.out : a.out + "/lr_" + io::fmt_num(lr);
    double metric;
    if (task == tasks::TrainConfig::Task::shapes) {
      const tasks::ShapeTrainResult res = tasks::train_shape(cfg, dir);
      metric = res.final_test.mean_quality;  // higher is better
      std::cout << "loss=" << cfg.loss << " lr=" << lr
                << " final test mean quality=" << metric << "\n";
      if (first || metric > best_metric) {
        best_metric = metric;
        best_dir = dir;
        first = false;
      }
    } else {
      const tasks::SpinTrainResult res = tasks::train_spin(cfg, dir);
      metric = res.final_test.mean_pred_energy;  // lower is better
      std::cout << "loss=" << cfg.loss << " lr=" << lr
                << " final test mean energy=" << metric
                << " (ground " << res.final_test.mean_ground_energy << ")\n";
      if (first || metric < best_metric) {
        best_metric = metric;
        best_dir = dir;
        first = false;
      }
    }
  }
  if (lrs.size() > 1) {
    io::Manifest m = base_manifest("train lr-grid", a.cfg.seed);
    m.set("best_dir", best_dir);
    m.set_f64("best_metric", best_metric);
    m.write(a.out + "/grid_manifest.txt");
    std::cout << "best run: " << best_dir << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
};

int run_shapes_eval(const EvalArgs& a) {
  const io::Checkpoint ck = io::read_checkpoint(a.checkpoint);
  const tasks::ShapeDataset ds = tasks::read_shape_dataset(a.data);
  tasks::TrainConfig cfg = tasks::TrainConfig::shape_defaults();
  cfg.loss = "mse";  // quality metrics are loss-independent; loss column is informative only
  cfg.n_vertices = ds.n_vertices;
  cfg.seed = ck.seed;
  const tasks::ShapeSplitMetrics m = tasks::eval_shape_model(ck.cfg, ck.params, ds, cfg);
  std::cout << "samples=" << ds.samples.size() << " mean_quality=" << m.mean_quality
            << " sigma_dangle=" << m.mean_sigma_dangle << " sigma_radius=" << m.mean_sigma_radius
            << "\n";
  return 0;
}

int run_spins_eval(const EvalArgs& a) {
  const io::Checkpoint ck = io::read_checkpoint(a.checkpoint);
  const tasks::SpinDataset ds = tasks::read_spin_dataset(a.data);
  const tasks::SpinSplitMetrics m = tasks::eval_spin_model(ck.cfg, ck.params, ds);
  std::cout << "samples=" << ds.samples.size() << " mean_pred_energy=" << m.mean_pred_energy
            << " mean_ground_energy=" << m.mean_ground_energy
            << " accuracy_per_site=" << m.accuracy_per_site << "\n";
  return 0;
}

// ----------------------------------------------------------------- spins ---

struct SpinGenArgs {
  int L = 4;
  int size = 2000;
  SeedOpt seed;
  std::string out = "elosslab_out";
};

int run_spins_gen(const SpinGenArgs& a) {
  const std::uint64_t seed = require_seed(a.seed, nullptr);
  std::filesystem::create_directories(a.out);
  const auto t0 = std::chrono::steady_clock::now();
  const tasks::SpinDataset ds = tasks::gen_spin_dataset(a.L, a.size, seed);
  const std::string path = a.out + "/spins.bin";
  tasks::write_spin_dataset(ds, path);
  io::Manifest m = base_manifest("spins gen", seed);
  m.set_i64("L", a.L);
  m.set_i64("size", a.size);
  m.set("output", path);
  m.set_f64("meta.wall_time_s",
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  m.write(a.out + "/run_manifest.txt");
  std::cout << "wrote " << path << " (" << ds.samples.size() << " samples)\n";
  return 0;
}

// -------------------------------------------------------------- rigidity ---

struct RigiditySampleArgs {
  int n = 30;
  int d = 2;
  int k = -1;
  int pool_size = 100;
  SeedOpt seed;
  std::string out = "elosslab_out";
};

int run_rigidity_sample(const RigiditySampleArgs& a) {
  const std::uint64_t seed = require_seed(a.seed, nullptr);
  std::filesystem::create_directories(a.out);
  const std::vector<rigidity::EdgeSet> pool = rigidity::edge_pool(a.n, a.d, a.pool_size, seed, a.k);
  const std::string path = a.out + "/edge_pool.txt";
  std::ofstream out(path);
  out << "# elosslab edge pool: n=" << a.n << " d=" << a.d << " count=" << pool.size() << "\n";
  for (std::size_t g = 0; g < pool.size(); ++g) {
    out << "graph " << g << "\n";
    write_edge_set(out, pool[g]);
  }
  io::Manifest m = base_manifest("rigidity sample", seed);
  m.set_i64("n", a.n);
  m.set_i64("d", a.d);
  m.set_i64("pool_size", a.pool_size);
  m.set("output", path);
  m.write(a.out + "/run_manifest.txt");
  std::cout << "wrote " << pool.size() << " rigidity-verified edge sets to " << path << "\n";
  return 0;
}

struct RigidityCheckArgs {
  std::string edges_file;
  int n = 50;
  int k = -1;
  int d = 3;
  int count = 100;
  SeedOpt seed;
};

int run_rigidity_check(const RigidityCheckArgs& a) {
  const std::uint64_t seed = a.seed.set ? a.seed.value : 12345;
  if (!a.edges_file.empty()) {
    const rigidity::EdgeSet es = read_edge_set(a.edges_file);
    const bool rigid = rigidity::is_rigid(es, a.d, seed);
    const bool global = rigid && rigidity::is_globally_rigid(es, a.d, seed);
    std::cout << "n=" << es.n << " |E|=" << es.edges.size() << " d=" << a.d
              << " rigid=" << (rigid ? "yes" : "no")
              << " globally_rigid=" << (global ? "certified" : "not-certified") << "\n";
    return 0;
  }
  const int k = (a.k < 0) ? 2 * a.d : a.k;
  int rigid = 0, global = 0;
  for (int i = 0; i < a.count; ++i) {
    const auto gseed = rng::derive_seed(seed, static_cast<std::uint64_t>(i));
    const rigidity::EdgeSet es = rigidity::random_k_regular(a.n, k, gseed);
    if (rigidity::is_rigid(es, a.d, rng::derive_seed(gseed, 1))) ++rigid;
    if (rigidity::is_globally_rigid(es, a.d, rng::derive_seed(gseed, 2))) ++global;
  }
  std::cout << "n=" << a.n << " k=" << k << " d=" << a.d << " draws=" << a.count
            << " rigid_fraction=" << static_cast<double>(rigid) / a.count
            << " globally_rigid_fraction=" << static_cast<double>(global) / a.count << "\n";
  return 0;
}

// ------------------------------------------------------------- score lab ---

struct ScoreArgs {
  double sigma_t = 0.05;
  double alpha_t = 1.0;
  int mc_samples = 64;
  int trials = 64;
  int batches = 200;
  double r0 = 1.0;
  double s = 0.25;
  std::string density = "pair-distance";
  SeedOpt seed;
  std::string out = "elosslab_out";
};

int run_score_lab(const ScoreArgs& a) {
  const std::uint64_t seed = require_seed(a.seed, nullptr);
  std::filesystem::create_directories(a.out);
  const auto t0 = std::chrono::steady_clock::now();

  score::ToyDiffusionConfig cfg;
  cfg.sigma_t = a.sigma_t;
  cfg.alpha_t = a.alpha_t;
  cfg.mc_samples = a.mc_samples;
  cfg.trials = a.trials;
  cfg.seed = seed;
  const score::ToyDensity density = (a.density == "isotropic")
                                        ? score::ToyDensity::isotropic(a.s)
                                        : score::ToyDensity::pair_distance(a.r0, a.s);
  const score::Vector x_t = score::sample_xt(density, cfg);
  const score::Vector ref = score::quadrature_score(density, x_t, cfg);

  io::CsvWriter csv(a.out + "/score_lab.csv",
                    "trial,bias_dist,bias_mse,var_dist,var_mse,sigma_t,mc_samples");
  int var_ordered = 0;
  double pooled_bias_dist = 0.0, pooled_se = 0.0;
  for (int b = 0; b < a.batches; ++b) {
    score::ToyDiffusionConfig bcfg = cfg;
    bcfg.seed = rng::derive_seed(seed, 100 + static_cast<std::uint64_t>(b));
    const score::BiasVarianceReport rep = score::bias_variance_experiment(density, x_t, bcfg);
    csv.row({io::fmt_num(b), io::fmt_num(rep.bias_norm_dist), io::fmt_num(rep.bias_norm_mse),
             io::fmt_num(rep.var_trace_dist), io::fmt_num(rep.var_trace_mse),
             io::fmt_num(cfg.sigma_t), io::fmt_num(cfg.mc_samples)});
    if (rep.var_trace_dist <= rep.var_trace_mse) ++var_ordered;
    pooled_bias_dist += rep.bias_norm_dist;
    pooled_se += rep.se_mean_dist;
  }
  const double frac = static_cast<double>(var_ordered) / a.batches;

  io::Manifest m = base_manifest("score-lab run", seed);
  m.set_f64("sigma_t", a.sigma_t);
  m.set_f64("alpha_t", a.alpha_t);
  m.set_i64("mc_samples", a.mc_samples);
  m.set_i64("trials", a.trials);
  m.set_i64("batches", a.batches);
  m.set("density", a.density);
  m.set_f64("meta.metric.var_ordered_fraction", frac);
  m.set_f64("meta.metric.mean_bias_norm_dist", pooled_bias_dist / a.batches);
  m.set_f64("meta.metric.mean_se_dist", pooled_se / a.batches);
  m.set_f64("meta.metric.ref_eps_0", ref(0));
  m.set_f64("meta.metric.ref_eps_1", ref(1));
  m.set_f64("meta.wall_time_s",
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  m.write(a.out + "/run_manifest.txt");
  std::cout << "var_trace_dist <= var_trace_mse in " << 100.0 * frac << "% of " << a.batches
            << " batches\n";
  return 0;
}

// ----------------------------------------------------------------- bench ---

struct BenchArgs {
  std::string sizes;
  int repeats = 7;
  SeedOpt seed;
  std::string out = "elosslab_out";
};

int run_bench(const BenchArgs& a) {
  const std::uint64_t seed = a.seed.set ? a.seed.value : 12345;
  std::filesystem::create_directories(a.out);
  std::vector<int> sizes = tasks::default_bench_sizes();
  if (!a.sizes.empty()) {
    sizes.clear();
    std::stringstream ss(a.sizes);
    std::string tok;
    while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
  }
  const tasks::BenchReport rep = tasks::benchmark_losses(sizes, a.repeats, seed);
  write_bench_csv(rep, a.out + "/bench.csv");
  io::Manifest m = base_manifest("bench losses", seed);
  m.set_i64("repeats", a.repeats);
  m.set_f64("meta.metric.sparse_fit_exponent", rep.sparse_fit_exponent);
  m.write(a.out + "/run_manifest.txt");
  std::cout << "sparse-energy scaling exponent: " << rep.sparse_fit_exponent << "\n";
  for (const auto& row : rep.rows)
    std::cout << row.loss << " n=" << row.n << " median_ms=" << row.median_ms << " ("
              << row.status << ")\n";
  if (!rep.sparse_subquadratic) {
    std::cerr << "sparse-energy scaling exponent " << rep.sparse_fit_exponent
              << " exceeds the 1.3 bound\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) + " - physically grounded energy loss functions"};
  app.require_subcommand(1);

  // shapes
  CLI::App* shapes = app.add_subcommand("shapes", "regular polygon prediction task");
  shapes->require_subcommand(1);
  ShapeGenArgs sg;
  CLI::App* shapes_gen = shapes->add_subcommand("gen", "generate a shape dataset");
  shapes_gen->add_option("--n-vertices", sg.n_vertices);
  shapes_gen->add_option("--theta-aug", sg.theta_aug, "rotation augmentation half-range [0, pi]");
  shapes_gen->add_option("--size", sg.size);
  add_seed_flag(shapes_gen, sg.seed);
  shapes_gen->add_option("--out", sg.out);

  TrainArgs st;
  st.cfg = tasks::TrainConfig::shape_defaults();
  CLI::App* shapes_train = shapes->add_subcommand("train", "train on the shape task");
  add_common_train_flags(shapes_train, st);
  shapes_train->add_option("--loss", st.cfg.loss, "mse|energy|kabsch|sparse-energy");
  shapes_train->add_option("--coeff", st.cfg.coeff, "constant|inverse|inverse-squared|exponential");
  shapes_train->add_option("--coeff-param", st.cfg.coeff_param);
  shapes_train->add_option("--lr", st.cfg.lr);
  shapes_train->add_option("--epochs", st.cfg.epochs);
  shapes_train->add_option("--batch-size", st.cfg.batch_size);
  shapes_train->add_option("--train-size", st.cfg.train_size);
  shapes_train->add_option("--test-size", st.cfg.test_size);
  shapes_train->add_option("--n-vertices", st.cfg.n_vertices);
  shapes_train->add_option("--theta-aug", st.cfg.theta_aug);
  shapes_train->add_option("--hidden-dim", st.cfg.hidden_dim);

  EvalArgs se;
  CLI::App* shapes_eval = shapes->add_subcommand("eval", "evaluate a checkpoint on a dataset");
  shapes_eval->add_option("--checkpoint", se.checkpoint)->required();
  shapes_eval->add_option("--data", se.data)->required();

  // spins
  CLI::App* spins = app.add_subcommand("spins", "spin-glass ground state task");
  spins->require_subcommand(1);
  SpinGenArgs pg;
  CLI::App* spins_gen = spins->add_subcommand("gen", "generate a spin dataset");
  spins_gen->add_option("--L", pg.L);
  spins_gen->add_option("--size", pg.size);
  add_seed_flag(spins_gen, pg.seed);
  spins_gen->add_option("--out", pg.out);

  TrainArgs pt;
  pt.cfg = tasks::TrainConfig::spin_defaults();
  CLI::App* spins_train = spins->add_subcommand("train", "train on the spin task");
  add_common_train_flags(spins_train, pt);
  spins_train->add_option("--loss", pt.cfg.loss, "cross-entropy|margin|local-energy|true-energy");
  spins_train->add_option("--lr", pt.cfg.lr);
  spins_train->add_option("--epochs", pt.cfg.epochs);
  spins_train->add_option("--batch-size", pt.cfg.batch_size);
  spins_train->add_option("--train-size", pt.cfg.train_size);
  spins_train->add_option("--test-size", pt.cfg.test_size);
  spins_train->add_option("--L", pt.cfg.L);
  spins_train->add_option("--h0", pt.cfg.h0);
  spins_train->add_option("--T", pt.cfg.T);
  spins_train->add_option("--hidden-dim", pt.cfg.hidden_dim);

  EvalArgs pe;
  CLI::App* spins_eval = spins->add_subcommand("eval", "evaluate a checkpoint on a dataset");
  spins_eval->add_option("--checkpoint", pe.checkpoint)->required();
  spins_eval->add_option("--data", pe.data)->required();

  // rigidity
  CLI::App* rig = app.add_subcommand("rigidity", "random rigid graph tools");
  rig->require_subcommand(1);
  RigiditySampleArgs rs;
  CLI::App* rig_sample = rig->add_subcommand("sample", "generate a rigidity-verified edge pool");
  rig_sample->add_option("--n", rs.n);
  rig_sample->add_option("--d", rs.d);
  rig_sample->add_option("--k", rs.k, "regular degree (default 2d)");
  rig_sample->add_option("--pool-size", rs.pool_size);
  add_seed_flag(rig_sample, rs.seed);
  rig_sample->add_option("--out", rs.out);

  RigidityCheckArgs rc;
  CLI::App* rig_check = rig->add_subcommand("check", "rigidity/global-rigidity checks");
  rig_check->add_option("--edges", rc.edges_file, "edge list file: 'n <count>' then 'i j' lines");
  rig_check->add_option("--n", rc.n);
  rig_check->add_option("--k", rc.k);
  rig_check->add_option("--d", rc.d);
  rig_check->add_option("--count", rc.count);
  add_seed_flag(rig_check, rc.seed);

  // score-lab
  CLI::App* score_cmd = app.add_subcommand("score-lab", "score estimator bias/variance lab");
  score_cmd->require_subcommand(1);
  ScoreArgs sc;
  CLI::App* score_run = score_cmd->add_subcommand("run", "run the bias/variance experiment");
  score_run->add_option("--sigma-t", sc.sigma_t);
  score_run->add_option("--alpha-t", sc.alpha_t);
  score_run->add_option("--mc-samples", sc.mc_samples);
  score_run->add_option("--trials", sc.trials, "estimator draws per batch");
  score_run->add_option("--batches", sc.batches);
  score_run->add_option("--density", sc.density, "pair-distance|isotropic");
  score_run->add_option("--r0", sc.r0);
  score_run->add_option("--s", sc.s);
  add_seed_flag(score_run, sc.seed);
  score_run->add_option("--out", sc.out);

  // bench
  CLI::App* bench = app.add_subcommand("bench", "wall-time benchmarks");
  bench->require_subcommand(1);
  BenchArgs ba;
  CLI::App* bench_losses = bench->add_subcommand("losses", "time the continuous losses");
  bench_losses->add_option("--sizes", ba.sizes, "comma-separated point counts");
  bench_losses->add_option("--repeats", ba.repeats);
  add_seed_flag(bench_losses, ba.seed);
  bench_losses->add_option("--out", ba.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (shapes_gen->parsed()) return run_shapes_gen(sg);
    if (shapes_train->parsed()) return run_train(st, tasks::TrainConfig::Task::shapes);
    if (shapes_eval->parsed()) return run_shapes_eval(se);
    if (spins_gen->parsed()) return run_spins_gen(pg);
    if (spins_train->parsed()) return run_train(pt, tasks::TrainConfig::Task::spins);
    if (spins_eval->parsed()) return run_spins_eval(pe);
    if (rig_sample->parsed()) return run_rigidity_sample(rs);
    if (rig_check->parsed()) return run_rigidity_check(rc);
    if (score_run->parsed()) return run_score_lab(sc);
    if (bench_losses->parsed()) return run_bench(ba);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << app.help() << "\n";
  return 2;
}
