#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elosslab/geometry.hpp"
#include "elosslab/nn.hpp"
#include "elosslab/train_config.hpp"

namespace elosslab::tasks {

using geom::Matrix;

/// Regular polygon target: vertex k sits at angle 2*pi*k/N + rotation on a
/// circle of `radius` about the origin. The model input is the radius alone.
struct ShapeSample {
  double radius = 0.0;
  double rotation = 0.0;
  Matrix target;  // N x 2
};

struct ShapeDataset {
  std::uint64_t seed = 0;
  int n_vertices = 0;
  std::vector<ShapeSample> samples;
};

/// Radii U[0.3, 5], rotations U[-theta_aug, theta_aug], per-sample derived
/// seeds; deterministic bytes per master seed.
ShapeDataset gen_shape_dataset(int n_vertices, double theta_aug, int size, std::uint64_t seed);

void write_shape_dataset(const ShapeDataset& ds, const std::string& path);
ShapeDataset read_shape_dataset(const std::string& path);

/// Polygon regularity score: points are centered, angle-sorted, and scored by
/// -ln(sigma_dangle / 2pi + sigma_radius / mean_radius), the argument clamped
/// at 1e-12 (capping the score near 27.63 for numerically perfect shapes).
/// Population standard deviations; the angular gaps include the wrap-around.
struct QualityReport {
  double value = 0.0;
  double sigma_dangle = 0.0;
  double sigma_radius = 0.0;
  double mean_radius = 0.0;
  bool degenerate = false;  // all points at the centroid; value falls back to 0
};
QualityReport shape_quality(const Eigen::Ref<const Matrix>& points);

struct ShapeSplitMetrics {
  double mean_quality = 0.0;
  double mean_sigma_dangle = 0.0;
  double mean_sigma_radius = 0.0;
  double loss_value = 0.0;
};

struct ShapeTrainResult {
  nn::MlpConfig mlp;
  nn::Params params;
  ShapeSplitMetrics final_test;
  double wall_time_s = 0.0;
  std::string metrics_csv;
  std::string manifest_path;
  std::string checkpoint_path;
};

/// Trains the radius -> 2N coordinate MLP with the configured loss, logging
/// per-epoch metrics for both splits to metrics.csv and writing checkpoint,
/// SVG quality curve and a replayable run manifest under out_dir.
ShapeTrainResult train_shape(const TrainConfig& cfg, const std::string& out_dir);

/// Mean quality metrics of a trained model over a dataset.
ShapeSplitMetrics eval_shape_model(const nn::MlpConfig& mlp, const nn::Params& params,
                                   const ShapeDataset& ds, const TrainConfig& cfg);

/// Prediction row -> N x 2 cloud (interleaved x,y layout).
Matrix prediction_to_cloud(const Eigen::Ref<const Eigen::RowVectorXd>& row, int n_vertices);

}  // namespace elosslab::tasks
