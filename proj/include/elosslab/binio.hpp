#pragma once

#include <Eigen/Dense>
#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include "elosslab/nn.hpp"

// Little-endian binary container shared by datasets and checkpoints:
// 8-byte magic, u32 format version, u64 master seed, then payload fields and
// shape-prefixed float64 arrays (u8 rank, u64 dims, row-major data).

namespace elosslab::io {

static_assert(std::endian::native == std::endian::little,
              "file formats are pinned to little-endian hosts");

using Matrix = Eigen::MatrixXd;

class BinWriter {
 public:
  explicit BinWriter(const std::string& path);

  void magic(const char tag[8]);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void matrix(const Matrix& m);  // rank-2 array, row-major

 private:
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path);

  void expect_magic(const char tag[8]);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  Matrix matrix();

 private:
  void raw(void* dst, std::size_t n);
  std::ifstream in_;
  std::string path_;
};

/// MLP checkpoint: magic "ELOSSCKP", version, seed, config, parameters.
void write_checkpoint(const std::string& path, const nn::MlpConfig& cfg, const nn::Params& params,
                      std::uint64_t seed);

struct Checkpoint {
  nn::MlpConfig cfg;
  nn::Params params;
  std::uint64_t seed = 0;
};
Checkpoint read_checkpoint(const std::string& path);

}  // namespace elosslab::io
