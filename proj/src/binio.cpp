#include "elosslab/binio.hpp"

#include <cstring>
#include <stdexcept>

namespace elosslab::io {

namespace {
constexpr char kCheckpointMagic[8] = {'E', 'L', 'O', 'S', 'S', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

BinWriter::BinWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("BinWriter: cannot open " + path);
}

void BinWriter::magic(const char tag[8]) { out_.write(tag, 8); }

void BinWriter::u32(std::uint32_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinWriter::u64(std::uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinWriter::f64(double v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinWriter::matrix(const Matrix& m) {
  out_.put(static_cast<char>(2));  // rank
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
}

BinReader::BinReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw std::runtime_error("BinReader: cannot open " + path);
}

void BinReader::raw(void* dst, std::size_t n) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (in_.gcount() != static_cast<std::streamsize>(n))
    throw std::runtime_error("BinReader: truncated file " + path_);
}

void BinReader::expect_magic(const char tag[8]) {
  char got[8];
  raw(got, 8);
  if (std::memcmp(got, tag, 8) != 0)
    throw std::runtime_error("BinReader: bad magic in " + path_);
}

std::uint32_t BinReader::u32() {
  std::uint32_t v;
  raw(&v, sizeof v);
  return v;
}

std::uint64_t BinReader::u64() {
  std::uint64_t v;
  raw(&v, sizeof v);
  return v;
}

double BinReader::f64() {
  double v;
  raw(&v, sizeof v);
  return v;
}

Matrix BinReader::matrix() {
  char rank;
  raw(&rank, 1);
  if (rank != 2) throw std::runtime_error("BinReader: expected rank-2 array in " + path_);
  const auto rows = static_cast<Eigen::Index>(u64());
  const auto cols = static_cast<Eigen::Index>(u64());
  if (rows < 0 || cols < 0 || rows * cols > (1LL << 32))
    throw std::runtime_error("BinReader: implausible array shape in " + path_);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
  return m;
}

void write_checkpoint(const std::string& path, const nn::MlpConfig& cfg, const nn::Params& params,
                      std::uint64_t seed) {
  cfg.validate();
  if (static_cast<int>(params.size()) != cfg.n_param_tensors())
    throw std::invalid_argument("write_checkpoint: parameter count mismatch");
  BinWriter w(path);
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u64(seed);
  w.u32(static_cast<std::uint32_t>(cfg.input_dim));
  w.u32(static_cast<std::uint32_t>(cfg.hidden_dim));
  w.u32(static_cast<std::uint32_t>(cfg.output_dim));
  w.u32(static_cast<std::uint32_t>(cfg.n_hidden_layers));
  w.u32(cfg.activation == nn::MlpConfig::Activation::relu ? 0u : 1u);
  w.u64(params.size());
  for (const auto& p : params) w.matrix(p);
}

Checkpoint read_checkpoint(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kCheckpointMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("read_checkpoint: unsupported version in " + path);
  Checkpoint ck;
  ck.seed = r.u64();
  ck.cfg.input_dim = static_cast<int>(r.u32());
  ck.cfg.hidden_dim = static_cast<int>(r.u32());
  ck.cfg.output_dim = static_cast<int>(r.u32());
  ck.cfg.n_hidden_layers = static_cast<int>(r.u32());
  ck.cfg.activation =
      (r.u32() == 0u) ? nn::MlpConfig::Activation::relu : nn::MlpConfig::Activation::silu;
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) ck.params.push_back(r.matrix());
  if (static_cast<int>(ck.params.size()) != ck.cfg.n_param_tensors())
    throw std::runtime_error("read_checkpoint: parameter count mismatch in " + path);
  return ck;
}

}  // namespace elosslab::io
