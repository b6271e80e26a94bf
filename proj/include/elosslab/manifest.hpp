#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace elosslab::io {

/// Flat key=value text with '#' comments; doubles as run config and as the
/// replayable RunManifest (meta.* keys carry run metadata and are ignored
/// when a manifest is fed back in as a config).
struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  void set_f64(const std::string& key, double value);
  void set_i64(const std::string& key, long long value);
  void set_u64(const std::string& key, std::uint64_t value);

  std::optional<std::string> get(const std::string& key) const;
  std::optional<double> get_f64(const std::string& key) const;
  std::optional<long long> get_i64(const std::string& key) const;
  std::optional<std::uint64_t> get_u64(const std::string& key) const;

  void write(const std::string& path) const;
  static Manifest read(const std::string& path);
};

}  // namespace elosslab::io
