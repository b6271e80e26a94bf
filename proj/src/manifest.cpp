#include "elosslab/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include "elosslab/csv.hpp"

namespace elosslab::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries)
    if (k == key) {
      v = value;
      return;
    }
  entries.emplace_back(key, value);
}

void Manifest::set_f64(const std::string& key, double value) { set(key, fmt_num(value)); }
void Manifest::set_i64(const std::string& key, long long value) { set(key, std::to_string(value)); }
void Manifest::set_u64(const std::string& key, std::uint64_t value) {
  set(key, std::to_string(value));
}

std::optional<std::string> Manifest::get(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return v;
  return std::nullopt;
}

std::optional<double> Manifest::get_f64(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  return std::stod(*v);
}

std::optional<long long> Manifest::get_i64(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  return std::stoll(*v);
}

std::optional<std::uint64_t> Manifest::get_u64(const std::string& key) const {
  const auto v = get(key);
  if (!v) return std::nullopt;
  return std::stoull(*v);
}

void Manifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("Manifest: cannot open " + path);
  for (const auto& [k, v] : entries) out << k << "=" << v << "\n";
}

Manifest Manifest::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Manifest: cannot open " + path);
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("Manifest: malformed line in " + path + ": " + line);
    m.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return m;
}

}  // namespace elosslab::io
