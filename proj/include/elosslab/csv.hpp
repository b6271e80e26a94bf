#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace elosslab::io {

/// Shortest round-trip decimal for a double; identical doubles always format
/// to identical text, which is what makes metrics CSVs byte-reproducible.
inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_num(long long v) { return std::to_string(v); }
inline std::string fmt_num(int v) { return std::to_string(v); }

/// RFC-4180 style writer with a fixed header; fields here never need quoting.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header) : out_(path) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    out_ << header << "\r\n";
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
};

}  // namespace elosslab::io
