#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "tcar/graph.hpp"
#include "tcar/scm.hpp"

namespace tcar {

// 17 significant digits: enough to round-trip any double. printf-family
// formatting is locale-independent unless setlocale() is called.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_dataset_csv(std::ostream& os, const Dataset& ds, const std::string& comment = {}) {
  if (!comment.empty()) os << "# " << comment << '\n';
  for (std::size_t c = 0; c < ds.width(); ++c) os << (c ? "," : "") << ds.columns[c];
  os << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.width(); ++c) os << (c ? "," : "") << format_double(ds.at(r, c));
    os << '\n';
  }
}

inline void write_paths_csv(std::ostream& os, const std::vector<PathRecord>& paths) {
  os << "path,weight,time\n";
  for (const auto& p : paths) os << p.str() << ',' << format_double(p.weight) << ',' << format_double(p.time) << '\n';
}

}  // namespace tcar
