#include "pmelab/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace pmelab::csv {

std::string format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.exceptions(std::ios::badbit | std::ios::failbit);
  return out;
}

void write_field_snapshot(const std::string& path, const Grid& g, const Field& f) {
  if (f.size() != g.cells())
    throw std::invalid_argument("write_field_snapshot: field/grid mismatch");
  std::ofstream out = open_output(path);
  if (g.dim == 1) {
    out << "x,value\n";
    for (int i = 0; i < g.n; ++i)
      out << format(g.axis_coord(i)) << ',' << format(f[i]) << '\n';
  } else {
    out << "x,y,value\n";
    for (int iy = 0; iy < g.n; ++iy)
      for (int ix = 0; ix < g.n; ++ix)
        out << format(g.axis_coord(ix)) << ',' << format(g.axis_coord(iy)) << ','
            << format(f[Eigen::Index(iy) * g.n + ix]) << '\n';
  }
}

}  // namespace pmelab::csv
