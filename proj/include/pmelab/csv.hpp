#pragma once

#include "pmelab/grid.hpp"

#include <fstream>
#include <string>

namespace pmelab::csv {

/// Fixed 17-significant-digit formatting; all CSV output goes through this
/// so that identical runs produce byte-identical files.
std::string format(double v);

/// Opens for writing with exceptions enabled; throws std::runtime_error on
/// failure.
std::ofstream open_output(const std::string& path);

/// Field snapshot: header `x,value` (1D) or `x,y,value` (2D), row-major.
void write_field_snapshot(const std::string& path, const Grid& g, const Field& f);

}  // namespace pmelab::csv
