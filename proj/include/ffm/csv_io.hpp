#pragma once

// Plain-text exchange formats.
//
//   grid CSV : header `u`, then one abscissa per row.
//   panel CSV: header `t,series,v1,...,vG`, one row per (t, series) pair;
//              t and series are 1-based and must cover 1..n × 1..p exactly once.

#include <iosfwd>
#include <string>

#include "ffm/curves.hpp"

namespace ffm {

Grid read_grid_csv(const std::string& path);
Grid parse_grid_csv(std::istream& in);
void write_grid_csv(const std::string& path, const Grid& grid);
void write_grid_csv(std::ostream& out, const Grid& grid);

CurvePanel read_panel_csv(const std::string& path, const Grid& grid);
CurvePanel parse_panel_csv(std::istream& in, const Grid& grid);
void write_panel_csv(const std::string& path, const CurvePanel& panel);
void write_panel_csv(std::ostream& out, const CurvePanel& panel);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

} // namespace ffm
