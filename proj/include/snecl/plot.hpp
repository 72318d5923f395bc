#pragma once

#include "snecl/io.hpp"

#include <string>

namespace snecl {

enum class PlotKind { scatter2d, line, heatmap };

std::string to_string(PlotKind k);
PlotKind parse_plot_kind(const std::string& name);

/// Standalone SVG for a CSV table.
///
/// Coordinates: a 480 x 480 canvas with a 48 px margin. Data x maps linearly
/// from [xmin, xmax] to [48, 432] and y from [ymin, ymax] to [432, 48]; the
/// ranges are the data extent padded by 5% on each side (a zero-width range
/// is widened to +-1).
///
///   scatter2d: first two columns are x and y; an optional `label` column
///              picks the marker colour. One <circle> per row.
///   line:      first column is x; every other column is a series drawn as
///              one <polyline>.
///   heatmap:   `class,c0,...` grid (values in [-1, 1]); one <rect> and one
///              numeric <text> per cell.
///
/// Throws FormatError on an empty table or a missing column.
std::string render_svg(const CsvTable& table, PlotKind kind, const std::string& title = {});

} // namespace snecl
