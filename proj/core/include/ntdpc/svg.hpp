#pragma once

#include "ntdpc/csv.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ntdpc {

// One polyline, optionally backed by a +-1 std band (band_column holds the
// std values; the band polygon is drawn behind the mean line).
struct SvgSeries {
    std::string x_column;
    std::string y_column;
    std::string band_column;  // empty: no band
    std::string label;
    std::string color = "#1f77b4";
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<SvgSeries> series;
    std::vector<double> h_ref_lines;  // dashed horizontal reference lines
    int width = 860;
    int height = 520;
};

// Self-contained deterministic SVG; identical inputs give identical bytes.
void emit_svg(const PlotSpec& spec, const CsvData& data, const std::filesystem::path& out_path);
void emit_svg_from_csv(const PlotSpec& spec, const std::filesystem::path& csv_path,
                       const std::filesystem::path& out_path);

}  // namespace ntdpc
