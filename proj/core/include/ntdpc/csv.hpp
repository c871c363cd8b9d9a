#pragma once

#include "ntdpc/plant.hpp"
#include "ntdpc/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ntdpc {

// Deterministic CSV: 17 significant digits, comma delimiter, LF line endings.
std::string format_double(double v);

// A row is its label cells (leading columns) followed by numeric cells.
struct CsvRow {
    std::vector<std::string> labels;
    std::vector<double> values;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<CsvRow> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);

// Read-back form: all cells kept as strings, numeric access by column name.
struct CsvData {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> cells;

    Index column_index(const std::string& name) const;  // throws naming the column
    std::vector<double> numeric(const std::string& name) const;
};

CsvData read_csv(const std::filesystem::path& path);

// Trajectory schema: header k,u_1..u_nu,y_1..y_ny, one sample per line.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& path, Index n_u);

}  // namespace ntdpc
