#include "ntdpc/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ntdpc {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream os(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!os) throw std::runtime_error("write_csv: cannot open " + path.string());

    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) os << ',';
        os << table.columns[i];
    }
    os << '\n';
    for (const CsvRow& row : table.rows) {
        if (row.labels.size() + row.values.size() != table.columns.size()) {
            throw std::runtime_error("write_csv: row width does not match header");
        }
        std::size_t col = 0;
        for (const std::string& s : row.labels) {
            if (col++) os << ',';
            os << s;
        }
        for (double v : row.values) {
            if (col++) os << ',';
            os << format_double(v);
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("write_csv: write to " + path.string() + " failed");
}

Index CsvData::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return static_cast<Index>(i);
    }
    throw std::invalid_argument("csv: no column named '" + name + "'");
}

std::vector<double> CsvData::numeric(const std::string& name) const {
    const auto idx = static_cast<std::size_t>(column_index(name));
    std::vector<double> out;
    out.reserve(cells.size());
    for (const auto& row : cells) {
        const std::string& cell = row.at(idx);
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str()) {
            throw std::runtime_error("csv: non-numeric cell '" + cell + "' in column " + name);
        }
        out.push_back(v);
    }
    return out;
}

CsvData read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_csv: cannot open " + path.string());

    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur.push_back(c);
            }
        }
        out.push_back(cur);
        return out;
    };

    CsvData data;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_csv: empty file " + path.string());
    data.columns = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != data.columns.size()) {
            throw std::runtime_error("read_csv: ragged row in " + path.string());
        }
        data.cells.push_back(std::move(cells));
    }
    return data;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    CsvTable table;
    table.columns.push_back("k");
    for (Index i = 0; i < traj.u.rows(); ++i) table.columns.push_back("u_" + std::to_string(i + 1));
    for (Index i = 0; i < traj.y.rows(); ++i) table.columns.push_back("y_" + std::to_string(i + 1));

    for (Index k = 0; k < traj.length(); ++k) {
        CsvRow row;
        row.values.push_back(static_cast<double>(k));
        for (Index i = 0; i < traj.u.rows(); ++i) row.values.push_back(traj.u(i, k));
        for (Index i = 0; i < traj.y.rows(); ++i) row.values.push_back(traj.y(i, k));
        table.rows.push_back(std::move(row));
    }
    write_csv(path, table);
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, Index n_u) {
    CsvData data = read_csv(path);
    require(static_cast<Index>(data.columns.size()) > n_u + 1,
            "read_trajectory_csv: too few columns for the given input count");
    const Index n_y = static_cast<Index>(data.columns.size()) - n_u - 1;
    const Index len = static_cast<Index>(data.cells.size());

    Trajectory traj;
    traj.u.resize(n_u, len);
    traj.y.resize(n_y, len);
    for (Index i = 0; i < n_u; ++i) {
        auto col = data.numeric("u_" + std::to_string(i + 1));
        for (Index k = 0; k < len; ++k) traj.u(i, k) = col[static_cast<std::size_t>(k)];
    }
    for (Index i = 0; i < n_y; ++i) {
        auto col = data.numeric("y_" + std::to_string(i + 1));
        for (Index k = 0; k < len; ++k) traj.y(i, k) = col[static_cast<std::size_t>(k)];
    }
    return traj;
}

}  // namespace ntdpc
