#pragma once

#include "ntdpc/control_loop.hpp"
#include "ntdpc/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ntdpc {

// Configuration problems exit with a distinct code at the CLI.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SensitivityConfig {
    std::vector<Index> t_ini_grid = {10, 15, 20, 25, 30, 35, 40, 45, 50};
    std::vector<double> sigma2_grid = {0.01, 0.04, 0.16, 0.32};
    Index seeds_per_cell = 50;
    Index m_columns = 0;  // 0: inherit the data section
};

// Fully resolved configuration; parse_config applies defaults so the echoed
// file reproduces a run exactly.
struct ConfigFile {
    PlantModel plant;
    std::string plant_preset;  // "boeing747" or empty for literal matrices
    Index t_ini = 20;
    Index n_pred = 20;
    Index m_columns = 2500;
    double pe_amplitude = 1.0;
    Matrix noise_sigma;  // empty = noise-free
    std::vector<ControllerKind> controllers = {ControllerKind::ntdpc, ControllerKind::spc,
                                               ControllerKind::smmpc};
    StageWeights weights;
    Vector u_lo, u_hi, y_lo, y_hi;
    Vector r_y;
    Vector r_u;  // resolved; "auto" is solved from the plant at parse time
    Index steps = 800;
    Vector x0;
    Index mc_runs = 50;
    SensitivityConfig sensitivity;
    Index system_order = 0;  // 0 = plant order
    std::uint64_t seed = 1;
    std::string output_dir = "out";
};

ConfigFile parse_config(const std::filesystem::path& path);
ConfigFile parse_config_text(const std::string& text, const std::string& origin);

// Canonical JSON echo; reparsing it reproduces every output byte.
std::string resolved_config_json(const ConfigFile& cfg);

Scenario make_scenario(const ConfigFile& cfg, ControllerKind controller);

std::string controller_name(ControllerKind k);
ControllerKind controller_from_name(const std::string& name);

}  // namespace ntdpc
