#pragma once

#include "ntdpc/config.hpp"
#include "ntdpc/control_loop.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ntdpc {

// Experiment drivers behind the CLI subcommands. Every artifact except the
// *_timing / *_measured files is a pure function of (config, seed).

// controller_sel: "ntdpc", "spc", "smmpc" or "all" (the config's list).
void cmd_simulate(const ConfigFile& cfg, const std::string& controller_sel,
                  const std::filesystem::path& outdir);

// runs_override = 0 keeps the config's run count.
void cmd_monte_carlo(const ConfigFile& cfg, Index runs_override,
                     const std::filesystem::path& outdir);

void cmd_sensitivity(const ConfigFile& cfg, const std::filesystem::path& outdir);

void cmd_timing(const std::vector<Index>& t_h_list, const std::vector<Index>& m_list, int repeats,
                const std::filesystem::path& outdir);

// Per-cell sensitivity sweep result.
struct SensitivityCell {
    Index t_ini = 0;
    double sigma2 = 0.0;
    double is_mean = 0.0;
    double is_std = 0.0;
};

std::vector<SensitivityCell> run_sensitivity_sweep(const ConfigFile& cfg, int threads = 0);

}  // namespace ntdpc
