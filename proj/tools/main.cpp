#include "ntdpc/config.hpp"
#include "ntdpc/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

// NTDPC_OUTPUT_DIR overrides the config's output directory.
std::filesystem::path resolve_outdir(const std::string& from_config) {
    if (const char* env = std::getenv("NTDPC_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return from_config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven predictive control laboratory (NTDPC / SPC / SMMPC)"};
    app.require_subcommand(1);

    std::string config_path;
    std::string controller = "all";
    long long runs = 0;
    std::vector<long long> th_list = {10, 20};
    std::vector<long long> m_list = {1000, 2000};
    int repeats = 7;
    std::string timing_out = "out";

    CLI::App* sim = app.add_subcommand("simulate", "Closed-loop run for one or all controllers");
    sim->add_option("--config", config_path, "Scenario config file")->required();
    sim->add_option("--controller", controller, "ntdpc|spc|smmpc|all")
        ->check(CLI::IsMember({"ntdpc", "spc", "smmpc", "all"}));

    CLI::App* mc = app.add_subcommand("monte-carlo", "Monte Carlo study over independent seeds");
    mc->add_option("--config", config_path, "Scenario config file")->required();
    mc->add_option("--runs", runs, "Override the config's run count");

    CLI::App* sens = app.add_subcommand("sensitivity", "Sensitivity-index sweep over (T_ini, sigma2)");
    sens->add_option("--config", config_path, "Scenario config file")->required();

    CLI::App* timing = app.add_subcommand("timing", "SPC vs NTDPC factorization cost comparison");
    timing->add_option("--th", th_list, "Horizon sizes T_h");
    timing->add_option("--m", m_list, "Data lengths M");
    timing->add_option("--repeats", repeats, "Timing repeats per size");
    timing->add_option("--out", timing_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (timing->parsed()) {
            std::vector<ntdpc::Index> th(th_list.begin(), th_list.end());
            std::vector<ntdpc::Index> m(m_list.begin(), m_list.end());
            std::filesystem::path outdir = resolve_outdir(timing_out);
            ntdpc::cmd_timing(th, m, repeats, outdir);
            std::cout << "timing report written to " << outdir.string() << "\n";
            return 0;
        }

        ntdpc::ConfigFile cfg = ntdpc::parse_config(config_path);
        const std::filesystem::path outdir = resolve_outdir(cfg.output_dir);
        if (sim->parsed()) {
            ntdpc::cmd_simulate(cfg, controller, outdir);
        } else if (mc->parsed()) {
            ntdpc::cmd_monte_carlo(cfg, static_cast<ntdpc::Index>(runs), outdir);
        } else if (sens->parsed()) {
            ntdpc::cmd_sensitivity(cfg, outdir);
        }
        std::cout << "artifacts written to " << outdir.string() << "\n";
        return 0;
    } catch (const ntdpc::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
