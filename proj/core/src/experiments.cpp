#include "ntdpc/experiments.hpp"

#include "ntdpc/csv.hpp"
#include "ntdpc/hankel.hpp"
#include "ntdpc/predictors.hpp"
#include "ntdpc/rng.hpp"
#include "ntdpc/scaling.hpp"
#include "ntdpc/svg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

namespace ntdpc {

namespace {

namespace fs = std::filesystem;

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write to " + path.string() + " failed");
}

void prepare_outdir(const ConfigFile& cfg, const fs::path& outdir) {
    fs::create_directories(outdir);
    write_text(outdir / "resolved_config.json", resolved_config_json(cfg));
}

double status_code(QpStatus s) {
    switch (s) {
        case QpStatus::solved: return 0;
        case QpStatus::max_iters: return 1;
        case QpStatus::infeasible: return 2;
    }
    return -1;
}

void write_run_log(const fs::path& path, const RunLog& log) {
    CsvTable t;
    t.columns = {"k"};
    for (Index i = 0; i < log.u.rows(); ++i) t.columns.push_back("u_" + std::to_string(i + 1));
    for (Index i = 0; i < log.y_meas.rows(); ++i) t.columns.push_back("y_" + std::to_string(i + 1));
    for (Index i = 0; i < log.y_clean.rows(); ++i) {
        t.columns.push_back("yclean_" + std::to_string(i + 1));
    }
    t.columns.insert(t.columns.end(), {"qp_status", "stage_cost", "cum_cost"});
    for (Index k = 0; k < log.u.cols(); ++k) {
        CsvRow row;
        row.values.push_back(static_cast<double>(k));
        for (Index i = 0; i < log.u.rows(); ++i) row.values.push_back(log.u(i, k));
        for (Index i = 0; i < log.y_meas.rows(); ++i) row.values.push_back(log.y_meas(i, k));
        for (Index i = 0; i < log.y_clean.rows(); ++i) row.values.push_back(log.y_clean(i, k));
        row.values.push_back(status_code(log.qp_status[static_cast<std::size_t>(k)]));
        row.values.push_back(log.stage_cost(k));
        row.values.push_back(log.cum_cost(k));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

void write_solve_timing(const fs::path& path, const RunLog& log) {
    CsvTable t;
    t.columns = {"k", "solve_seconds"};
    for (Index k = 0; k < log.solve_seconds.size(); ++k) {
        t.rows.push_back({{}, {static_cast<double>(k), log.solve_seconds(k)}});
    }
    write_csv(path, t);
}

std::vector<ControllerKind> select_controllers(const ConfigFile& cfg, const std::string& sel) {
    if (sel == "all") return cfg.controllers;
    return {controller_from_name(sel)};
}

}  // namespace

void cmd_simulate(const ConfigFile& cfg, const std::string& controller_sel, const fs::path& outdir) {
    prepare_outdir(cfg, outdir);

    CsvTable summary;
    summary.columns = {"controller", "steps", "warmup_steps", "final_err_inf", "final_index",
                       "hold_count"};
    CsvTable solve_stats;
    solve_stats.columns = {"controller", "solves", "median_seconds", "mean_seconds", "max_seconds"};

    for (ControllerKind kind : select_controllers(cfg, controller_sel)) {
        const std::string name = controller_name(kind);
        Scenario s = make_scenario(cfg, kind);
        RunLog log = run_closed_loop(s);

        write_run_log(outdir / ("trajectory_" + name + ".csv"), log);
        write_solve_timing(outdir / ("solve_timing_" + name + ".csv"), log);

        PlotSpec plot;
        plot.title = name + " closed-loop outputs";
        plot.x_label = "step k";
        plot.y_label = "output";
        for (Index i = 0; i < log.y_meas.rows(); ++i) {
            SvgSeries series;
            series.x_column = "k";
            series.y_column = "y_" + std::to_string(i + 1);
            series.label = "y_" + std::to_string(i + 1);
            series.color = kSeriesColors[i % 6];
            plot.series.push_back(series);
            plot.h_ref_lines.push_back(cfg.r_y(i));
        }
        emit_svg_from_csv(plot, outdir / ("trajectory_" + name + ".csv"),
                          outdir / ("outputs_" + name + ".svg"));

        const Index last = log.u.cols() - 1;
        const double final_err = (log.y_meas.col(last) - cfg.r_y).cwiseAbs().maxCoeff();
        summary.rows.push_back({{name},
                                {static_cast<double>(log.u.cols()),
                                 static_cast<double>(log.warmup_steps), final_err,
                                 log.cum_cost(last), static_cast<double>(log.hold_count)}});

        std::vector<double> times;
        for (Index k = log.warmup_steps; k < log.solve_seconds.size(); ++k) {
            times.push_back(log.solve_seconds(k));
        }
        std::sort(times.begin(), times.end());
        const double median = times.empty() ? 0.0 : times[times.size() / 2];
        const double mean =
            times.empty() ? 0.0
                          : std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
        const double mx = times.empty() ? 0.0 : times.back();
        solve_stats.rows.push_back(
            {{name}, {static_cast<double>(times.size()), median, mean, mx}});
    }
    write_csv(outdir / "summary.csv", summary);
    write_csv(outdir / "summary_timing.csv", solve_stats);
}

void cmd_monte_carlo(const ConfigFile& cfg, Index runs_override, const fs::path& outdir) {
    prepare_outdir(cfg, outdir);
    const Index runs = runs_override > 0 ? runs_override : cfg.mc_runs;
    require(runs >= 1, "monte-carlo: runs must be positive");

    CsvTable comparison;
    comparison.columns = {"controller", "runs",           "aborted_runs",    "final_index_mean",
                          "final_index_std", "max_output_abs"};

    for (ControllerKind kind : cfg.controllers) {
        const std::string name = controller_name(kind);
        Scenario s = make_scenario(cfg, kind);
        McStats stats = monte_carlo(s, runs);

        CsvTable t;
        t.columns = {"k"};
        for (Index i = 0; i < stats.y_mean.rows(); ++i) {
            t.columns.push_back("y_" + std::to_string(i + 1) + "_mean");
            t.columns.push_back("y_" + std::to_string(i + 1) + "_std");
        }
        for (Index i = 0; i < stats.u_mean.rows(); ++i) {
            t.columns.push_back("u_" + std::to_string(i + 1) + "_mean");
            t.columns.push_back("u_" + std::to_string(i + 1) + "_std");
        }
        t.columns.insert(t.columns.end(), {"index_mean", "index_std"});
        for (Index k = 0; k < stats.index_mean.size(); ++k) {
            CsvRow row;
            row.values.push_back(static_cast<double>(k));
            for (Index i = 0; i < stats.y_mean.rows(); ++i) {
                row.values.push_back(stats.y_mean(i, k));
                row.values.push_back(stats.y_std(i, k));
            }
            for (Index i = 0; i < stats.u_mean.rows(); ++i) {
                row.values.push_back(stats.u_mean(i, k));
                row.values.push_back(stats.u_std(i, k));
            }
            row.values.push_back(stats.index_mean(k));
            row.values.push_back(stats.index_std(k));
            t.rows.push_back(std::move(row));
        }
        write_csv(outdir / ("mc_stats_" + name + ".csv"), t);

        PlotSpec plot;
        plot.title = name + " outputs, mean over " + std::to_string(runs) + " runs";
        plot.x_label = "step k";
        plot.y_label = "output";
        for (Index i = 0; i < stats.y_mean.rows(); ++i) {
            SvgSeries series;
            series.x_column = "k";
            series.y_column = "y_" + std::to_string(i + 1) + "_mean";
            series.band_column = "y_" + std::to_string(i + 1) + "_std";
            series.label = "y_" + std::to_string(i + 1);
            series.color = kSeriesColors[i % 6];
            plot.series.push_back(series);
            plot.h_ref_lines.push_back(cfg.r_y(i));
        }
        emit_svg_from_csv(plot, outdir / ("mc_stats_" + name + ".csv"),
                          outdir / ("mc_outputs_" + name + ".svg"));

        const Index last = stats.index_mean.size() - 1;
        comparison.rows.push_back({{name},
                                   {static_cast<double>(stats.runs),
                                    static_cast<double>(stats.aborted), stats.index_mean(last),
                                    stats.index_std(last), stats.max_output_abs}});
    }
    write_csv(outdir / "mc_index_comparison.csv", comparison);
}

std::vector<SensitivityCell> run_sensitivity_sweep(const ConfigFile& cfg, int threads) {
    const SensitivityConfig& sc = cfg.sensitivity;
    require(!sc.t_ini_grid.empty() && !sc.sigma2_grid.empty(), "sensitivity: empty grid");
    require(sc.seeds_per_cell >= 1, "sensitivity: seeds_per_cell must be positive");
    const Index m_cols = sc.m_columns > 0 ? sc.m_columns : cfg.m_columns;
    const Index n_u = cfg.plant.n_u();
    const Index n_y = cfg.plant.n_y();
    const Index order = cfg.system_order > 0 ? cfg.system_order : cfg.plant.n();

    struct Task {
        std::size_t cell;
        Index t_ini;
        double sigma2;
        Index run;
    };
    std::vector<Task> tasks;
    const std::size_t cells = sc.t_ini_grid.size() * sc.sigma2_grid.size();
    for (std::size_t ti = 0; ti < sc.t_ini_grid.size(); ++ti) {
        for (std::size_t si = 0; si < sc.sigma2_grid.size(); ++si) {
            for (Index run = 0; run < sc.seeds_per_cell; ++run) {
                tasks.push_back({ti * sc.sigma2_grid.size() + si, sc.t_ini_grid[ti],
                                 sc.sigma2_grid[si], run});
            }
        }
    }

    std::vector<double> values(tasks.size(), 0.0);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= tasks.size()) break;
            const Task& task = tasks[idx];
            const Index t = task.t_ini;
            // Input and noise streams depend on (t_ini, run) only, so cells
            // along the sigma axis are paired and the sweep is monotone by
            // construction of the comparison, not by luck.
            const std::uint64_t base =
                seed_combine(cfg.seed, 0x5EEDu + static_cast<std::uint64_t>(t) * 1024u +
                                           static_cast<std::uint64_t>(task.run));
            const Index raw_len = m_cols + 2 * t + 1;
            Matrix u = generate_pe_input(n_u, raw_len, cfg.pe_amplitude, seed_combine(base, 1));
            NoiseModel noise{task.sigma2 * Matrix::Identity(n_y, n_y), seed_combine(base, 2)};
            Trajectory traj = simulate_lti(cfg.plant, Vector::Zero(cfg.plant.n()), u,
                                           task.sigma2 > 0.0 ? &noise : nullptr);
            ScalingPair scaling = compute_scaling(traj);
            Trajectory scaled = apply_scaling(traj, scaling, ScaleDirection::forward);
            HankelSet h = build_hankels(scaled, t, t, m_cols);
            auto [zp, zf] = stack_past_future(h);
            (void)zf;
            Vector sigma = singular_values(zp);
            const Index r = n_u * t + order;
            values[idx] = sensitivity_index(sigma.head(r), sigma.tail(sigma.size() - r));
        }
    };
    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::vector<SensitivityCell> out(cells);
    std::vector<std::vector<double>> per_cell(cells);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        per_cell[tasks[i].cell].push_back(values[i]);
    }
    for (std::size_t ti = 0; ti < sc.t_ini_grid.size(); ++ti) {
        for (std::size_t si = 0; si < sc.sigma2_grid.size(); ++si) {
            const std::size_t cell = ti * sc.sigma2_grid.size() + si;
            const auto& v = per_cell[cell];
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            var /= static_cast<double>(v.size());
            out[cell] = {sc.t_ini_grid[ti], sc.sigma2_grid[si], mean, std::sqrt(var)};
        }
    }
    return out;
}

void cmd_sensitivity(const ConfigFile& cfg, const fs::path& outdir) {
    prepare_outdir(cfg, outdir);
    std::vector<SensitivityCell> cells = run_sensitivity_sweep(cfg);

    CsvTable t;
    t.columns = {"t_ini", "sigma2", "is_mean", "is_std", "seeds"};
    for (const SensitivityCell& c : cells) {
        t.rows.push_back({{},
                          {static_cast<double>(c.t_ini), c.sigma2, c.is_mean, c.is_std,
                           static_cast<double>(cfg.sensitivity.seeds_per_cell)}});
    }
    write_csv(outdir / "sensitivity.csv", t);

    // One series per noise level; the guide line marks the empirical
    // convergence threshold I_s <= 0.7.
    CsvTable wide;
    wide.columns = {"t_ini"};
    for (std::size_t si = 0; si < cfg.sensitivity.sigma2_grid.size(); ++si) {
        wide.columns.push_back("is_mean_" + std::to_string(si));
        wide.columns.push_back("is_std_" + std::to_string(si));
    }
    for (std::size_t ti = 0; ti < cfg.sensitivity.t_ini_grid.size(); ++ti) {
        CsvRow row;
        row.values.push_back(static_cast<double>(cfg.sensitivity.t_ini_grid[ti]));
        for (std::size_t si = 0; si < cfg.sensitivity.sigma2_grid.size(); ++si) {
            const SensitivityCell& c = cells[ti * cfg.sensitivity.sigma2_grid.size() + si];
            row.values.push_back(c.is_mean);
            row.values.push_back(c.is_std);
        }
        wide.rows.push_back(std::move(row));
    }
    write_csv(outdir / "sensitivity_wide.csv", wide);

    PlotSpec plot;
    plot.title = "Sensitivity index over past horizon";
    plot.x_label = "T_ini";
    plot.y_label = "I_s";
    plot.h_ref_lines.push_back(0.7);
    for (std::size_t si = 0; si < cfg.sensitivity.sigma2_grid.size(); ++si) {
        SvgSeries series;
        series.x_column = "t_ini";
        series.y_column = "is_mean_" + std::to_string(si);
        series.band_column = "is_std_" + std::to_string(si);
        series.label = "sigma2=" + format_double(cfg.sensitivity.sigma2_grid[si]);
        series.color = kSeriesColors[si % 6];
        plot.series.push_back(series);
    }
    emit_svg_from_csv(plot, outdir / "sensitivity_wide.csv", outdir / "sensitivity_index.svg");
}

void cmd_timing(const std::vector<Index>& t_h_list, const std::vector<Index>& m_list, int repeats,
                const fs::path& outdir) {
    fs::create_directories(outdir);
    std::vector<TimingRow> rows = timing_benchmark(t_h_list, m_list, repeats);

    CsvTable model;
    model.columns = {"t_h", "m", "flops_spc", "flops_ntdpc", "ratio"};
    for (Index t_h : t_h_list) {
        for (Index m : m_list) {
            const double fs = flops_model_spc(t_h, m);
            const double fn = flops_model_ntdpc(t_h, m);
            model.rows.push_back({{},
                                  {static_cast<double>(t_h), static_cast<double>(m), fs, fn,
                                   fn / fs}});
        }
    }
    write_csv(outdir / "timing_model.csv", model);

    CsvTable measured;
    measured.columns = {"method", "t_h", "m", "median_seconds", "flops_model"};
    for (const TimingRow& r : rows) {
        measured.rows.push_back({{r.method},
                                 {static_cast<double>(r.t_h), static_cast<double>(r.m),
                                  r.median_seconds, r.flops_model}});
    }
    write_csv(outdir / "timing_measured.csv", measured);
}

}  // namespace ntdpc
