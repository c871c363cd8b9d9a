#include "ntdpc/control_loop.hpp"

#include "ntdpc/hankel.hpp"
#include "ntdpc/rng.hpp"
#include "ntdpc/scaling.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace ntdpc {

namespace {

bool has_noise(const Matrix& sigma) { return sigma.size() > 0 && !sigma.isZero(0.0); }

Matrix covariance_sqrt_psd(const Matrix& sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
    Vector ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

Vector stack_repeat(const Vector& block, Index copies) {
    Vector out(block.size() * copies);
    for (Index i = 0; i < copies; ++i) out.segment(i * block.size(), block.size()) = block;
    return out;
}

struct BuiltPredictor {
    PredictorBundle bundle;
    Matrix qp_p1;  // maps col(u_ini, y_ini)
    Matrix qp_p2;  // maps u_N
};

BuiltPredictor build_controller(const Scenario& s, const HankelSet& hankels,
                                const ScalingPair& scaling) {
    auto [zp, zf] = stack_past_future(hankels);
    PredictorDims dims;
    dims.n = s.system_order > 0 ? s.system_order : s.plant.n();
    dims.n_u = s.plant.n_u();
    dims.n_y = s.plant.n_y();
    dims.T_ini = s.T_ini;
    dims.N = s.N;

    BuiltPredictor built;
    switch (s.controller) {
        case ControllerKind::ntdpc: {
            // BLUE weighting in scaled coordinates; identity when noise-free
            // (any SPD weight recovers the exact eta_1 from consistent data).
            Matrix sigma_scaled = has_noise(s.noise_sigma)
                                      ? scale_covariance(s.noise_sigma, scaling.my)
                                      : Matrix::Identity(dims.n_y, dims.n_y);
            NtdpcPredictor p = build_ntdpc(zp, zf, sigma_scaled, dims, scaling);
            built.bundle = bundle(p);
            built.qp_p1 = built.bundle.m1;
            built.qp_p2 = built.bundle.m2;
            return built;
        }
        case ControllerKind::spc: {
            SpcPredictor p = build_spc(hankels, dims, scaling);
            built.bundle = bundle(p);
            break;
        }
        case ControllerKind::smmpc: {
            SmmpcPredictor p = build_smmpc(zp, zf, dims, scaling);
            built.bundle = bundle(p);
            break;
        }
    }
    built.qp_p1.resize(built.bundle.m1.rows(), built.bundle.m1.cols() + built.bundle.m2.cols());
    built.qp_p1 << built.bundle.m1, built.bundle.m2;
    built.qp_p2 = built.bundle.m3;
    return built;
}

}  // namespace

void Scenario::validate() const {
    plant.validate();
    require(T_ini >= 1 && N >= 1 && M >= 1, "Scenario: horizons and data length must be positive");
    require(N >= T_ini, "Scenario: prediction horizon N must satisfy N >= T_ini");
    require(r_y.size() == plant.n_y() && r_u.size() == plant.n_u(),
            "Scenario: reference dimensions do not match the plant");
    require(u_lo.size() == plant.n_u() && u_hi.size() == plant.n_u() &&
                y_lo.size() == plant.n_y() && y_hi.size() == plant.n_y(),
            "Scenario: box dimensions do not match the plant");
    require(weights.Q.rows() == plant.n_y() && weights.R.rows() == plant.n_u() &&
                weights.Lambda_y.rows() == plant.n_y(),
            "Scenario: weight dimensions do not match the plant");
    require(steps >= T_ini + 2, "Scenario: too few steps for the controller to activate");
    const Index raw = M + T_ini + N + 1;
    const Index pe_bound = plant.n_u() * (T_ini + N + plant.n());
    if (raw < pe_bound) {
        throw std::invalid_argument(
            "Scenario: data length violates the persistency-of-excitation bound "
            "T >= n_u (T_ini + N + n)");
    }
    if (noise_sigma.size() > 0) {
        require(noise_sigma.rows() == plant.n_y() && noise_sigma.cols() == plant.n_y(),
                "Scenario: noise covariance dimension mismatch");
    }
}

RunLog run_closed_loop(const Scenario& s) {
    s.validate();

    const Index n_u = s.plant.n_u();
    const Index n_y = s.plant.n_y();
    const bool noisy = has_noise(s.noise_sigma);

    // Offline phase: excite, record, normalize, factor.
    const Index raw_len = s.M + s.T_ini + s.N + 1;
    Matrix u_pe = generate_pe_input(n_u, raw_len, s.pe_amplitude, seed_combine(s.seed, 1));
    NoiseModel data_noise{s.noise_sigma, seed_combine(s.seed, 2)};
    Trajectory data = simulate_lti(s.plant, Vector::Zero(s.plant.n()), u_pe,
                                   noisy ? &data_noise : nullptr);
    ScalingPair scaling = compute_scaling(data);
    Trajectory scaled = apply_scaling(data, scaling, ScaleDirection::forward);
    HankelSet hankels = build_hankels(scaled, s.T_ini, s.N, s.M);
    BuiltPredictor ctl = build_controller(s, hankels, scaling);

    // Tracking QP in scaled coordinates: divide signals by the channel scales,
    // conjugate the weights so the cost equals the physical-unit cost.
    TrackingQp proto;
    proto.P1 = ctl.qp_p1;
    proto.P2 = ctl.qp_p2;
    proto.z_ini = Vector::Zero((n_u + n_y) * s.T_ini);
    proto.r_u = stack_repeat(s.r_u.cwiseQuotient(scaling.mu), s.N);
    proto.r_y = stack_repeat(s.r_y.cwiseQuotient(scaling.my), s.N);
    proto.u_lo = stack_repeat(s.u_lo.cwiseQuotient(scaling.mu), s.N);
    proto.u_hi = stack_repeat(s.u_hi.cwiseQuotient(scaling.mu), s.N);
    proto.y_lo = stack_repeat(s.y_lo.cwiseQuotient(scaling.my), s.N);
    proto.y_hi = stack_repeat(s.y_hi.cwiseQuotient(scaling.my), s.N);
    const Matrix mu_d = scaling.mu.asDiagonal();
    const Matrix my_d = scaling.my.asDiagonal();
    proto.Q = expand_block_diag(my_d * s.weights.Q * my_d, s.N);
    proto.R = expand_block_diag(mu_d * s.weights.R * mu_d, s.N);
    proto.Lambda_y = expand_block_diag(my_d * s.weights.Lambda_y * my_d, s.N);
    proto.use_slack = s.controller == ControllerKind::ntdpc;
    proto.n_u = n_u;
    proto.n_y = n_y;
    QpSolver solver(proto);

    RunLog log;
    log.u = Matrix::Zero(n_u, s.steps);
    log.y_meas = Matrix::Zero(n_y, s.steps);
    log.y_clean = Matrix::Zero(n_y, s.steps);
    log.qp_status.assign(static_cast<std::size_t>(s.steps), QpStatus::solved);
    log.stage_cost = Vector::Zero(s.steps);
    log.cum_cost = Vector::Zero(s.steps);
    log.solve_seconds = Vector::Zero(s.steps);
    log.warmup_steps = s.T_ini + 1;

    Matrix noise_sqrt;
    if (noisy) noise_sqrt = covariance_sqrt_psd(s.noise_sigma);
    CounterRng rng(seed_combine(s.seed, 3));

    Vector x = s.x0.size() > 0 ? s.x0 : Vector::Zero(s.plant.n());
    require(x.size() == s.plant.n(), "Scenario: x0 dimension mismatch");
    Vector z_noise(n_y);
    Vector u_now = Vector::Zero(n_u);
    double running = 0.0;

    for (Index k = 0; k < s.steps; ++k) {
        log.y_clean.col(k) = s.plant.C * x;
        if (noisy) {
            for (Index c = 0; c < n_y; ++c) {
                z_noise(c) = rng.normal(rng_stream::loop_noise + static_cast<std::uint64_t>(c),
                                        static_cast<std::uint64_t>(k));
            }
            log.y_meas.col(k) = log.y_clean.col(k) + noise_sqrt * z_noise;
        } else {
            log.y_meas.col(k) = log.y_clean.col(k);
        }

        if (k > s.T_ini) {
            // Window per the shifted convention: u over k-T_ini..k-1, y over
            // k-T_ini+1..k (the current measurement closes the window).
            Vector z_phys((n_u + n_y) * s.T_ini);
            for (Index t = 0; t < s.T_ini; ++t) {
                z_phys.segment(t * n_u, n_u) = log.u.col(k - s.T_ini + t);
                z_phys.segment(n_u * s.T_ini + t * n_y, n_y) = log.y_meas.col(k - s.T_ini + 1 + t);
            }
            Vector z_scaled((n_u + n_y) * s.T_ini);
            z_scaled.head(n_u * s.T_ini) =
                scale_stacked(z_phys.head(n_u * s.T_ini), scaling.mu, ScaleDirection::forward);
            z_scaled.tail(n_y * s.T_ini) =
                scale_stacked(z_phys.tail(n_y * s.T_ini), scaling.my, ScaleDirection::forward);

            const auto t0 = std::chrono::steady_clock::now();
            QpSolution sol = solver.solve(z_scaled, true);
            const auto t1 = std::chrono::steady_clock::now();
            log.solve_seconds(k) = std::chrono::duration<double>(t1 - t0).count();
            log.qp_status[static_cast<std::size_t>(k)] = sol.status;

            if (sol.status == QpStatus::solved) {
                Vector u_scaled = sol.u_N.head(n_u);
                u_now = scale_stacked(u_scaled, scaling.mu, ScaleDirection::inverse);
                u_now = u_now.cwiseMax(s.u_lo).cwiseMin(s.u_hi);
            } else {
                ++log.hold_count;  // keep the previous input on solver failure
            }
        } else {
            u_now.setZero();  // warm-up fills the initial window
        }

        log.u.col(k) = u_now;
        const Vector ey = log.y_meas.col(k) - s.r_y;
        const Vector eu = u_now - s.r_u;
        log.stage_cost(k) = ey.dot(s.weights.Q * ey) + eu.dot(s.weights.R * eu);
        running += log.stage_cost(k);
        log.cum_cost(k) = running;

        x = s.plant.A * x + s.plant.B * u_now;
    }
    return log;
}

Vector performance_index(const RunLog& log, const Vector& r_y, const Vector& r_u, const Matrix& q,
                         const Matrix& r) {
    const Index steps = log.u.cols();
    require(log.y_meas.cols() == steps, "performance_index: inconsistent log");
    Vector out(steps);
    double running = 0.0;
    for (Index k = 0; k < steps; ++k) {
        const Vector ey = log.y_meas.col(k) - r_y;
        const Vector eu = log.u.col(k) - r_u;
        running += ey.dot(q * ey) + eu.dot(r * eu);
        out(k) = running;
    }
    return out;
}

McStats monte_carlo(const Scenario& s, Index runs, int threads) {
    require(runs >= 1, "monte_carlo: runs must be positive");
    s.validate();

    std::vector<RunLog> logs(static_cast<std::size_t>(runs));
    std::vector<char> ok(static_cast<std::size_t>(runs), 0);
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(runs));
    for (Index i = 0; i < runs; ++i) {
        seeds[static_cast<std::size_t>(i)] = seed_combine(s.seed, rng_stream::mc_run + static_cast<std::uint64_t>(i));
    }

    int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(runs)));

    std::atomic<Index> next{0};
    auto worker = [&]() {
        while (true) {
            const Index i = next.fetch_add(1);
            if (i >= runs) break;
            Scenario run_scenario = s;
            run_scenario.seed = seeds[static_cast<std::size_t>(i)];
            try {
                logs[static_cast<std::size_t>(i)] = run_closed_loop(run_scenario);
                ok[static_cast<std::size_t>(i)] = 1;
            } catch (const std::exception&) {
                ok[static_cast<std::size_t>(i)] = 0;  // aborted run, excluded from stats
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    McStats stats;
    stats.runs = runs;
    stats.seeds = seeds;

    const Index n_u = s.plant.n_u();
    const Index n_y = s.plant.n_y();
    stats.y_mean = Matrix::Zero(n_y, s.steps);
    stats.y_std = Matrix::Zero(n_y, s.steps);
    stats.u_mean = Matrix::Zero(n_u, s.steps);
    stats.u_std = Matrix::Zero(n_u, s.steps);
    stats.index_mean = Vector::Zero(s.steps);
    stats.index_std = Vector::Zero(s.steps);

    Index completed = 0;
    for (Index i = 0; i < runs; ++i) {
        if (!ok[static_cast<std::size_t>(i)]) continue;
        const RunLog& log = logs[static_cast<std::size_t>(i)];
        stats.y_mean += log.y_meas;
        stats.u_mean += log.u;
        stats.index_mean += log.cum_cost;
        stats.max_output_abs = std::max(stats.max_output_abs, log.y_meas.cwiseAbs().maxCoeff());
        ++completed;
    }
    stats.aborted = runs - completed;
    if (completed == 0) {
        throw std::runtime_error("monte_carlo: every run aborted");
    }
    stats.y_mean /= static_cast<double>(completed);
    stats.u_mean /= static_cast<double>(completed);
    stats.index_mean /= static_cast<double>(completed);

    for (Index i = 0; i < runs; ++i) {
        if (!ok[static_cast<std::size_t>(i)]) continue;
        const RunLog& log = logs[static_cast<std::size_t>(i)];
        stats.y_std += (log.y_meas - stats.y_mean).cwiseAbs2();
        stats.u_std += (log.u - stats.u_mean).cwiseAbs2();
        stats.index_std += (log.cum_cost - stats.index_mean).cwiseAbs2();
    }
    stats.y_std = (stats.y_std / static_cast<double>(completed)).cwiseSqrt();
    stats.u_std = (stats.u_std / static_cast<double>(completed)).cwiseSqrt();
    stats.index_std = (stats.index_std / static_cast<double>(completed)).cwiseSqrt();
    return stats;
}

double flops_model_spc(Index t_h, Index m) {
    return 9.0 * static_cast<double>(t_h) * static_cast<double>(t_h) * static_cast<double>(m);
}

double flops_model_ntdpc(Index t_h, Index m) {
    return 8.0 * static_cast<double>(t_h) * static_cast<double>(t_h) * static_cast<double>(m);
}

std::vector<TimingRow> timing_benchmark(const std::vector<Index>& t_h_list,
                                        const std::vector<Index>& m_list, int repeats) {
    require(!t_h_list.empty() && !m_list.empty(), "timing_benchmark: empty size lists");
    require(repeats >= 1, "timing_benchmark: repeats must be positive");

    // Stable first-order SISO plant; content only has to be generic.
    PlantModel plant;
    plant.A = Matrix::Constant(1, 1, 0.9);
    plant.B = Matrix::Constant(1, 1, 1.0);
    plant.C = Matrix::Constant(1, 1, 1.0);
    plant.Ts = 1.0;

    auto time_once = [](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(t1 - t0).count();
    };
    auto median_of = [&](auto&& fn, int reps) {
        std::vector<double> times;
        times.reserve(static_cast<std::size_t>(reps));
        for (int i = 0; i < reps; ++i) times.push_back(time_once(fn));
        std::sort(times.begin(), times.end());
        return times[times.size() / 2];
    };

    std::vector<TimingRow> rows;
    for (Index t_h : t_h_list) {
        for (Index m : m_list) {
            const Index raw_len = m + 2 * t_h + 1;
            Matrix u = generate_pe_input(1, raw_len, 1.0, 0xBEEF);
            NoiseModel noise{Matrix::Constant(1, 1, 0.01), 0xCAFE};
            Trajectory traj = simulate_lti(plant, Vector::Zero(1), u, &noise);
            HankelSet h = build_hankels(traj, t_h, t_h, m);
            auto [zp, zf] = stack_past_future(h);
            Matrix stacked(h.Up.rows() + h.Yp.rows() + h.Uf.rows(), m);
            stacked << h.Up, h.Yp, h.Uf;

            const double spc_time = median_of([&] { volatile double sink = pinv(stacked)(0, 0); (void)sink; }, repeats);

            // The second factor has the paper's stated size 2Th x (M - Th - n):
            // complete the signal right-basis to an explicit null-space basis
            // outside the timed region.
            const Index r = t_h + 1;  // n_u*T_ini + n for the SISO order-1 plant
            SvdFactors f = svd_full(zp);
            Matrix v1 = f.V.leftCols(r);
            Eigen::HouseholderQR<Matrix> qr(v1);
            Matrix full_q = qr.householderQ() * Matrix::Identity(m, m);
            Matrix zf_v2 = zf * full_q.rightCols(m - r);

            const double ntdpc_time = median_of(
                [&] {
                    SvdFactors a = svd_full(zp);
                    SvdFactors b = svd_full(zf_v2);
                    volatile double sink = a.sigma(0) + b.sigma(0);
                    (void)sink;
                },
                repeats);

            rows.push_back({"spc", t_h, m, spc_time, flops_model_spc(t_h, m)});
            rows.push_back({"ntdpc", t_h, m, ntdpc_time, flops_model_ntdpc(t_h, m)});
        }
    }
    return rows;
}

}  // namespace ntdpc
