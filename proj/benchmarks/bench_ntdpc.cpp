#include "ntdpc/control_loop.hpp"
#include "ntdpc/hankel.hpp"
#include "ntdpc/numerics.hpp"
#include "ntdpc/predictors.hpp"
#include "ntdpc/qp.hpp"
#include "ntdpc/scaling.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace ntdpc;

struct BenchData {
    Matrix zp, zf;
    HankelSet hankels;
    ScalingPair scaling;
    PredictorDims dims;
};

BenchData make_data(Index t_h, Index m) {
    PlantModel plant = boeing747_plant();
    const Index raw = m + 2 * t_h + 1;
    Matrix u = generate_pe_input(plant.n_u(), raw, 1.0, 42);
    NoiseModel noise{0.25 * Matrix::Identity(2, 2), 7};
    Trajectory traj = simulate_lti(plant, Vector::Zero(4), u, &noise);
    BenchData d;
    d.scaling = compute_scaling(traj);
    Trajectory scaled = apply_scaling(traj, d.scaling, ScaleDirection::forward);
    d.hankels = build_hankels(scaled, t_h, t_h, m);
    std::tie(d.zp, d.zf) = stack_past_future(d.hankels);
    d.dims = {4, 2, 2, t_h, t_h};
    return d;
}

void BM_SvdPastStack(benchmark::State& state) {
    BenchData d = make_data(state.range(0), state.range(1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(svd_full(d.zp));
    }
}
BENCHMARK(BM_SvdPastStack)->Args({10, 500})->Args({20, 1000});

void BM_BuildNtdpc(benchmark::State& state) {
    BenchData d = make_data(state.range(0), state.range(1));
    Matrix sigma = scale_covariance(0.25 * Matrix::Identity(2, 2), d.scaling.my);
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_ntdpc(d.zp, d.zf, sigma, d.dims, d.scaling));
    }
}
BENCHMARK(BM_BuildNtdpc)->Args({10, 500})->Args({20, 1000});

void BM_BuildSpc(benchmark::State& state) {
    BenchData d = make_data(state.range(0), state.range(1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_spc(d.hankels, d.dims, d.scaling));
    }
}
BENCHMARK(BM_BuildSpc)->Args({10, 500})->Args({20, 1000});

void BM_QpSolveStep(benchmark::State& state) {
    BenchData d = make_data(10, 500);
    Matrix sigma = scale_covariance(0.25 * Matrix::Identity(2, 2), d.scaling.my);
    NtdpcPredictor p = build_ntdpc(d.zp, d.zf, sigma, d.dims, d.scaling);

    TrackingQp qp;
    qp.P1 = p.P1;
    qp.P2 = p.P2;
    qp.z_ini = Vector::Zero(p.P1.cols());
    qp.r_y = Vector::Zero(p.P1.rows());
    qp.r_u = Vector::Zero(p.P2.cols());
    qp.Q = Matrix::Identity(qp.r_y.size(), qp.r_y.size());
    qp.R = 0.01 * Matrix::Identity(qp.r_u.size(), qp.r_u.size());
    qp.Lambda_y = 1000.0 * Matrix::Identity(qp.r_y.size(), qp.r_y.size());
    qp.u_lo = Vector::Constant(qp.r_u.size(), -20.0);
    qp.u_hi = Vector::Constant(qp.r_u.size(), 20.0);
    qp.y_lo = Vector::Constant(qp.r_y.size(), -25.0);
    qp.y_hi = Vector::Constant(qp.r_y.size(), 25.0);
    qp.n_u = 2;
    qp.n_y = 2;

    QpSolver solver(qp);
    Vector z = 0.1 * Vector::Ones(qp.z_ini.size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(solver.solve(z, true));
    }
}
BENCHMARK(BM_QpSolveStep);

}  // namespace

BENCHMARK_MAIN();
