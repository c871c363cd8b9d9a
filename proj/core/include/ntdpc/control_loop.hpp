#pragma once

#include "ntdpc/plant.hpp"
#include "ntdpc/predictors.hpp"
#include "ntdpc/qp.hpp"
#include "ntdpc/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ntdpc {

using ControllerKind = PredictorKind;

// Per-sample weight blocks in physical units; the loop maps them into scaled
// coordinates before handing them to the QP.
struct StageWeights {
    Matrix Q;         // n_y x n_y
    Matrix R;         // n_u x n_u
    Matrix Lambda_y;  // n_y x n_y
};

struct Scenario {
    PlantModel plant;
    ControllerKind controller = ControllerKind::ntdpc;
    Index T_ini = 0;
    Index N = 0;
    Index M = 0;            // Hankel column count
    Matrix noise_sigma;     // per-sample n_y x n_y; empty or zero = noise-free
    Vector r_y;             // per-sample output reference
    Vector r_u;             // per-sample input reference (steady-state input)
    Vector u_lo, u_hi;      // per-sample input box
    Vector y_lo, y_hi;      // per-sample output box
    StageWeights weights;
    Index steps = 0;        // closed-loop length including warm-up
    std::uint64_t seed = 0;
    double pe_amplitude = 1.0;
    Vector x0;              // empty = zero
    Index system_order = 0; // 0 = take the plant order

    void validate() const;
};

struct RunLog {
    Matrix u;        // n_u x steps, applied inputs
    Matrix y_meas;   // measured outputs
    Matrix y_clean;  // noise-free outputs
    std::vector<QpStatus> qp_status;  // per step; warm-up steps are `solved`
    Vector stage_cost;     // realized stage cost per Definition of the tracking cost
    Vector cum_cost;       // running sum of stage costs
    Vector solve_seconds;  // wall time of each QP solve (0 during warm-up)
    Index warmup_steps = 0;
    Index hold_count = 0;  // steps where the previous input was held
};

RunLog run_closed_loop(const Scenario& s);

// Cumulative realized tracking cost; row k holds the sum of stage costs up to
// and including step k.
Vector performance_index(const RunLog& log, const Vector& r_y, const Vector& r_u, const Matrix& q,
                         const Matrix& r);

struct McStats {
    Index runs = 0;
    Index aborted = 0;
    std::vector<std::uint64_t> seeds;
    Matrix y_mean, y_std;         // n_y x steps
    Matrix u_mean, u_std;         // n_u x steps
    Vector index_mean, index_std; // cumulative cost per step
    double max_output_abs = 0.0;  // worst |y| over every completed run
};

// Independent closed loops with per-run seeds derived from the scenario seed;
// runs execute in parallel, aggregation order is fixed.
McStats monte_carlo(const Scenario& s, Index runs, int threads = 0);

struct TimingRow {
    std::string method;  // "spc" or "ntdpc"
    Index t_h = 0;
    Index m = 0;
    double median_seconds = 0.0;
    double flops_model = 0.0;  // dominant-term operation count
};

// SISO complexity comparison: SPC's pseudo-inverse of the 3Th x M stack vs the
// two SVDs of the reduced pipeline. The flop model keeps only the dominant
// terms 9 Th^2 M and 8 Th^2 M.
std::vector<TimingRow> timing_benchmark(const std::vector<Index>& t_h_list,
                                        const std::vector<Index>& m_list, int repeats);

double flops_model_spc(Index t_h, Index m);
double flops_model_ntdpc(Index t_h, Index m);

}  // namespace ntdpc
