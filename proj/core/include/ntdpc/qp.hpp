#pragma once

#include "ntdpc/types.hpp"

#include <Eigen/Cholesky>

#include <filesystem>

namespace ntdpc {

// Slack-regularized tracking problem in the decision variables x = (u_N, y_N):
//   min (y-r_y)' Q (y-r_y) + (u-r_u)' R (u-r_u) + sigma' Lambda_y sigma
// with sigma = y - P1 z_ini - P2 u eliminated through the predictor equality.
// With use_slack off the equality y = P1 z_ini + P2 u is enforced exactly and
// the slack term disappears. Everything lives in scaled coordinates.
struct TrackingQp {
    Matrix P1;
    Matrix P2;
    Vector z_ini;      // stacked measured window col(u_ini, y_ini_m)
    Vector r_y;        // stacked output reference, n_y*N
    Vector r_u;        // stacked input reference, n_u*N
    Matrix Q;          // n_y*N square, SPD
    Matrix R;          // n_u*N square, SPD
    Matrix Lambda_y;   // n_y*N square, SPD (ignored when use_slack is off)
    Vector u_lo, u_hi; // per-component input box
    Vector y_lo, y_hi; // per-component output box
    bool use_slack = true;

    // Per-sample block sizes; when set they enable the receding-horizon
    // warm-start shift. Zero leaves warm starts unshifted.
    Index n_u = 0;
    Index n_y = 0;

    void validate() const;  // throws std::invalid_argument on structural errors
};

enum class QpStatus { solved, max_iters, infeasible };

struct QpSolution {
    Vector u_N;
    Vector y_N_hat;
    Vector sigma_y;  // zero-length when use_slack is off
    double objective = 0.0;
    QpStatus status = QpStatus::solved;
    int iterations = 0;
    double kkt_residual = 0.0;
};

struct QpSettings {
    double rho = 1.0;        // fixed penalty
    double sigma_reg = 1e-6; // proximal regularization
    double eps_abs = 1e-8;
    double eps_rel = 1e-6;
    int max_iters = 20000;
    int check_every = 10;
};

// Operator-splitting solver with a cached factorization; reuse one instance
// across receding-horizon steps (only z_ini changes).
class QpSolver {
public:
    explicit QpSolver(TrackingQp prototype, QpSettings settings = {});

    // Solve with a new measured window; warm starts from the shifted previous
    // solution when warm is true and a previous solution exists.
    QpSolution solve(const Vector& z_ini, bool warm = true);
    QpSolution solve() { return solve(qp_.z_ini, false); }

    const TrackingQp& problem() const { return qp_; }

private:
    void assemble();
    Vector gradient_offset() const;  // q vector for the current z_ini

    TrackingQp qp_;
    QpSettings settings_;
    Index m_ = 0, p_ = 0, nx_ = 0, nc_ = 0;
    Matrix P_;
    Matrix A_;
    Eigen::LLT<Matrix> kkt_;
    Vector x_, z_, y_;
    bool have_previous_ = false;
};

QpSolution solve_tracking_qp(const TrackingQp& qp, const QpSettings& settings = {});

// Max of stationarity (projected gradient over the boxes, with an equality
// multiplier fit by least squares when the predictor equality is hard),
// primal feasibility violation, and complementary-slackness violation.
double kkt_residual(const TrackingQp& qp, const QpSolution& sol);

// Hessian, gradient and bounds of the eliminated-slack form, for offline
// inspection.
void dump_qp(const TrackingQp& qp, const std::filesystem::path& csv_path);

}  // namespace ntdpc
