#include "ntdpc/qp.hpp"

#include "ntdpc/csv.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

namespace ntdpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_weight(const Matrix& w, Index dim, const char* name) {
    require(w.rows() == dim && w.cols() == dim,
            std::string(name) + ": weight dimension does not match the horizon");
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    require((w - w.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
            std::string(name) + ": weight must be symmetric");
    Eigen::LLT<Matrix> llt(w);
    require(llt.info() == Eigen::Success, std::string(name) + ": weight must be positive definite");
}

bool boxes_consistent(const Vector& lo, const Vector& hi) {
    for (Index i = 0; i < lo.size(); ++i) {
        if (!(lo(i) <= hi(i))) return false;
    }
    return true;
}

double box_violation(const Vector& x, const Vector& lo, const Vector& hi) {
    double v = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        v = std::max(v, lo(i) - x(i));
        v = std::max(v, x(i) - hi(i));
    }
    return std::max(v, 0.0);
}

}  // namespace

void TrackingQp::validate() const {
    const Index p = P1.rows();
    const Index m = P2.cols();
    require(p >= 1 && m >= 1, "TrackingQp: empty predictor matrices");
    require(P2.rows() == p, "TrackingQp: P1 and P2 row counts differ");
    require(z_ini.size() == P1.cols(), "TrackingQp: z_ini length does not match P1");
    require(r_y.size() == p && r_u.size() == m, "TrackingQp: reference lengths mismatch");
    require(u_lo.size() == m && u_hi.size() == m && y_lo.size() == p && y_hi.size() == p,
            "TrackingQp: box bound lengths mismatch");
    check_weight(Q, p, "TrackingQp::Q");
    check_weight(R, m, "TrackingQp::R");
    if (use_slack) check_weight(Lambda_y, p, "TrackingQp::Lambda_y");
    require_finite(P1, "TrackingQp::P1");
    require_finite(P2, "TrackingQp::P2");
    // Assumption: references are admissible points of the constraint sets.
    if (boxes_consistent(u_lo, u_hi) && boxes_consistent(y_lo, y_hi)) {
        require(box_violation(r_u, u_lo, u_hi) <= 1e-9,
                "TrackingQp: r_u lies outside the input box");
        require(box_violation(r_y, y_lo, y_hi) <= 1e-9,
                "TrackingQp: r_y lies outside the output box");
    }
}

QpSolver::QpSolver(TrackingQp prototype, QpSettings settings)
    : qp_(std::move(prototype)), settings_(settings) {
    qp_.validate();
    assemble();
}

void QpSolver::assemble() {
    m_ = qp_.P2.cols();
    p_ = qp_.P1.rows();
    nx_ = m_ + p_;
    nc_ = qp_.use_slack ? nx_ : nx_ + p_;

    P_ = Matrix::Zero(nx_, nx_);
    if (qp_.use_slack) {
        P_.topLeftCorner(m_, m_) = 2.0 * (qp_.R + qp_.P2.transpose() * qp_.Lambda_y * qp_.P2);
        P_.topRightCorner(m_, p_) = -2.0 * qp_.P2.transpose() * qp_.Lambda_y;
        P_.bottomLeftCorner(p_, m_) = P_.topRightCorner(m_, p_).transpose();
        P_.bottomRightCorner(p_, p_) = 2.0 * (qp_.Q + qp_.Lambda_y);
    } else {
        P_.topLeftCorner(m_, m_) = 2.0 * qp_.R;
        P_.bottomRightCorner(p_, p_) = 2.0 * qp_.Q;
    }

    A_ = Matrix::Zero(nc_, nx_);
    A_.topLeftCorner(nx_, nx_).setIdentity();
    if (!qp_.use_slack) {
        A_.bottomLeftCorner(p_, m_) = -qp_.P2;
        A_.bottomRightCorner(p_, p_).setIdentity();
    }

    Matrix kkt = P_ + settings_.sigma_reg * Matrix::Identity(nx_, nx_) +
                 settings_.rho * A_.transpose() * A_;
    kkt_.compute(kkt);
    require(kkt_.info() == Eigen::Success, "QpSolver: failed to factor the splitting matrix");
}

Vector QpSolver::gradient_offset() const {
    const Vector c = qp_.P1 * qp_.z_ini;
    Vector q(nx_);
    q.head(m_) = -2.0 * qp_.R * qp_.r_u;
    q.tail(p_) = -2.0 * qp_.Q * qp_.r_y;
    if (qp_.use_slack) {
        q.head(m_) += 2.0 * qp_.P2.transpose() * (qp_.Lambda_y * c);
        q.tail(p_) -= 2.0 * qp_.Lambda_y * c;
    }
    return q;
}

QpSolution QpSolver::solve(const Vector& z_ini, bool warm) {
    require(z_ini.size() == qp_.P1.cols(), "QpSolver::solve: z_ini length mismatch");
    qp_.z_ini = z_ini;

    QpSolution sol;
    if (!boxes_consistent(qp_.u_lo, qp_.u_hi) || !boxes_consistent(qp_.y_lo, qp_.y_hi)) {
        sol.status = QpStatus::infeasible;
        sol.u_N = Vector::Zero(m_);
        sol.y_N_hat = Vector::Zero(p_);
        sol.kkt_residual = kInf;
        return sol;
    }

    const Vector c = qp_.P1 * z_ini;
    const Vector q = gradient_offset();

    Vector lo(nc_), hi(nc_);
    lo.head(m_) = qp_.u_lo;
    hi.head(m_) = qp_.u_hi;
    lo.segment(m_, p_) = qp_.y_lo;
    hi.segment(m_, p_) = qp_.y_hi;
    if (!qp_.use_slack) {
        lo.tail(p_) = c;
        hi.tail(p_) = c;
    }

    if (warm && have_previous_) {
        // Receding-horizon shift by one sample block when the structure is known.
        if (qp_.n_u > 0 && qp_.n_y > 0 && m_ > qp_.n_u && p_ > qp_.n_y) {
            Vector u = x_.head(m_), y = x_.tail(p_);
            u.head(m_ - qp_.n_u) = u.tail(m_ - qp_.n_u).eval();
            y.head(p_ - qp_.n_y) = y.tail(p_ - qp_.n_y).eval();
            x_.head(m_) = u;
            x_.tail(p_) = y;
        }
        z_ = A_ * x_;
        z_ = z_.cwiseMax(lo).cwiseMin(hi);
    } else {
        x_.resize(nx_);
        x_.head(m_) = qp_.r_u.cwiseMax(qp_.u_lo).cwiseMin(qp_.u_hi);
        x_.tail(p_) = qp_.r_y.cwiseMax(qp_.y_lo).cwiseMin(qp_.y_hi);
        z_ = A_ * x_;
        z_ = z_.cwiseMax(lo).cwiseMin(hi);
        y_ = Vector::Zero(nc_);
    }

    const double rho = settings_.rho;
    int iter = 0;
    bool converged = false;
    Vector ax(nc_), rhs(nx_);
    for (iter = 1; iter <= settings_.max_iters; ++iter) {
        rhs = settings_.sigma_reg * x_ - q + A_.transpose() * (rho * z_ - y_);
        x_ = kkt_.solve(rhs);
        ax.noalias() = A_ * x_;
        z_ = (ax + y_ / rho).cwiseMax(lo).cwiseMin(hi);
        y_ += rho * (ax - z_);

        if (iter % settings_.check_every == 0 || iter == settings_.max_iters) {
            const double r_prim = (ax - z_).cwiseAbs().maxCoeff();
            const Vector dual = P_ * x_ + q + A_.transpose() * y_;
            const double r_dual = dual.cwiseAbs().maxCoeff();
            const double eps_prim =
                settings_.eps_abs +
                settings_.eps_rel * std::max(ax.cwiseAbs().maxCoeff(), z_.cwiseAbs().maxCoeff());
            const double eps_dual =
                settings_.eps_abs +
                settings_.eps_rel * std::max({(P_ * x_).cwiseAbs().maxCoeff(),
                                              q.cwiseAbs().maxCoeff(),
                                              (A_.transpose() * y_).cwiseAbs().maxCoeff()});
            if (r_prim <= eps_prim && r_dual <= eps_dual) {
                converged = true;
                break;
            }
        }
    }
    have_previous_ = true;

    sol.u_N = x_.head(m_);
    sol.y_N_hat = x_.tail(p_);
    sol.iterations = std::min(iter, settings_.max_iters);
    sol.status = converged ? QpStatus::solved : QpStatus::max_iters;

    const Vector ry_err = sol.y_N_hat - qp_.r_y;
    const Vector ru_err = sol.u_N - qp_.r_u;
    sol.objective = ry_err.dot(qp_.Q * ry_err) + ru_err.dot(qp_.R * ru_err);
    if (qp_.use_slack) {
        sol.sigma_y = sol.y_N_hat - c - qp_.P2 * sol.u_N;
        sol.objective += sol.sigma_y.dot(qp_.Lambda_y * sol.sigma_y);
    } else {
        sol.sigma_y.resize(0);
    }
    sol.kkt_residual = kkt_residual(qp_, sol);
    return sol;
}

QpSolution solve_tracking_qp(const TrackingQp& qp, const QpSettings& settings) {
    QpSolver solver(qp, settings);
    return solver.solve();
}

double kkt_residual(const TrackingQp& qp, const QpSolution& sol) {
    const Index m = qp.P2.cols();
    const Index p = qp.P1.rows();
    const Index nx = m + p;
    if (sol.u_N.size() != m || sol.y_N_hat.size() != p) return kInf;

    Vector x(nx);
    x << sol.u_N, sol.y_N_hat;
    const Vector c = qp.P1 * qp.z_ini;

    // Gradient of the eliminated-slack objective.
    Vector g(nx);
    g.head(m) = 2.0 * qp.R * (sol.u_N - qp.r_u);
    g.tail(p) = 2.0 * qp.Q * (sol.y_N_hat - qp.r_y);
    if (qp.use_slack) {
        const Vector slack = sol.y_N_hat - c - qp.P2 * sol.u_N;
        g.head(m) -= 2.0 * qp.P2.transpose() * (qp.Lambda_y * slack);
        g.tail(p) += 2.0 * qp.Lambda_y * slack;
    }

    Vector lo(nx), hi(nx);
    lo << qp.u_lo, qp.y_lo;
    hi << qp.u_hi, qp.y_hi;

    double primal = box_violation(x, lo, hi);

    if (!qp.use_slack) {
        // Fit the equality multiplier on the inactive components, then check
        // stationarity of the Lagrangian everywhere.
        Matrix e(p, nx);
        e.leftCols(m) = -qp.P2;
        e.rightCols(p) = Matrix::Identity(p, p);
        primal = std::max(primal, (e * x - c).cwiseAbs().maxCoeff());

        std::vector<Index> free_idx;
        const double atol = 1e-7;
        for (Index i = 0; i < nx; ++i) {
            const bool at_lo = std::isfinite(lo(i)) && x(i) - lo(i) <= atol * std::max(1.0, std::abs(lo(i)));
            const bool at_hi = std::isfinite(hi(i)) && hi(i) - x(i) <= atol * std::max(1.0, std::abs(hi(i)));
            if (!at_lo && !at_hi) free_idx.push_back(i);
        }
        if (!free_idx.empty()) {
            Matrix et(free_idx.size(), p);
            Vector gf(free_idx.size());
            for (std::size_t k = 0; k < free_idx.size(); ++k) {
                et.row(k) = e.col(free_idx[k]).transpose();
                gf(k) = g(free_idx[k]);
            }
            Vector nu = et.colPivHouseholderQr().solve(-gf);
            g += e.transpose() * nu;
        }
    }

    double stationarity = 0.0;
    double complementarity = 0.0;
    const double atol = 1e-7;
    for (Index i = 0; i < nx; ++i) {
        const bool at_lo = std::isfinite(lo(i)) && x(i) - lo(i) <= atol * std::max(1.0, std::abs(lo(i)));
        const bool at_hi = std::isfinite(hi(i)) && hi(i) - x(i) <= atol * std::max(1.0, std::abs(hi(i)));
        if (at_lo && !at_hi) {
            stationarity = std::max(stationarity, std::max(0.0, -g(i)));
        } else if (at_hi && !at_lo) {
            stationarity = std::max(stationarity, std::max(0.0, g(i)));
        } else if (!at_lo && !at_hi) {
            stationarity = std::max(stationarity, std::abs(g(i)));
        }
        if (std::isfinite(lo(i))) {
            complementarity =
                std::max(complementarity, std::min(std::max(x(i) - lo(i), 0.0), std::max(g(i), 0.0)));
        }
        if (std::isfinite(hi(i))) {
            complementarity =
                std::max(complementarity, std::min(std::max(hi(i) - x(i), 0.0), std::max(-g(i), 0.0)));
        }
    }
    return std::max({stationarity, primal, complementarity});
}

void dump_qp(const TrackingQp& qp, const std::filesystem::path& csv_path) {
    const Index m = qp.P2.cols();
    const Index p = qp.P1.rows();
    const Index nx = m + p;

    Matrix big = Matrix::Zero(nx, nx);
    big.topLeftCorner(m, m) = 2.0 * qp.R;
    big.bottomRightCorner(p, p) = 2.0 * qp.Q;
    if (qp.use_slack) {
        big.topLeftCorner(m, m) += 2.0 * qp.P2.transpose() * qp.Lambda_y * qp.P2;
        big.topRightCorner(m, p) = -2.0 * qp.P2.transpose() * qp.Lambda_y;
        big.bottomLeftCorner(p, m) = big.topRightCorner(m, p).transpose();
        big.bottomRightCorner(p, p) += 2.0 * qp.Lambda_y;
    }
    const Vector c = qp.P1 * qp.z_ini;
    Vector q(nx);
    q.head(m) = -2.0 * qp.R * qp.r_u;
    q.tail(p) = -2.0 * qp.Q * qp.r_y;
    if (qp.use_slack) {
        q.head(m) += 2.0 * qp.P2.transpose() * (qp.Lambda_y * c);
        q.tail(p) -= 2.0 * qp.Lambda_y * c;
    }

    CsvTable table;
    table.columns = {"field", "i", "j", "value"};
    auto add = [&table](const char* field, Index i, Index j, double v) {
        table.rows.push_back({});
        table.rows.back().labels = {field};
        table.rows.back().values = {static_cast<double>(i), static_cast<double>(j), v};
    };
    for (Index i = 0; i < nx; ++i) {
        for (Index j = 0; j < nx; ++j) add("hessian", i, j, big(i, j));
    }
    for (Index i = 0; i < nx; ++i) add("gradient", i, 0, q(i));
    for (Index i = 0; i < m; ++i) {
        add("u_lo", i, 0, qp.u_lo(i));
        add("u_hi", i, 0, qp.u_hi(i));
    }
    for (Index i = 0; i < p; ++i) {
        add("y_lo", i, 0, qp.y_lo(i));
        add("y_hi", i, 0, qp.y_hi(i));
    }
    write_csv(csv_path, table);
}

}  // namespace ntdpc
