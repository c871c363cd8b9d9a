#include "ntdpc/scaling.hpp"

#include <sstream>

namespace ntdpc {

namespace {

Vector mean_abs_rows(const Matrix& signal, const char* what) {
    require(signal.cols() >= 1, "compute_scaling: empty trajectory");
    Vector m = signal.cwiseAbs().rowwise().mean();
    for (Index i = 0; i < m.size(); ++i) {
        if (m(i) == 0.0) {
            std::ostringstream msg;
            msg << "compute_scaling: " << what << " channel " << i + 1
                << " is identically zero; scale undefined (substitute 1.0 explicitly if intended)";
            throw std::invalid_argument(msg.str());
        }
    }
    return m;
}

Matrix scale_rows(const Matrix& signal, const Vector& s, ScaleDirection dir) {
    if (dir == ScaleDirection::forward) {
        return s.cwiseInverse().asDiagonal() * signal;
    }
    return s.asDiagonal() * signal;
}

}  // namespace

ScalingPair compute_scaling(const Trajectory& traj) {
    ScalingPair s;
    s.mu = mean_abs_rows(traj.u, "input");
    s.my = mean_abs_rows(traj.y, "output");
    return s;
}

Trajectory apply_scaling(const Trajectory& traj, const ScalingPair& s, ScaleDirection dir) {
    require(s.mu.size() == traj.u.rows(), "apply_scaling: input scale dimension mismatch");
    require(s.my.size() == traj.y.rows(), "apply_scaling: output scale dimension mismatch");
    Trajectory out;
    out.u = scale_rows(traj.u, s.mu, dir);
    out.y = scale_rows(traj.y, s.my, dir);
    if (traj.y_clean.size() > 0) out.y_clean = scale_rows(traj.y_clean, s.my, dir);
    return out;
}

Vector scale_stacked(const Vector& window, const Vector& channel_scale, ScaleDirection dir) {
    const Index nc = channel_scale.size();
    require(nc >= 1 && window.size() % nc == 0,
            "scale_stacked: window length is not a multiple of the channel count");
    Vector out(window.size());
    for (Index i = 0; i < window.size(); ++i) {
        const double s = channel_scale(i % nc);
        out(i) = dir == ScaleDirection::forward ? window(i) / s : window(i) * s;
    }
    return out;
}

Matrix scale_covariance(const Matrix& sigma, const Vector& my) {
    require(sigma.rows() == my.size() && sigma.cols() == my.size(),
            "scale_covariance: dimension mismatch");
    const Vector inv = my.cwiseInverse();
    return inv.asDiagonal() * sigma * inv.asDiagonal();
}

Matrix expand_block_diag(const Matrix& per_sample, Index copies) {
    require(copies >= 1, "expand_block_diag: copies must be positive");
    const Index d = per_sample.rows();
    require(per_sample.cols() == d, "expand_block_diag: block must be square");
    Matrix out = Matrix::Zero(d * copies, d * copies);
    for (Index i = 0; i < copies; ++i) {
        out.block(i * d, i * d, d, d) = per_sample;
    }
    return out;
}

}  // namespace ntdpc
