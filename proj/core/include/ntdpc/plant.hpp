#pragma once

#include "ntdpc/types.hpp"

#include <cstdint>

namespace ntdpc {

// Discrete LTI triple x(k+1) = A x(k) + B u(k), y(k) = C x(k) + zeta(k).
// Ground truth for simulation only; controllers never read A, B, C.
struct PlantModel {
    Matrix A;
    Matrix B;
    Matrix C;
    double Ts = 1.0;  // seconds

    Index n() const { return A.rows(); }
    Index n_u() const { return B.cols(); }
    Index n_y() const { return C.rows(); }

    void validate() const;
};

// Longitudinal Boeing 747 motion discretized at Ts = 0.1 s.
PlantModel boeing747_plant();

struct NoiseModel {
    Matrix sigma;        // n_y x n_y covariance, symmetric PSD
    std::uint64_t seed = 0;
};

// Columns are samples. y holds measured outputs (noise included); y_clean is
// empty when the trajectory was loaded from disk.
struct Trajectory {
    Matrix u;
    Matrix y;
    Matrix y_clean;

    Index length() const { return u.cols(); }
};

Trajectory simulate_lti(const PlantModel& plant, const Vector& x0, const Matrix& u_seq,
                        const NoiseModel* noise = nullptr);

// Zero-mean uniform white noise in [-amplitude, amplitude); persistently
// exciting of any order with probability one.
Matrix generate_pe_input(Index n_u, Index length, double amplitude, std::uint64_t seed);

// Rank of the depth-L block Hankel of the input; full row rank (n_u * depth)
// certifies persistency of excitation of order L.
Index input_hankel_rank(const Matrix& u_seq, Index depth, double rel_tol = 1e-8);

struct PlantDiagnostics {
    bool controllable = false;
    bool observable = false;
    Index controllability_rank = 0;
    Index observability_rank = 0;
};

PlantDiagnostics analyze_plant(const PlantModel& plant);

// Steady-state input u_ss with C (I - A)^{-1} B u_ss = r_y, solved from the
// equilibrium equations; throws when the plant admits no such equilibrium.
Vector steady_state_input(const PlantModel& plant, const Vector& r_y);

}  // namespace ntdpc
