#pragma once

#include "ntdpc/plant.hpp"
#include "ntdpc/types.hpp"

namespace ntdpc {

// Per-channel normalization scales m_u = mean|u_i|, m_y = mean|y_i|. Signals
// are divided by these before any factorization so rows of the stacked data
// matrices carry comparable weight.
struct ScalingPair {
    Vector mu;  // n_u, strictly positive
    Vector my;  // n_y, strictly positive
};

enum class ScaleDirection { forward, inverse };

// Throws when a channel is identically zero (scale undefined); callers may
// substitute 1.0 explicitly if that is intended.
ScalingPair compute_scaling(const Trajectory& traj);

Trajectory apply_scaling(const Trajectory& traj, const ScalingPair& s, ScaleDirection dir);

// Scale a stacked window (channel blocks repeating over time).
Vector scale_stacked(const Vector& window, const Vector& channel_scale, ScaleDirection dir);

// Covariance of My^{-1} * zeta when zeta has covariance sigma.
Matrix scale_covariance(const Matrix& sigma, const Vector& my);

// Block-diagonal expansion of a per-sample covariance over `copies` samples.
Matrix expand_block_diag(const Matrix& per_sample, Index copies);

}  // namespace ntdpc
