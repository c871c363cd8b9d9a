#pragma once

#include "ntdpc/hankel.hpp"
#include "ntdpc/numerics.hpp"
#include "ntdpc/scaling.hpp"
#include "ntdpc/types.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>

namespace ntdpc {

class PredictorBuildError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PredictorDims {
    Index n = 0;      // system order
    Index n_u = 0;
    Index n_y = 0;
    Index T_ini = 0;
    Index N = 0;

    Index r() const { return n_u * T_ini + n; }  // rank of the noise-free past stack
    Index past_rows() const { return (n_u + n_y) * T_ini; }
    Index future_rows() const { return (n_u + n_y) * N; }
};

// Signal-rank factors of the stacked data matrices. All matrices live in
// scaled coordinates. Row partitions follow the col(u, y) stacking:
// L1 = [L_u; L_y], S = [S_u; S_y], Lf1 = [L_fu; L_fy].
struct ReducedFactors {
    PredictorDims dims;
    Matrix L1;        // past_rows x r, = W1 * diag(sigma1)
    Matrix V1;        // M x r
    Matrix V2;        // M x (M - r) residual + null basis; empty unless requested
    Vector sigma1;    // leading past singular values
    Vector sigma2;    // trailing past singular values
    Matrix S;         // Zf * V1, future_rows x r
    Matrix Lf1;       // future_rows x (n_u * N)
    Vector sigma_f1;  // kept future singular values
    Vector sigma_f2;  // discarded future singular values
    double lfu_condition = 0.0;

    Eigen::Block<const Matrix> L_u() const { return L1.topRows(dims.n_u * dims.T_ini); }
    Eigen::Block<const Matrix> L_y() const { return L1.bottomRows(dims.n_y * dims.T_ini); }
    Eigen::Block<const Matrix> S_u() const { return S.topRows(dims.n_u * dims.N); }
    Eigen::Block<const Matrix> S_y() const { return S.bottomRows(dims.n_y * dims.N); }
    Eigen::Block<const Matrix> L_fu() const { return Lf1.topRows(dims.n_u * dims.N); }
    Eigen::Block<const Matrix> L_fy() const { return Lf1.bottomRows(dims.n_y * dims.N); }
};

struct NtdpcPredictor {
    Matrix P1;  // (n_y N) x ((n_u + n_y) T_ini), maps col(u_ini, y_ini_m)
    Matrix P2;  // (n_y N) x (n_u N), maps u_N
    Matrix blue;
    ReducedFactors factors;
    ScalingPair scaling;
    PredictorDims dims;
};

struct SpcPredictor {
    Matrix P1;     // maps u_ini
    Matrix P2;     // maps y_ini
    Matrix Gamma;  // maps u_N
    ScalingPair scaling;
    PredictorDims dims;
};

struct SmmpcPredictor {
    Matrix E1;  // maps u_ini
    Matrix E2;  // maps y_ini
    Matrix E3;  // maps u_N
    ScalingPair scaling;
    PredictorDims dims;
};

// Rank-partitioned SVD of the past stack at r = n_u*T_ini + n. Set
// keep_null_basis to get V2 spanning the full null space (costly for wide
// matrices; the predictor build does not need it).
PartitionedSvd factor_zp(const Matrix& zp, Index n, Index T_ini, Index n_u,
                         bool keep_null_basis = false);

// sigma_zeta is the per-sample output-noise covariance in the same (scaled)
// coordinates as the data matrices; it is block-expanded over T_ini inside.
NtdpcPredictor build_ntdpc(const Matrix& zp, const Matrix& zf, const Matrix& sigma_zeta,
                           const PredictorDims& dims, const ScalingPair& scaling);

SpcPredictor build_spc(const HankelSet& h, const PredictorDims& dims, const ScalingPair& scaling);

SmmpcPredictor build_smmpc(const Matrix& zp, const Matrix& zf, const PredictorDims& dims,
                           const ScalingPair& scaling);

Vector predict(const NtdpcPredictor& p, const Vector& u_ini, const Vector& y_ini_m, const Vector& u_n);
Vector predict(const SpcPredictor& p, const Vector& u_ini, const Vector& y_ini_m, const Vector& u_n);
Vector predict(const SmmpcPredictor& p, const Vector& u_ini, const Vector& y_ini_m, const Vector& u_n);

// I_s = sigma_max(Sigma2)^2 / sigma_min(Sigma1)^2; zero when Sigma2 is empty.
double sensitivity_index(const Vector& sigma1, const Vector& sigma2);

// Largest-relative-gap order estimate; diagnostic only, a configured order
// always wins. nullopt when no gap exceeds 10x.
std::optional<Index> estimate_order(const Vector& sigma, double floor_ratio = 1e-3);

// Uniform online form of the three predictors: y_hat = m1*a + m2*b (+ m3*c).
enum class PredictorKind { ntdpc, spc, smmpc };

struct PredictorBundle {
    PredictorKind kind = PredictorKind::ntdpc;
    PredictorDims dims;
    ScalingPair scaling;
    Matrix m1;
    Matrix m2;
    Matrix m3;  // empty for ntdpc
};

PredictorBundle bundle(const NtdpcPredictor& p);
PredictorBundle bundle(const SpcPredictor& p);
PredictorBundle bundle(const SmmpcPredictor& p);

Vector predict(const PredictorBundle& b, const Vector& u_ini, const Vector& y_ini_m, const Vector& u_n);

// Flat binary bundle; round-trip is bit-exact.
void save_predictor(const PredictorBundle& b, const std::filesystem::path& path);
PredictorBundle load_predictor(const std::filesystem::path& path);

}  // namespace ntdpc
