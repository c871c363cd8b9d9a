#pragma once

#include "ntdpc/types.hpp"

#include <stdexcept>

namespace ntdpc {

// Estimation failures carry the name of the violated condition so callers can
// tell a bad data matrix from a programming error.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SvdError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A = W * diag(sigma) * V^T. Left vectors are sign-fixed: the first nonzero
// entry of every column of W is non-negative, so factorizations are
// deterministic enough for golden-file comparisons.
struct SvdFactors {
    Matrix W;       // left singular vectors, one column per singular value
    Vector sigma;   // non-increasing, all >= 0
    Matrix V;       // right singular vectors; square when computed with full_v
};

enum class SvdVectors {
    thin,    // V has min(rows, cols) columns
    full_v,  // V is cols x cols; trailing columns span the null space
};

struct PartitionedSvd {
    Matrix W1;      // signal left vectors (rank columns)
    Vector sigma1;  // leading singular values
    Matrix V1;      // signal right vectors
    Matrix W2;      // residual left vectors
    Vector sigma2;  // trailing singular values
    Matrix V2;      // residual right vectors (includes null space for full_v input)
    Index rank = 0;
};

// A = L * Qo with L lower-trapezoidal (non-negative diagonal) and Qo having
// orthonormal rows.
struct LqFactors {
    Matrix L;
    Matrix Qo;
};

SvdFactors svd_full(const Matrix& a, SvdVectors mode = SvdVectors::thin);

// Singular values only; cheaper when vectors are not needed.
Vector singular_values(const Matrix& a);

PartitionedSvd svd_partition(const SvdFactors& f, Index r);

// Moore-Penrose pseudo-inverse with relative singular-value cutoff tol*sigma_max.
Matrix pinv(const Matrix& a, double tol = 1e-10);

LqFactors lq_factor(const Matrix& a);

// Numerical rank at a relative singular-value threshold.
Index numerical_rank(const Vector& sigma, double rel_tol = 1e-8);
Index numerical_rank(const Matrix& a, double rel_tol = 1e-8);

// Minimum-variance solution of
//     min (y_ini_m - L_y eta)^T Sigma^{-1} (y_ini_m - L_y eta)
//     s.t. L_u eta = u_ini
// realized through the weighted pseudo-inverse below. Falls back to a dense
// KKT solve when the projected normal matrix is ill-conditioned.
Vector constrained_wls(const Matrix& l_u, const Matrix& l_y, const Matrix& sigma_zeta,
                       const Vector& u_ini, const Vector& y_ini_m);

// The matrix that maps col(u_ini, y_ini_m) to the estimate above. Satisfies
// blue_pinv(L_u, L_y, S) * col(L_u, L_y) = I whenever L_u has full row rank
// and the output equations determine the remaining components on null(L_u).
Matrix blue_pinv(const Matrix& l_u, const Matrix& l_y, const Matrix& sigma_zeta);

}  // namespace ntdpc
