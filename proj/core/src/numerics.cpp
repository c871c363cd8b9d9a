#include "ntdpc/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ntdpc {

namespace {

// First-nonzero-positive convention on paired (W, V) columns; unpaired
// trailing V columns (null space) are normalized on their own.
void fix_signs(Matrix& w, Matrix& v) {
    const Index paired = std::min(w.cols(), v.cols());
    for (Index j = 0; j < w.cols(); ++j) {
        Index i = 0;
        while (i < w.rows() && w(i, j) == 0.0) ++i;
        if (i < w.rows() && w(i, j) < 0.0) {
            w.col(j) = -w.col(j);
            if (j < paired) v.col(j) = -v.col(j);
        }
    }
    for (Index j = paired; j < v.cols(); ++j) {
        Index i = 0;
        while (i < v.rows() && v(i, j) == 0.0) ++i;
        if (i < v.rows() && v(i, j) < 0.0) v.col(j) = -v.col(j);
    }
}

void check_spd_input(const Matrix& sigma, Index expected_dim) {
    require(sigma.rows() == sigma.cols(), "Sigma_zeta must be square");
    require(sigma.rows() == expected_dim, "Sigma_zeta dimension does not match L_y rows");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument("Sigma_zeta must be symmetric");
    }
}

struct BlueParts {
    Matrix lu_pinv;      // L_u^T (L_u L_u^T)^{-1}, empty when L_u has no rows
    Matrix projector;    // I - lu_pinv * L_u
    Matrix sigma_inv_ly; // Sigma^{-1} L_y
    double cond_projected = 0.0;
    Matrix gain;         // K: maps y_ini_m to the null-space component
};

// Shared core of blue_pinv / constrained_wls. Throws EstimationError on rank
// failures; sets cond_projected so callers can decide on the KKT fallback.
BlueParts blue_parts(const Matrix& l_u, const Matrix& l_y, const Matrix& sigma_zeta) {
    const Index a = l_u.rows();
    const Index b = l_y.rows();
    const Index q = l_y.cols();
    require(a == 0 || l_u.cols() == q, "L_u and L_y must have the same column count");
    require(b >= 1, "L_y must have at least one row");
    require_finite(l_y, "L_y");
    if (a > 0) require_finite(l_u, "L_u");
    check_spd_input(sigma_zeta, b);
    if (a > q) {
        throw EstimationError("L_u has more rows than columns; full row rank is impossible");
    }

    BlueParts parts;

    if (a > 0) {
        Eigen::BDCSVD<Matrix> svd(l_u, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector& s = svd.singularValues();
        if (s(0) <= 0.0 || s(a - 1) <= 1e-10 * s(0)) {
            throw EstimationError(
                "L_u is rank deficient: the deterministic constraint L_u eta = u_ini "
                "requires full row rank");
        }
        parts.lu_pinv = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
        parts.projector = Matrix::Identity(q, q) - parts.lu_pinv * l_u;
    } else {
        parts.lu_pinv.resize(q, 0);
        parts.projector = Matrix::Identity(q, q);
    }

    Eigen::LLT<Matrix> llt(sigma_zeta);
    if (llt.info() != Eigen::Success) {
        throw EstimationError("Sigma_zeta is not positive definite");
    }
    parts.sigma_inv_ly = llt.solve(l_y);

    const Index need = q - a;  // dimension of null(L_u)
    if (need == 0) {
        parts.gain = Matrix::Zero(q, b);
        parts.cond_projected = 1.0;
        return parts;
    }

    Matrix normal = parts.projector * (l_y.transpose() * parts.sigma_inv_ly) * parts.projector;
    normal = 0.5 * (normal + normal.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> eig(normal);
    if (eig.info() != Eigen::Success) {
        throw EstimationError("eigendecomposition of the projected normal matrix failed");
    }
    const Vector& ev = eig.eigenvalues();  // ascending
    const double ev_max = ev(q - 1);
    const double ev_min_signal = ev(q - need);
    if (ev_max <= 0.0 || ev_min_signal <= 1e-14 * ev_max) {
        throw EstimationError(
            "projected normal matrix is singular on null(L_u): the weighted output "
            "equations do not determine the unconstrained components of eta");
    }
    parts.cond_projected = ev_max / ev_min_signal;

    // Pseudo-inverse restricted to the top (q - a) eigenpairs; its range lies
    // inside range(projector) by construction.
    Matrix pinv_normal = Matrix::Zero(q, q);
    for (Index i = q - need; i < q; ++i) {
        pinv_normal.noalias() += eig.eigenvectors().col(i) * eig.eigenvectors().col(i).transpose() / ev(i);
    }
    // gain = pinv(P Ly' S^-1 Ly P) * P * Ly' * S^-1, with Ly' S^-1 = (S^-1 Ly)^T.
    parts.gain = pinv_normal * parts.projector * parts.sigma_inv_ly.transpose();
    return parts;
}

// Dense KKT solve of the same problem; used as the ill-conditioning fallback.
Matrix blue_via_kkt(const Matrix& l_u, const Matrix& l_y, const Matrix& sigma_zeta) {
    const Index a = l_u.rows();
    const Index b = l_y.rows();
    const Index q = l_y.cols();
    Eigen::LLT<Matrix> llt(sigma_zeta);
    if (llt.info() != Eigen::Success) {
        throw EstimationError("Sigma_zeta is not positive definite");
    }
    Matrix kkt = Matrix::Zero(q + a, q + a);
    kkt.topLeftCorner(q, q) = l_y.transpose() * llt.solve(l_y);
    if (a > 0) {
        kkt.topRightCorner(q, a) = l_u.transpose();
        kkt.bottomLeftCorner(a, q) = l_u;
    }
    Matrix rhs = Matrix::Zero(q + a, a + b);
    rhs.topRightCorner(q, b) = l_y.transpose() * llt.solve(Matrix::Identity(b, b));
    if (a > 0) rhs.bottomLeftCorner(a, a) = Matrix::Identity(a, a);
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) {
        throw EstimationError("KKT system of the constrained weighted least squares is singular");
    }
    Matrix sol = lu.solve(rhs);
    return sol.topRows(q);
}

constexpr double kkt_fallback_condition = 1e12;

}  // namespace

SvdFactors svd_full(const Matrix& a, SvdVectors mode) {
    require(a.rows() >= 1 && a.cols() >= 1, "svd_full: matrix must be non-empty");
    require_finite(a, "svd_full input");

    const unsigned options =
        Eigen::ComputeThinU | (mode == SvdVectors::full_v ? Eigen::ComputeFullV : Eigen::ComputeThinV);
    Eigen::BDCSVD<Matrix> svd(a, options);
    if (svd.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "SVD of " << a.rows() << "x" << a.cols()
            << " matrix did not converge within the internal iteration cap";
        throw SvdError(msg.str());
    }
    SvdFactors f;
    f.W = svd.matrixU();
    f.sigma = svd.singularValues();
    f.V = svd.matrixV();
    fix_signs(f.W, f.V);
    return f;
}

Vector singular_values(const Matrix& a) {
    require(a.rows() >= 1 && a.cols() >= 1, "singular_values: matrix must be non-empty");
    require_finite(a, "singular_values input");
    Eigen::BDCSVD<Matrix> svd(a);
    if (svd.info() != Eigen::Success) {
        throw SvdError("SVD (values only) did not converge");
    }
    return svd.singularValues();
}

PartitionedSvd svd_partition(const SvdFactors& f, Index r) {
    const Index k = f.sigma.size();
    require(r >= 1 && r <= k, "svd_partition: rank r out of range");
    if (f.sigma(r - 1) == 0.0) {
        throw std::invalid_argument("svd_partition: rank r exceeds the numerical rank (sigma[r-1] == 0)");
    }
    PartitionedSvd p;
    p.rank = r;
    p.W1 = f.W.leftCols(r);
    p.sigma1 = f.sigma.head(r);
    p.V1 = f.V.leftCols(r);
    p.W2 = f.W.rightCols(k - r);
    p.sigma2 = f.sigma.tail(k - r);
    p.V2 = f.V.rightCols(f.V.cols() - r);  // includes null space when V is full
    return p;
}

Matrix pinv(const Matrix& a, double tol) {
    require(tol > 0.0, "pinv: tol must be positive");
    require_finite(a, "pinv input");
    if (a.rows() == 0 || a.cols() == 0) return Matrix::Zero(a.cols(), a.rows());
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw SvdError("SVD in pinv did not converge");
    const Vector& s = svd.singularValues();
    const double cutoff = tol * s(0);
    Vector inv = Vector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) inv(i) = 1.0 / s(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

LqFactors lq_factor(const Matrix& a) {
    require(a.rows() >= 1 && a.cols() >= 1, "lq_factor: matrix must be non-empty");
    require_finite(a, "lq_factor input");

    const Index m = a.rows();
    const Index n = a.cols();
    const Index k = std::min(m, n);

    Eigen::HouseholderQR<Matrix> qr(a.transpose());  // A^T = Q R  =>  A = R^T Q^T
    Matrix r_full = qr.matrixQR().triangularView<Eigen::Upper>();
    Matrix q_thin = qr.householderQ() * Matrix::Identity(n, k);

    LqFactors f;
    f.L = r_full.topRows(k).transpose();  // m x k lower-trapezoidal
    f.Qo = q_thin.transpose();            // k x n, orthonormal rows

    for (Index i = 0; i < k; ++i) {
        if (f.L(i, i) < 0.0) {
            f.L.col(i) = -f.L.col(i);
            f.Qo.row(i) = -f.Qo.row(i);
        }
    }
    return f;
}

Index numerical_rank(const Vector& sigma, double rel_tol) {
    if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
    const double cutoff = rel_tol * sigma(0);
    Index r = 0;
    while (r < sigma.size() && sigma(r) > cutoff) ++r;
    return r;
}

Index numerical_rank(const Matrix& a, double rel_tol) {
    return numerical_rank(singular_values(a), rel_tol);
}

Matrix blue_pinv(const Matrix& l_u, const Matrix& l_y, const Matrix& sigma_zeta) {
    BlueParts parts = blue_parts(l_u, l_y, sigma_zeta);
    if (parts.cond_projected > kkt_fallback_condition) {
        return blue_via_kkt(l_u, l_y, sigma_zeta);
    }
    const Index q = l_y.cols();
    const Index a = l_u.rows();
    const Index b = l_y.rows();
    Matrix blue(q, a + b);
    if (a > 0) {
        blue.leftCols(a) = (Matrix::Identity(q, q) - parts.gain * l_y) * parts.lu_pinv;
    }
    blue.rightCols(b) = parts.gain;
    return blue;
}

Vector constrained_wls(const Matrix& l_u, const Matrix& l_y, const Matrix& sigma_zeta,
                       const Vector& u_ini, const Vector& y_ini_m) {
    require(u_ini.size() == l_u.rows(), "constrained_wls: u_ini size does not match L_u rows");
    require(y_ini_m.size() == l_y.rows(), "constrained_wls: y_ini_m size does not match L_y rows");
    Matrix blue = blue_pinv(l_u, l_y, sigma_zeta);
    Vector rhs(u_ini.size() + y_ini_m.size());
    rhs << u_ini, y_ini_m;
    return blue * rhs;
}

}  // namespace ntdpc
