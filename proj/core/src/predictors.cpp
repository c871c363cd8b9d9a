#include "ntdpc/predictors.hpp"

#include <Eigen/LU>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace ntdpc {

namespace {

void check_build_inputs(const Matrix& zp, const Matrix& zf, const PredictorDims& dims) {
    require(dims.n >= 1 && dims.n_u >= 1 && dims.n_y >= 1 && dims.T_ini >= 1 && dims.N >= 1,
            "predictor build: dimensions must be positive");
    require(zp.rows() == dims.past_rows(), "predictor build: Zp row count does not match dims");
    require(zf.rows() == dims.future_rows(), "predictor build: Zf row count does not match dims");
    require(zp.cols() == zf.cols(), "predictor build: Zp and Zf must be column aligned");
    require(dims.r() <= std::min(zp.rows(), zp.cols()),
            "predictor build: rank n_u*T_ini + n exceeds the data matrix dimensions");
}

// Left factors of Zf*V2 without forming V2: Zf*(I - V1 V1^T) = (Zf V2) V2^T has
// the same singular values and left vectors because V2^T has orthonormal rows.
SvdFactors future_factors(const Matrix& zf, const Matrix& v1) {
    Matrix projected = zf - (zf * v1) * v1.transpose();
    return svd_full(projected);
}

Matrix solve_right_inverse(const Matrix& numerator, const Matrix& square, double* condition,
                           const char* assumption) {
    // numerator * square^{-1}, with a condition estimate of `square`.
    Vector s = singular_values(square);
    const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1)
                                              : std::numeric_limits<double>::infinity();
    if (condition != nullptr) *condition = cond;
    if (!(cond < 1e12)) {
        std::ostringstream msg;
        msg << assumption << " (condition estimate " << cond << ")";
        throw PredictorBuildError(msg.str());
    }
    // X * A = B  <=>  A^T X^T = B^T
    Eigen::PartialPivLU<Matrix> lu(square.transpose());
    return lu.solve(numerator.transpose()).transpose();
}

void check_window(const PredictorDims& d, const Vector& u_ini, const Vector& y_ini,
                  const Vector& u_n) {
    require(u_ini.size() == d.n_u * d.T_ini, "predict: u_ini window length mismatch");
    require(y_ini.size() == d.n_y * d.T_ini, "predict: y_ini window length mismatch");
    require(u_n.size() == d.n_u * d.N, "predict: u_N length mismatch");
}

}  // namespace

PartitionedSvd factor_zp(const Matrix& zp, Index n, Index T_ini, Index n_u, bool keep_null_basis) {
    const Index r = n_u * T_ini + n;
    require(n >= 1 && T_ini >= 1 && n_u >= 1, "factor_zp: dimensions must be positive");
    if (r > std::min(zp.rows(), zp.cols())) {
        throw std::invalid_argument("factor_zp: rank n_u*T_ini + n exceeds the matrix dimensions");
    }
    SvdFactors f = svd_full(zp, keep_null_basis ? SvdVectors::full_v : SvdVectors::thin);
    return svd_partition(f, r);
}

NtdpcPredictor build_ntdpc(const Matrix& zp, const Matrix& zf, const Matrix& sigma_zeta,
                           const PredictorDims& dims, const ScalingPair& scaling) {
    check_build_inputs(zp, zf, dims);
    require(sigma_zeta.rows() == dims.n_y && sigma_zeta.cols() == dims.n_y,
            "build_ntdpc: sigma_zeta must be the per-sample n_y x n_y covariance");

    NtdpcPredictor p;
    p.dims = dims;
    p.scaling = scaling;
    p.factors.dims = dims;

    PartitionedSvd past = factor_zp(zp, dims.n, dims.T_ini, dims.n_u);
    p.factors.L1 = past.W1 * past.sigma1.asDiagonal();
    p.factors.V1 = past.V1;
    p.factors.sigma1 = past.sigma1;
    p.factors.sigma2 = past.sigma2;

    SvdFactors fut = future_factors(zf, past.V1);
    const Index keep = dims.n_u * dims.N;
    require(fut.sigma.size() >= keep, "build_ntdpc: future factorization yields too few directions");
    p.factors.Lf1 = fut.W.leftCols(keep) * fut.sigma.head(keep).asDiagonal();
    p.factors.sigma_f1 = fut.sigma.head(keep);
    p.factors.sigma_f2 = fut.sigma.tail(fut.sigma.size() - keep);
    p.factors.S = zf * past.V1;

    Matrix p2 = solve_right_inverse(
        p.factors.L_fy(), p.factors.L_fu(), &p.factors.lfu_condition,
        "build_ntdpc: L_fu is numerically singular; the future input block must be invertible "
        "for u_N to determine eta_2");

    Matrix sigma_block = expand_block_diag(sigma_zeta, dims.T_ini);
    p.blue = blue_pinv(p.factors.L_u(), p.factors.L_y(), sigma_block);

    p.P2 = p2;
    p.P1 = (p.factors.S_y() - p2 * p.factors.S_u()) * p.blue;
    return p;
}

SpcPredictor build_spc(const HankelSet& h, const PredictorDims& dims, const ScalingPair& scaling) {
    require(h.Up.rows() == dims.n_u * dims.T_ini && h.Yp.rows() == dims.n_y * dims.T_ini &&
                h.Uf.rows() == dims.n_u * dims.N && h.Yf.rows() == dims.n_y * dims.N,
            "build_spc: Hankel block shapes do not match dims");

    Matrix regressor(h.Up.rows() + h.Yp.rows() + h.Uf.rows(), h.M);
    regressor << h.Up, h.Yp, h.Uf;
    Matrix theta = h.Yf * pinv(regressor);

    SpcPredictor p;
    p.dims = dims;
    p.scaling = scaling;
    p.P1 = theta.leftCols(h.Up.rows());
    p.P2 = theta.middleCols(h.Up.rows(), h.Yp.rows());
    p.Gamma = theta.rightCols(h.Uf.rows());
    return p;
}

SmmpcPredictor build_smmpc(const Matrix& zp, const Matrix& zf, const PredictorDims& dims,
                           const ScalingPair& scaling) {
    check_build_inputs(zp, zf, dims);
    const Index r = dims.r();
    const Index a = dims.n_u * dims.T_ini;
    const Index b = dims.n_y * dims.T_ini;

    // Past factor from LQ: the input rows come first in Zp, so the leading
    // a x a block of L is triangular and the deterministic part solves exactly.
    LqFactors lq = lq_factor(zp);
    Matrix l1 = lq.L.leftCols(r);
    Matrix basis = lq.Qo.topRows(r);  // row basis of the kept past subspace

    Matrix tri = l1.topLeftCorner(a, a);
    double diag_min = std::numeric_limits<double>::infinity();
    double diag_max = 0.0;
    for (Index i = 0; i < a; ++i) {
        diag_min = std::min(diag_min, std::abs(tri(i, i)));
        diag_max = std::max(diag_max, std::abs(tri(i, i)));
    }
    if (diag_min <= 1e-12 * std::max(1.0, diag_max)) {
        throw PredictorBuildError(
            "build_smmpc: triangular input block of the LQ factor is singular; past inputs do "
            "not excite all deterministic directions");
    }

    // eta1 = G * col(u_ini, y_ini): forward-substitute the input block, then
    // ordinary least squares on the remaining n columns against the outputs.
    Matrix tri_inv = tri.triangularView<Eigen::Lower>().solve(Matrix::Identity(a, a));
    Matrix l_y = l1.bottomRows(b);
    Matrix l_y_head = l_y.leftCols(a);
    Matrix l_y_tail = l_y.rightCols(r - a);
    Matrix tail_pinv = pinv(l_y_tail);

    Matrix g(r, a + b);
    g.topLeftCorner(a, a) = tri_inv;
    g.topRightCorner(a, b).setZero();
    g.bottomLeftCorner(r - a, a) = -tail_pinv * l_y_head * tri_inv;
    g.bottomRightCorner(r - a, b) = tail_pinv;

    // Future pipeline mirrors the SVD route with the LQ row basis.
    Matrix projected = zf - (zf * basis.transpose()) * basis;
    SvdFactors fut = svd_full(projected);
    const Index keep = dims.n_u * dims.N;
    Matrix lf1 = fut.W.leftCols(keep) * fut.sigma.head(keep).asDiagonal();
    Matrix s = zf * basis.transpose();

    Matrix lfu = lf1.topRows(dims.n_u * dims.N);
    Matrix lfy = lf1.bottomRows(dims.n_y * dims.N);
    Matrix e3 = solve_right_inverse(lfy, lfu, nullptr,
                                    "build_smmpc: future input block is numerically singular");

    Matrix s_u = s.topRows(dims.n_u * dims.N);
    Matrix s_y = s.bottomRows(dims.n_y * dims.N);
    Matrix e_past = (s_y - e3 * s_u) * g;

    SmmpcPredictor p;
    p.dims = dims;
    p.scaling = scaling;
    p.E1 = e_past.leftCols(a);
    p.E2 = e_past.rightCols(b);
    p.E3 = e3;
    return p;
}

Vector predict(const NtdpcPredictor& p, const Vector& u_ini, const Vector& y_ini_m, const Vector& u_n) {
    check_window(p.dims, u_ini, y_ini_m, u_n);
    Vector z(u_ini.size() + y_ini_m.size());
    z << u_ini, y_ini_m;
    return p.P1 * z + p.P2 * u_n;
}

Vector predict(const SpcPredictor& p, const Vector& u_ini, const Vector& y_ini_m, const Vector& u_n) {
    check_window(p.dims, u_ini, y_ini_m, u_n);
    return p.P1 * u_ini + p.P2 * y_ini_m + p.Gamma * u_n;
}

Vector predict(const SmmpcPredictor& p, const Vector& u_ini, const Vector& y_ini_m, const Vector& u_n) {
    check_window(p.dims, u_ini, y_ini_m, u_n);
    return p.E1 * u_ini + p.E2 * y_ini_m + p.E3 * u_n;
}

double sensitivity_index(const Vector& sigma1, const Vector& sigma2) {
    require(sigma1.size() >= 1, "sensitivity_index: Sigma1 must be non-empty");
    const double smin = sigma1(sigma1.size() - 1);
    require(smin > 0.0, "sensitivity_index: Sigma1 must have a positive minimum");
    if (sigma2.size() == 0) return 0.0;
    const double smax = sigma2(0);
    return (smax * smax) / (smin * smin);
}

std::optional<Index> estimate_order(const Vector& sigma, double floor_ratio) {
    require(sigma.size() >= 1, "estimate_order: empty singular value list");
    require(floor_ratio > 0.0, "estimate_order: floor_ratio must be positive");
    if (sigma(0) <= 0.0) return std::nullopt;

    double best_gap = 0.0;
    Index best_r = -1;
    for (Index r = 1; r < sigma.size(); ++r) {
        if (sigma(r) / sigma(0) >= floor_ratio) continue;  // tail not small yet
        const double gap = sigma(r) > 0.0 ? sigma(r - 1) / sigma(r)
                                          : std::numeric_limits<double>::infinity();
        if (gap > best_gap) {
            best_gap = gap;
            best_r = r;
        }
    }
    if (best_r < 0 || best_gap <= 10.0) return std::nullopt;
    return best_r;
}

PredictorBundle bundle(const NtdpcPredictor& p) {
    return {PredictorKind::ntdpc, p.dims, p.scaling, p.P1, p.P2, Matrix()};
}

PredictorBundle bundle(const SpcPredictor& p) {
    return {PredictorKind::spc, p.dims, p.scaling, p.P1, p.P2, p.Gamma};
}

PredictorBundle bundle(const SmmpcPredictor& p) {
    return {PredictorKind::smmpc, p.dims, p.scaling, p.E1, p.E2, p.E3};
}

Vector predict(const PredictorBundle& b, const Vector& u_ini, const Vector& y_ini_m, const Vector& u_n) {
    check_window(b.dims, u_ini, y_ini_m, u_n);
    if (b.kind == PredictorKind::ntdpc) {
        Vector z(u_ini.size() + y_ini_m.size());
        z << u_ini, y_ini_m;
        return b.m1 * z + b.m2 * u_n;
    }
    return b.m1 * u_ini + b.m2 * y_ini_m + b.m3 * u_n;
}

namespace {

constexpr char kMagic[8] = {'N', 'T', 'D', 'P', 'C', 'P', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

void write_matrix(std::ostream& os, const Matrix& m) {
    write_u64(os, static_cast<std::uint64_t>(m.rows()));
    write_u64(os, static_cast<std::uint64_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i) {      // row-major payload
        for (Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            os.write(reinterpret_cast<const char*>(&v), 8);
        }
    }
}

Matrix read_matrix(std::istream& is) {
    const auto rows = static_cast<Index>(read_u64(is));
    const auto cols = static_cast<Index>(read_u64(is));
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            double v = 0;
            is.read(reinterpret_cast<char*>(&v), 8);
            m(i, j) = v;
        }
    }
    return m;
}

}  // namespace

void save_predictor(const PredictorBundle& b, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_predictor: cannot open " + path.string());
    os.write(kMagic, sizeof(kMagic));
    os.write(reinterpret_cast<const char*>(&kVersion), 4);
    const std::uint32_t kind = static_cast<std::uint32_t>(b.kind);
    os.write(reinterpret_cast<const char*>(&kind), 4);
    write_u64(os, static_cast<std::uint64_t>(b.dims.n));
    write_u64(os, static_cast<std::uint64_t>(b.dims.n_u));
    write_u64(os, static_cast<std::uint64_t>(b.dims.n_y));
    write_u64(os, static_cast<std::uint64_t>(b.dims.T_ini));
    write_u64(os, static_cast<std::uint64_t>(b.dims.N));
    write_matrix(os, b.scaling.mu);
    write_matrix(os, b.scaling.my);
    write_matrix(os, b.m1);
    write_matrix(os, b.m2);
    write_matrix(os, b.m3);
    if (!os) throw std::runtime_error("save_predictor: write to " + path.string() + " failed");
}

PredictorBundle load_predictor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_predictor: cannot open " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("load_predictor: not a predictor bundle: " + path.string());
    }
    std::uint32_t version = 0, kind = 0;
    is.read(reinterpret_cast<char*>(&version), 4);
    is.read(reinterpret_cast<char*>(&kind), 4);
    if (version != kVersion) throw std::runtime_error("load_predictor: unsupported bundle version");

    PredictorBundle b;
    b.kind = static_cast<PredictorKind>(kind);
    b.dims.n = static_cast<Index>(read_u64(is));
    b.dims.n_u = static_cast<Index>(read_u64(is));
    b.dims.n_y = static_cast<Index>(read_u64(is));
    b.dims.T_ini = static_cast<Index>(read_u64(is));
    b.dims.N = static_cast<Index>(read_u64(is));
    b.scaling.mu = read_matrix(is);
    b.scaling.my = read_matrix(is);
    b.m1 = read_matrix(is);
    b.m2 = read_matrix(is);
    b.m3 = read_matrix(is);
    if (!is) throw std::runtime_error("load_predictor: truncated bundle: " + path.string());
    return b;
}

}  // namespace ntdpc
