#include "ntdpc/plant.hpp"

#include "ntdpc/numerics.hpp"
#include "ntdpc/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace ntdpc {

void PlantModel::validate() const {
    require(A.rows() >= 1 && A.rows() == A.cols(), "PlantModel: A must be square and non-empty");
    require(B.rows() == A.rows() && B.cols() >= 1, "PlantModel: B row count must match A");
    require(C.cols() == A.rows() && C.rows() >= 1, "PlantModel: C column count must match A");
    require_finite(A, "PlantModel::A");
    require_finite(B, "PlantModel::B");
    require_finite(C, "PlantModel::C");
    require(Ts > 0.0, "PlantModel: Ts must be positive");
}

PlantModel boeing747_plant() {
    PlantModel p;
    p.A.resize(4, 4);
    p.A << 0.9997, 0.0038, -0.0001, -0.0322,
          -0.0056, 0.9648,  0.7446,  0.0001,
           0.0020, -0.0097, 0.9543, -0.0000,
           0.0001, -0.0005, 0.0978,  1.0000;
    p.B.resize(4, 2);
    p.B << 0.0010,  0.1000,
          -0.0615,  0.0183,
          -0.1133,  0.0586,
          -0.0057,  0.0029;
    p.C.resize(2, 4);
    p.C << 1.0000,  0.0, 0.0, 0.0,
           0.0,    -1.0, 0.0, 7.7400;
    p.Ts = 0.1;
    return p;
}

namespace {

// Symmetric PSD square root; tolerates tiny negative eigenvalues from roundoff.
Matrix covariance_sqrt(const Matrix& sigma) {
    require(sigma.rows() == sigma.cols(), "NoiseModel: covariance must be square");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    require((sigma - sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
            "NoiseModel: covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
    Vector ev = eig.eigenvalues();
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-12 * scale) {
            throw std::invalid_argument("NoiseModel: covariance has a negative eigenvalue");
        }
        ev(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

Trajectory simulate_lti(const PlantModel& plant, const Vector& x0, const Matrix& u_seq,
                        const NoiseModel* noise) {
    plant.validate();
    require(x0.size() == plant.n(), "simulate_lti: x0 dimension does not match plant order");
    require(u_seq.rows() == plant.n_u(), "simulate_lti: input channel count does not match plant");
    require_finite(u_seq, "simulate_lti input sequence");

    const Index len = u_seq.cols();
    const Index n_y = plant.n_y();

    Trajectory traj;
    traj.u = u_seq;
    traj.y_clean.resize(n_y, len);
    traj.y.resize(n_y, len);

    Matrix noise_sqrt;
    bool with_noise = false;
    if (noise != nullptr && !noise->sigma.isZero(0.0)) {
        require(noise->sigma.rows() == n_y, "simulate_lti: noise covariance dimension mismatch");
        noise_sqrt = covariance_sqrt(noise->sigma);
        with_noise = true;
    }
    CounterRng rng(noise != nullptr ? noise->seed : 0);

    Vector x = x0;
    Vector z(n_y);
    for (Index k = 0; k < len; ++k) {
        traj.y_clean.col(k) = plant.C * x;
        if (with_noise) {
            for (Index c = 0; c < n_y; ++c) {
                z(c) = rng.normal(rng_stream::data_noise + static_cast<std::uint64_t>(c),
                                  static_cast<std::uint64_t>(k));
            }
            traj.y.col(k) = traj.y_clean.col(k) + noise_sqrt * z;
        } else {
            traj.y.col(k) = traj.y_clean.col(k);
        }
        x = plant.A * x + plant.B * u_seq.col(k);
    }
    return traj;
}

Matrix generate_pe_input(Index n_u, Index length, double amplitude, std::uint64_t seed) {
    require(n_u >= 1 && length >= 1, "generate_pe_input: dimensions must be positive");
    require(amplitude >= 0.0, "generate_pe_input: amplitude must be non-negative");
    CounterRng rng(seed);
    Matrix u(n_u, length);
    for (Index k = 0; k < length; ++k) {
        for (Index c = 0; c < n_u; ++c) {
            u(c, k) = rng.uniform_sym(rng_stream::pe_input + static_cast<std::uint64_t>(c),
                                      static_cast<std::uint64_t>(k), amplitude);
        }
    }
    return u;
}

Index input_hankel_rank(const Matrix& u_seq, Index depth, double rel_tol) {
    require(depth >= 1, "input_hankel_rank: depth must be positive");
    const Index n_u = u_seq.rows();
    const Index cols = u_seq.cols() - depth + 1;
    require(cols >= 1, "input_hankel_rank: sequence shorter than requested depth");
    Matrix h(n_u * depth, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index t = 0; t < depth; ++t) {
            h.block(t * n_u, j, n_u, 1) = u_seq.col(j + t);
        }
    }
    return numerical_rank(h, rel_tol);
}

PlantDiagnostics analyze_plant(const PlantModel& plant) {
    plant.validate();
    const Index n = plant.n();

    Matrix ctrl(n, n * plant.n_u());
    Matrix block = plant.B;
    for (Index i = 0; i < n; ++i) {
        ctrl.middleCols(i * plant.n_u(), plant.n_u()) = block;
        block = plant.A * block;
    }
    Matrix obs(n * plant.n_y(), n);
    Matrix row = plant.C;
    for (Index i = 0; i < n; ++i) {
        obs.middleRows(i * plant.n_y(), plant.n_y()) = row;
        row = row * plant.A;
    }

    PlantDiagnostics d;
    d.controllability_rank = numerical_rank(ctrl);
    d.observability_rank = numerical_rank(obs);
    d.controllable = d.controllability_rank == n;
    d.observable = d.observability_rank == n;
    return d;
}

Vector steady_state_input(const PlantModel& plant, const Vector& r_y) {
    plant.validate();
    require(r_y.size() == plant.n_y(), "steady_state_input: reference dimension mismatch");
    const Index n = plant.n();
    const Index n_u = plant.n_u();
    const Index n_y = plant.n_y();

    Matrix sys = Matrix::Zero(n + n_y, n + n_u);
    sys.topLeftCorner(n, n) = plant.A - Matrix::Identity(n, n);
    sys.topRightCorner(n, n_u) = plant.B;
    sys.bottomLeftCorner(n_y, n) = plant.C;

    Vector rhs = Vector::Zero(n + n_y);
    rhs.tail(n_y) = r_y;

    Eigen::FullPivLU<Matrix> lu(sys);
    if (lu.rank() < sys.cols()) {
        throw std::runtime_error(
            "steady_state_input: equilibrium equations are rank deficient; "
            "provide r_u explicitly");
    }
    Vector sol = lu.solve(rhs);
    if ((sys * sol - rhs).cwiseAbs().maxCoeff() > 1e-6 * std::max(1.0, r_y.cwiseAbs().maxCoeff())) {
        throw std::runtime_error(
            "steady_state_input: no steady state reaches the requested output reference");
    }
    return sol.tail(n_u);
}

}  // namespace ntdpc
