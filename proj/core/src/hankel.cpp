#include "ntdpc/hankel.hpp"

#include <sstream>

namespace ntdpc {

HankelSet build_hankels(const Trajectory& traj, Index T_ini, Index N, Index M) {
    require(T_ini >= 1 && N >= 1 && M >= 1, "build_hankels: horizons and column count must be positive");
    require(traj.u.cols() == traj.y.cols(), "build_hankels: input/output lengths differ");

    const Index required = T_ini + N + M + 1;
    if (traj.length() < required) {
        std::ostringstream msg;
        msg << "build_hankels: trajectory too short: need " << required << " samples for T_ini="
            << T_ini << ", N=" << N << ", M=" << M << " but only " << traj.length()
            << " are available";
        throw std::invalid_argument(msg.str());
    }

    const Index n_u = traj.u.rows();
    const Index n_y = traj.y.rows();

    HankelSet h;
    h.T_ini = T_ini;
    h.N = N;
    h.M = M;
    h.Up.resize(n_u * T_ini, M);
    h.Yp.resize(n_y * T_ini, M);
    h.Uf.resize(n_u * N, M);
    h.Yf.resize(n_y * N, M);

    for (Index j = 0; j < M; ++j) {
        for (Index t = 0; t < T_ini; ++t) {
            h.Up.block(t * n_u, j, n_u, 1) = traj.u.col(j + t);
            h.Yp.block(t * n_y, j, n_y, 1) = traj.y.col(j + t + 1);
        }
        for (Index t = 0; t < N; ++t) {
            h.Uf.block(t * n_u, j, n_u, 1) = traj.u.col(j + T_ini + t);
            h.Yf.block(t * n_y, j, n_y, 1) = traj.y.col(j + T_ini + t + 1);
        }
    }
    return h;
}

std::pair<Matrix, Matrix> stack_past_future(const HankelSet& h) {
    Matrix zp(h.Up.rows() + h.Yp.rows(), h.M);
    zp << h.Up, h.Yp;
    Matrix zf(h.Uf.rows() + h.Yf.rows(), h.M);
    zf << h.Uf, h.Yf;
    return {zp, zf};
}

}  // namespace ntdpc
