#pragma once

#include "ntdpc/plant.hpp"
#include "ntdpc/types.hpp"

#include <utility>

namespace ntdpc {

// The four Hankel blocks with the one-step output shift: column j pairs
//   Up: u(j .. j+T_ini-1)          Yp: y(j+1 .. j+T_ini)
//   Uf: u(j+T_ini .. j+T_ini+N-1)  Yf: y(j+T_ini+1 .. j+T_ini+N)
// so that at k = j + T_ini the past window ends at the current measurement
// y(k) and the future output window spans y(k+1 .. k+N).
struct HankelSet {
    Matrix Up;
    Matrix Yp;
    Matrix Uf;
    Matrix Yf;
    Index T_ini = 0;
    Index N = 0;
    Index M = 0;  // column count
};

// Requires T_ini + N + M + 1 raw samples (the +1 absorbs the output shift).
HankelSet build_hankels(const Trajectory& traj, Index T_ini, Index N, Index M);

// Zp = col(Up, Yp), Zf = col(Uf, Yf).
std::pair<Matrix, Matrix> stack_past_future(const HankelSet& h);

}  // namespace ntdpc
