#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ntdpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite()) {
        throw std::invalid_argument(std::string(what) + ": contains NaN or Inf entries");
    }
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace ntdpc
