#pragma once

#include "parsim/system_model.hpp"

#include <vector>

namespace parsim {

/// Block-Hankel data matrices for start time k = p + 1, one column per
/// sample. Uses samples 1 .. p + f + N - 1 of the trajectory.
///
/// E_f, X_k and X_{k-p} are copied from the simulation for structural
/// checks only; the estimators never read them.
struct HankelBundle {
    Index p = 0;
    Index f = 0;
    Index n = 0;  // column count N
    Index nu = 0;
    Index ny = 0;

    Matrix Up;
    Matrix Uf;
    Matrix Yp;
    Matrix Yf;
    Matrix Zp;  // [Yp; Up]
    Matrix Ef;
    Matrix Xk;
    Matrix Xkp;  // X_{k-p}
};

/// Per-row regressors of the ARX bank. Row i (1-based) regresses the
/// i-th future output block on [Z_p; U_i], U_i the first i future-input
/// block rows.
struct RegressorBank {
    Index p = 0;
    Index f = 0;
    Index n = 0;
    Index nu = 0;
    Index ny = 0;

    std::vector<Matrix> regressors;  // d_i x N
    std::vector<Matrix> targets;     // ny x N
    std::vector<Matrix> innovations; // i*ny x N (oracle use only)

    /// p*ny + (p+i)*nu
    Index dim(Index i) const { return p * ny + (p + i) * nu; }
    const Matrix& regressor(Index i) const { return regressors.at(static_cast<std::size_t>(i - 1)); }
    const Matrix& target(Index i) const { return targets.at(static_cast<std::size_t>(i - 1)); }
    const Matrix& innovation(Index i) const { return innovations.at(static_cast<std::size_t>(i - 1)); }
};

/// Requires trajectory length >= p + f + N - 1; throws DataLengthError
/// otherwise.
HankelBundle build_hankels(const Trajectory& t, Index p, Index f, Index n);

/// Stacks `blocks` consecutive samples of `signal` starting at column
/// `first`, N columns wide.
Matrix block_hankel(const Matrix& signal, Index first, Index blocks, Index n);

RegressorBank build_regressor_bank(const HankelBundle& h);

/// (1/N) sum_j z_{p,i}(j) z_{p,i}(j)^T for row i of the bank.
Matrix empirical_covariance(const RegressorBank& bank, Index i);

}  // namespace parsim
