#include "parsim/estimators.hpp"

#include "parsim/linalg.hpp"
#include "parsim/parallel.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <sstream>

namespace parsim {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct LsqSolution {
    Matrix coef;  // rows(target) x rows(regressor)
    double sigma_min = 0.0;
    double sigma_max = 0.0;
};

// Minimises ||target - coef * regressor||_F. Returns nullopt when the
// regressor is numerically rank deficient; sigma values are still filled
// in through `diag`.
std::optional<LsqSolution> solve_rows(const Matrix& regressor, const Matrix& target, LsqSolution& diag) {
    const Index d = regressor.rows();
    const Index n = regressor.cols();
    if (n < d) {
        diag.sigma_min = 0.0;
        diag.sigma_max = linalg::spectral_norm(regressor);
        return std::nullopt;
    }
    Eigen::HouseholderQR<Matrix> qr(regressor.transpose());
    const Matrix r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    const Vector s = linalg::singular_values(r);
    diag.sigma_max = s(0);
    diag.sigma_min = s(d - 1);
    const double tol = static_cast<double>(std::max(d, n)) * kEps * diag.sigma_max;
    if (!(diag.sigma_min > tol)) return std::nullopt;
    LsqSolution sol = diag;
    sol.coef = qr.solve(target.transpose()).transpose();
    return sol;
}

}  // namespace

ArxBankEstimate estimate_parsim_bank(const RegressorBank& bank, unsigned threads) {
    const Index f = bank.f;
    const auto rows = static_cast<std::size_t>(f);
    std::vector<std::optional<LsqSolution>> solved(rows);
    std::vector<LsqSolution> diag(rows);

    parallel_for(rows, threads, [&](std::size_t k) {
        const auto i = static_cast<Index>(k) + 1;
        solved[k] = solve_rows(bank.regressor(i), bank.target(i), diag[k]);
    });

    for (std::size_t k = 0; k < rows; ++k) {
        if (!solved[k]) {
            const auto i = static_cast<int>(k) + 1;
            const double n = static_cast<double>(bank.n);
            const double gram = diag[k].sigma_min * diag[k].sigma_min / n;
            std::ostringstream msg;
            msg << "persistence of excitation fails at row i = " << i << ": regressor Gram smallest singular value "
                << gram << " (d_i = " << bank.dim(i) << ", N = " << bank.n << ")";
            throw PersistenceOfExcitationError(msg.str(), i, gram);
        }
    }

    ArxBankEstimate est;
    est.p = bank.p;
    est.f = f;
    const Index ny = bank.ny;
    const Index nu = bank.nu;
    const Index past = bank.p * (ny + nu);
    est.gamma_lp.resize(f * ny, past);
    for (std::size_t k = 0; k < rows; ++k) {
        est.theta.push_back(std::move(solved[k]->coef));
        est.gram_min_eig.push_back(diag[k].sigma_min * diag[k].sigma_min / static_cast<double>(bank.n));
        est.gamma_lp.middleRows(static_cast<Index>(k) * ny, ny) = est.theta.back().leftCols(past);
    }

    // Row i holds [G_{i-1} ... G_1 G_0]; lag j sits at block (i - 1 - j).
    for (Index lag = 0; lag < f; ++lag) {
        MarkovEstimate me;
        me.lag = lag;
        me.mean = Matrix::Zero(ny, nu);
        for (Index i = lag + 1; i <= f; ++i) {
            me.rows.push_back(i);
            me.per_row.push_back(est.row(i).middleCols(past + (i - 1 - lag) * nu, nu));
            me.mean += me.per_row.back();
        }
        me.mean /= static_cast<double>(me.per_row.size());
        est.markov.push_back(std::move(me));
    }
    return est;
}

Matrix estimate_classical_projection(const HankelBundle& h) {
    const Index n = h.n;
    const Index fu = h.Uf.rows();
    if (n < fu) {
        throw PersistenceOfExcitationError("classical projection: U_f U_f^T is singular (N < f*nu)", 0, 0.0);
    }
    Eigen::HouseholderQR<Matrix> qr(h.Uf.transpose());
    {
        const Matrix r = qr.matrixQR().topRows(fu).triangularView<Eigen::Upper>();
        const Vector s = linalg::singular_values(r);
        const double tol = static_cast<double>(std::max(fu, n)) * kEps * s(0);
        if (!(s(fu - 1) > tol)) {
            throw PersistenceOfExcitationError("classical projection: U_f U_f^T is singular", 0,
                                               s(fu - 1) * s(fu - 1) / static_cast<double>(n));
        }
    }
    const Matrix q1 = qr.householderQ() * Matrix::Identity(n, fu);
    // X P = X - (X Q1) Q1^T
    const Matrix zt = h.Zp - (h.Zp * q1) * q1.transpose();
    const Matrix yt = h.Yf - (h.Yf * q1) * q1.transpose();

    LsqSolution diag;
    auto sol = solve_rows(zt, yt, diag);
    if (!sol) {
        throw PersistenceOfExcitationError("classical projection: projected Gram Z_p P Z_p^T is singular", 0,
                                           diag.sigma_min * diag.sigma_min / static_cast<double>(n));
    }
    return sol->coef;
}

}  // namespace parsim
