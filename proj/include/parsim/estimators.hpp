#pragma once

#include "parsim/data_assembly.hpp"

#include <vector>

namespace parsim {

/// Estimates of one Markov lag gathered across the bank rows that carry it.
struct MarkovEstimate {
    Index lag = 0;
    std::vector<Index> rows;        // 1-based bank rows i with i > lag
    std::vector<Matrix> per_row;    // G_lag as estimated by each row
    Matrix mean;                    // unweighted mean over per_row
};

struct ArxBankEstimate {
    Index p = 0;
    Index f = 0;
    /// theta_i = [ (Gamma_fi L_p)^ | G_fi^ ], ny x d_i, i = 1..f.
    std::vector<Matrix> theta;
    /// Stacked past-data blocks, f*ny x p*(ny+nu).
    Matrix gamma_lp;
    /// Lags 0..f-1. Lag 0 is estimated freely by every row.
    std::vector<MarkovEstimate> markov;
    /// lambda_min of (1/N) Z Z^T for each row (squared smallest singular
    /// value of the regressor over N).
    std::vector<double> gram_min_eig;

    const Matrix& row(Index i) const { return theta.at(static_cast<std::size_t>(i - 1)); }
};

/// Solves the f row problems theta_i = Y_fi [Z_p; U_i]^+ by Householder QR
/// of the transposed regressor. Rows run on `threads` workers and are merged
/// by index. Throws PersistenceOfExcitationError (lowest failing row) when a
/// regressor's smallest singular value is at or below
/// max(d_i, N) * eps * sigma_max, or when N < d_i.
ArxBankEstimate estimate_parsim_bank(const RegressorBank& bank, unsigned threads = 1);

/// Projection estimator Y_f P Z_p^T (Z_p P Z_p^T)^{-1}, P the projector onto
/// the orthogonal complement of the rows of U_f. P is applied through a thin
/// QR factor of U_f^T instead of being formed.
Matrix estimate_classical_projection(const HankelBundle& h);

}  // namespace parsim
