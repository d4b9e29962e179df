#pragma once

#include "parsim/system_model.hpp"

namespace parsim {

/// Balanced rank-nx factorisation of a Gamma_f L_p estimate (identity
/// weights) and the system matrices read off from it.
struct RealizationResult {
    Matrix gamma;  // f*ny x nx, U1 S1^{1/2}
    Matrix lp;     // nx x p*(ny+nu), S1^{1/2} V1^T
    Vector singular_values;
    double sigma_gap = 0.0;  // sigma_nx - sigma_{nx+1}

    Matrix A;
    Matrix B;
    Matrix C;
    Matrix K;
    bool has_system = false;
};

struct AlignmentResult {
    Matrix T;
    double condition = 0.0;
    double err_A = 0.0;
    double err_B = 0.0;
    double err_C = 0.0;
    double err_K = 0.0;
    double err_gamma = 0.0;
    double err_lp = 0.0;
};

/// Top-nx SVD factors. Each left singular vector is sign-normalised so its
/// largest-magnitude entry is positive. Throws RankDeficiencyError when
/// sigma_nx is at or below max(rows, cols) * eps * sigma_1 (or the input is
/// zero), ArgumentError when nx exceeds either dimension.
RealizationResult svd_realize(const Matrix& gamma_lp, Index nx);

/// Fills r.A, r.B, r.C, r.K from the factors:
///   C = first ny rows of Gamma,
///   A = (Gamma without last block row)^+ (Gamma without first block row),
///   K = columns (p-1)ny .. p*ny-1 of L_p,
///   B = last nu columns of L_p.
/// Throws ExtractionError if f*ny < nx + ny or the shifted block is rank
/// deficient.
void extract_system(RealizationResult& r, Index p, Index f, Index nx, Index nu, Index ny);

/// Convenience: svd_realize followed by extract_system.
RealizationResult realize(const Matrix& gamma_lp, Index p, Index f, Index nx, Index nu, Index ny);

/// T = Gamma_f^+ Gamma_f^ and the errors ||A^ - T^{-1} A T||,
/// ||B^ - T^{-1} B||, ||C^ - C T||, ||K^ - T^{-1} K|| plus the factor errors.
/// Throws AlignmentError if T is numerically singular.
AlignmentResult align_similarity(const StateSpaceModel& truth, Index f, const RealizationResult& r);

struct SvdConditionReport {
    double delta = 0.0;
    double sigma_nx = 0.0;
    bool holds = false;  // delta <= sigma_nx / 4
};

SvdConditionReport check_svd_condition(const Matrix& true_gamma_lp, const Matrix& est_gamma_lp, Index nx);

/// Orthogonal T minimising ||G_est - G_ref T||_F^2 + ||L_est - T^T L_ref||_F^2.
struct ProcrustesResult {
    Matrix T;
    double err_gamma = 0.0;  // ||G_est - G_ref T||
    double err_lp = 0.0;     // ||L_est - T^T L_ref||
};

ProcrustesResult procrustes_align(const Matrix& gamma_ref, const Matrix& lp_ref, const Matrix& gamma_est,
                                  const Matrix& lp_est);

/// Model assembled from an extracted realization, noise scales copied from
/// `scales`.
StateSpaceModel realized_model(const RealizationResult& r, const StateSpaceModel& scales);

}  // namespace parsim
