#include "parsim/realization.hpp"

#include "parsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace parsim {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

RealizationResult svd_realize(const Matrix& gamma_lp, Index nx) {
    const Index rows = gamma_lp.rows();
    const Index cols = gamma_lp.cols();
    if (nx < 1 || nx > std::min(rows, cols)) {
        throw ArgumentError("svd_realize: order nx must lie in [1, min(rows, cols)]");
    }
    Eigen::JacobiSVD<Matrix> svd(gamma_lp, Eigen::ComputeThinU | Eigen::ComputeThinV);
    RealizationResult r;
    r.singular_values = svd.singularValues();
    const Vector& s = r.singular_values;
    const double tol = static_cast<double>(std::max(rows, cols)) * kEps * s(0);
    if (s(0) == 0.0 || !(s(nx - 1) > tol)) {
        std::ostringstream msg;
        msg << "svd_realize: sigma_" << nx << " = " << s(nx - 1) << " is below tolerance; order not supported by data";
        throw RankDeficiencyError(msg.str());
    }
    r.sigma_gap = s(nx - 1) - (nx < s.size() ? s(nx) : 0.0);

    Matrix u1 = svd.matrixU().leftCols(nx);
    Matrix v1 = svd.matrixV().leftCols(nx);
    for (Index c = 0; c < nx; ++c) {
        Index at = 0;
        u1.col(c).cwiseAbs().maxCoeff(&at);
        if (u1(at, c) < 0.0) {
            u1.col(c) *= -1.0;
            v1.col(c) *= -1.0;
        }
    }
    const Vector root = s.head(nx).cwiseSqrt();
    r.gamma = u1 * root.asDiagonal();
    r.lp = root.asDiagonal() * v1.transpose();
    return r;
}

void extract_system(RealizationResult& r, Index p, Index f, Index nx, Index nu, Index ny) {
    if (r.gamma.rows() != f * ny || r.gamma.cols() != nx || r.lp.rows() != nx || r.lp.cols() != p * (ny + nu)) {
        throw ExtractionError("extract_system: factor dimensions do not match (p, f, nx, nu, ny)");
    }
    if (f * ny < nx + ny) {
        throw ExtractionError("extract_system: need f*ny >= nx + ny for the shift step");
    }
    const Index shifted = (f - 1) * ny;
    const Matrix upper = r.gamma.topRows(shifted);
    const Matrix lower = r.gamma.bottomRows(shifted);
    if (linalg::numerical_rank(upper, static_cast<double>(std::max(shifted, nx))) < nx) {
        throw ExtractionError("extract_system: truncated observability factor is rank deficient");
    }
    r.C = r.gamma.topRows(ny);
    r.A = linalg::pseudo_inverse(upper) * lower;
    r.K = r.lp.middleCols((p - 1) * ny, ny);
    r.B = r.lp.rightCols(nu);
    r.has_system = true;
}

RealizationResult realize(const Matrix& gamma_lp, Index p, Index f, Index nx, Index nu, Index ny) {
    RealizationResult r = svd_realize(gamma_lp, nx);
    extract_system(r, p, f, nx, nu, ny);
    return r;
}

AlignmentResult align_similarity(const StateSpaceModel& truth, Index f, const RealizationResult& r) {
    const Index nx = truth.nx();
    const Matrix gamma = extended_observability(truth, f);
    if (linalg::numerical_rank(gamma, static_cast<double>(gamma.rows())) < nx) {
        throw AlignmentError("align_similarity: true observability matrix is rank deficient");
    }
    AlignmentResult a;
    a.T = linalg::pseudo_inverse(gamma) * r.gamma;
    const Vector s = linalg::singular_values(a.T);
    a.condition = s(nx - 1) > 0.0 ? s(0) / s(nx - 1) : std::numeric_limits<double>::infinity();
    if (!(s(nx - 1) > static_cast<double>(nx) * kEps * s(0)) || s(0) == 0.0) {
        throw AlignmentError("align_similarity: similarity transform is singular");
    }
    const Matrix tinv = a.T.inverse();
    const Index p = r.lp.cols() / (truth.ny() + truth.nu());
    a.err_gamma = linalg::spectral_norm(r.gamma - gamma * a.T);
    a.err_lp = linalg::spectral_norm(r.lp - tinv * extended_controllability(truth, p));
    if (r.has_system) {
        a.err_A = linalg::spectral_norm(r.A - tinv * truth.A * a.T);
        a.err_B = linalg::spectral_norm(r.B - tinv * truth.B);
        a.err_C = linalg::spectral_norm(r.C - truth.C * a.T);
        a.err_K = linalg::spectral_norm(r.K - tinv * truth.K);
    }
    return a;
}

SvdConditionReport check_svd_condition(const Matrix& true_gamma_lp, const Matrix& est_gamma_lp, Index nx) {
    if (true_gamma_lp.rows() != est_gamma_lp.rows() || true_gamma_lp.cols() != est_gamma_lp.cols()) {
        throw ArgumentError("check_svd_condition: shape mismatch");
    }
    SvdConditionReport rep;
    rep.delta = linalg::spectral_norm(est_gamma_lp - true_gamma_lp);
    const Vector s = linalg::singular_values(true_gamma_lp);
    rep.sigma_nx = nx <= s.size() ? s(nx - 1) : 0.0;
    rep.holds = rep.delta <= rep.sigma_nx / 4.0;
    return rep;
}

ProcrustesResult procrustes_align(const Matrix& gamma_ref, const Matrix& lp_ref, const Matrix& gamma_est,
                                  const Matrix& lp_est) {
    // Stack [G; L^T]: both residuals become X_est - X_ref T.
    const Index nx = gamma_ref.cols();
    Matrix ref(gamma_ref.rows() + lp_ref.cols(), nx);
    Matrix est(gamma_est.rows() + lp_est.cols(), nx);
    ref << gamma_ref, lp_ref.transpose();
    est << gamma_est, lp_est.transpose();
    Eigen::JacobiSVD<Matrix> svd(ref.transpose() * est, Eigen::ComputeFullU | Eigen::ComputeFullV);
    ProcrustesResult out;
    out.T = svd.matrixU() * svd.matrixV().transpose();
    out.err_gamma = linalg::spectral_norm(gamma_est - gamma_ref * out.T);
    out.err_lp = linalg::spectral_norm(lp_est - out.T.transpose() * lp_ref);
    return out;
}

StateSpaceModel realized_model(const RealizationResult& r, const StateSpaceModel& scales) {
    if (!r.has_system) throw ArgumentError("realized_model: system matrices were not extracted");
    StateSpaceModel m;
    m.A = r.A;
    m.B = r.B;
    m.C = r.C;
    m.K = r.K;
    m.sigma_e = scales.sigma_e;
    m.sigma_u = scales.sigma_u;
    return m;
}

}  // namespace parsim
