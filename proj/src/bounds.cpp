#include "parsim/bounds.hpp"

#include "parsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace parsim {

Matrix covariate_covariance(const StateSpaceModel& m, Index p, Index i, long long k) {
    if (k < 1) throw ArgumentError("covariate_covariance: start time is 1-based");
    if (p < 1 || i < 0) throw ArgumentError("covariate_covariance: need p >= 1, i >= 0");
    const Index ny = m.ny();
    const Index nu = m.nu();
    const double su2 = m.sigma_u * m.sigma_u;
    const double se2 = m.sigma_e * m.sigma_e;
    const Matrix obs = extended_observability(m, p);
    const Matrix gp = toeplitz_markov(m, p, Channel::input);
    const Matrix hp = toeplitz_markov(m, p, Channel::noise);
    const Matrix sx = state_covariance(m, k);

    const Index yp = p * ny;
    const Index uw = (p + i) * nu;
    Matrix s = Matrix::Zero(yp + uw, yp + uw);
    s.topLeftCorner(yp, yp) = obs * sx * obs.transpose() + su2 * gp * gp.transpose() + se2 * hp * hp.transpose();
    s.block(0, yp, yp, p * nu) = su2 * gp;
    s.block(yp, 0, p * nu, yp) = su2 * gp.transpose();
    s.bottomRightCorner(uw, uw) = su2 * Matrix::Identity(uw, uw);
    return 0.5 * (s + s.transpose());
}

double snr(const StateSpaceModel& m, Index p, Index i, long long k) {
    if (m.sigma_e == 0.0) return std::numeric_limits<double>::infinity();
    return linalg::lambda_min_sym(covariate_covariance(m, p, i, k)) / (m.sigma_e * m.sigma_e);
}

PastHorizonChoice choose_past_horizon(const StateSpaceModel& m, long long n, std::span<const double> beta_grid) {
    if (n < 1) throw ArgumentError("choose_past_horizon: N must be positive");
    if (beta_grid.empty()) throw ArgumentError("choose_past_horizon: empty beta grid");
    const Matrix ac = m.closed_loop();
    if (!(linalg::spectral_radius(ac) < 1.0)) {
        throw HorizonInfeasibleError("choose_past_horizon: rho(A - KC) >= 1");
    }
    const double sx = linalg::spectral_norm(state_covariance(m, n));
    const double target = std::pow(static_cast<double>(n), -3.0);
    const double logn = std::log(static_cast<double>(n));

    std::vector<double> grid(beta_grid.begin(), beta_grid.end());
    std::sort(grid.begin(), grid.end());
    std::ostringstream tried;
    for (double beta : grid) {
        const Index p = std::max<Index>(m.nx(), static_cast<Index>(std::ceil(beta * logn)));
        const double lhs = linalg::spectral_norm(m.C * linalg::matrix_power(ac, p)) * sx;
        if (lhs <= target) return {p, beta, lhs, target};
        tried << " beta=" << beta << " (p=" << p << ", lhs=" << lhs << ")";
    }
    std::ostringstream msg;
    msg << "choose_past_horizon: no beta reaches ||C A_c^p|| ||Sigma_x,N|| <= N^-3 = " << target << ";"
        << tried.str();
    throw HorizonInfeasibleError(msg.str());
}

double burn_in_threshold(const StateSpaceModel& m, Index p, Index i, double delta, double c0, long long n) {
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("burn-in: delta must lie in (0, 1)");
    const Index tau = row_tau(p, i);
    const auto d = static_cast<double>(row_dim(m, p, i));
    const double lmin = linalg::lambda_min_sym(covariate_covariance(m, p, i, tau));
    if (!(lmin > 0.0)) throw NumericalCovarianceError("burn-in: Sigma_{i,tau_i} is not positive definite");
    const double norm_n = linalg::spectral_norm(covariate_covariance(m, p, i, n));
    const double csys = static_cast<double>(n) / (3.0 * static_cast<double>(tau)) * (norm_n * norm_n) / (lmin * lmin);
    const double se2 = m.sigma_e * m.sigma_e;
    return c0 * static_cast<double>(tau) * std::max(se2, 1.0) * (std::log(1.0 / delta) + d * std::log(csys));
}

long long burn_in_time(const StateSpaceModel& m, Index p, Index i, double delta, double c0, long long cap) {
    auto ok = [&](long long n) { return static_cast<double>(n) >= burn_in_threshold(m, p, i, delta, c0, n); };
    if (ok(1)) return 1;
    long long lo = 1;  // fails
    long long hi = 2;
    while (!ok(hi)) {
        lo = hi;
        if (hi >= cap) {
            throw BurnInNotFoundError("burn_in_time: no N <= cap = " + std::to_string(cap) + " satisfies N >= N_0(N)");
        }
        hi = std::min(hi * 2, cap);
    }
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

PeReport pe_check(const Matrix& empirical, const Matrix& theoretical) {
    if (empirical.rows() != theoretical.rows() || empirical.cols() != theoretical.cols()) {
        throw ArgumentError("pe_check: dimension mismatch");
    }
    PeReport r;
    r.margin = linalg::lambda_min_sym(empirical - theoretical / 16.0);
    r.holds = r.margin >= 0.0;
    r.lambda_min_emp = linalg::lambda_min_sym(empirical);
    return r;
}

Matrix noise_markov_row(const StateSpaceModel& m, Index i) {
    const Index ny = m.ny();
    Matrix h(ny, i * ny);
    for (Index c = 0; c < i; ++c) h.middleCols(c * ny, ny) = markov_parameter(m, i - 1 - c, Channel::noise);
    return h;
}

namespace {

double log_det_spd(const Matrix& s, const char* what) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) {
        throw NumericalCovarianceError(std::string("theta_error_bound: ") + what + " is not positive definite");
    }
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

ThetaBound theta_error_bound(const StateSpaceModel& m, Index p, Index f, Index i, long long n, double delta,
                             double c) {
    if (n < 1) throw ArgumentError("theta_error_bound: N must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("theta_error_bound: delta must lie in (0, 1)");
    if (i < 1 || i > f) throw ArgumentError("theta_error_bound: row index out of range");
    ThetaBound b;
    b.h_norm = linalg::spectral_norm(noise_markov_row(m, i));
    if (m.sigma_e == 0.0) {
        b.snr = std::numeric_limits<double>::infinity();
        return b;
    }
    const Index tau = row_tau(p, i);
    const Matrix s_tau = covariate_covariance(m, p, i, tau);
    const Matrix s_n = covariate_covariance(m, p, i, n);
    const double lmin = linalg::lambda_min_sym(s_tau);
    if (!(lmin > 0.0)) throw NumericalCovarianceError("theta_error_bound: Sigma_{i,tau_i} is not positive definite");
    b.snr = lmin / (m.sigma_e * m.sigma_e);
    b.log_det = log_det_spd(s_n, "Sigma_{i,N}") - log_det_spd(s_tau, "Sigma_{i,tau_i}");

    const auto d = static_cast<double>(row_dim(m, p, i));
    const auto nn = static_cast<double>(n);
    b.stochastic2 = c * b.h_norm * b.h_norm / (b.snr * nn) * (d * std::log(d / delta) + b.log_det);
    b.bias2 = 16.0 * c * static_cast<double>(m.nx()) / (nn * nn * b.snr) * std::log(1.0 / delta);
    b.theta2 = b.stochastic2;
    return b;
}

double stacked_bound(std::span<const double> radii) {
    if (radii.empty()) throw ArgumentError("stacked_bound: empty radius list");
    const double worst = *std::max_element(radii.begin(), radii.end());
    return std::sqrt(static_cast<double>(radii.size())) * worst;
}

RealizationRadii realization_bound(double delta_norm, const Matrix& true_gamma_lp, Index nx, double sigma_o,
                                   double gamma_lp_norm) {
    const Vector s = linalg::singular_values(true_gamma_lp);
    if (nx < 1 || nx > s.size()) throw ArgumentError("realization_bound: order out of range");
    const double sn = s(nx - 1);
    if (delta_norm > sn / 4.0) {
        std::ostringstream msg;
        msg << "realization_bound: perturbation " << delta_norm << " exceeds sigma_nx / 4 = " << sn / 4.0;
        throw ConditionViolatedError(msg.str());
    }
    RealizationRadii r;
    r.factor = 2.0 * std::sqrt(10.0 * static_cast<double>(nx) / sn) * delta_norm;
    r.cbk = r.factor;
    r.a = (std::sqrt(gamma_lp_norm) + sigma_o) / (sigma_o * sigma_o) * r.factor;
    return r;
}

double realization_sigma_o(const Matrix& gamma_est, const Matrix& gamma_ref, Index ny) {
    const Index nx = gamma_ref.cols();
    const Index rows = gamma_ref.rows() - ny;
    const Vector a = linalg::singular_values(gamma_est.topRows(rows));
    const Vector b = linalg::singular_values(gamma_ref.topRows(rows));
    if (a.size() < nx || b.size() < nx) throw ArgumentError("realization_sigma_o: too few rows");
    return std::min(a(nx - 1), b(nx - 1));
}

BoundReport make_bound_report(const StateSpaceModel& m, Index p, Index f, Index i, long long n, double delta,
                              double c, double c0, bool with_burn_in) {
    BoundReport r;
    r.i = i;
    r.p = p;
    r.f = f;
    r.n = n;
    r.delta = delta;
    r.tau = row_tau(p, i);
    r.d = row_dim(m, p, i);
    r.c = c;
    r.c0 = c0;
    const ThetaBound b = theta_error_bound(m, p, f, i, n, delta, c);
    r.snr = b.snr;
    r.stochastic2 = b.stochastic2;
    r.bias2 = b.bias2;
    r.theta2 = b.theta2;
    if (with_burn_in && m.sigma_e > 0.0) r.n_pe = burn_in_time(m, p, i, delta / (3.0 * static_cast<double>(f)), c0);
    r.delta_split = "row radii at delta; stacked radius valid w.p. 1-2delta when N >= N_pe(delta/(3f)) for all i";
    return r;
}

std::vector<BoundReport> bank_bound_reports(const StateSpaceModel& m, Index p, Index f, long long n, double delta,
                                            double c, double c0, bool with_burn_in) {
    std::vector<BoundReport> out;
    std::vector<double> radii;
    for (Index i = 1; i <= f; ++i) {
        out.push_back(make_bound_report(m, p, f, i, n, delta, c, c0, with_burn_in));
        radii.push_back(std::sqrt(out.back().theta2));
    }
    const double stacked = stacked_bound(radii);
    for (auto& r : out) r.stacked = stacked;
    return out;
}

Json to_json(const BoundReport& r) {
    auto num = [](double v) -> Json {
        if (std::isfinite(v)) return v;
        return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    };
    Json j;
    j["i"] = r.i;
    j["p"] = r.p;
    j["f"] = r.f;
    j["N"] = r.n;
    j["delta"] = r.delta;
    j["tau"] = r.tau;
    j["d"] = r.d;
    j["snr"] = num(r.snr);
    j["n_pe"] = r.n_pe >= 0 ? Json(r.n_pe) : Json(nullptr);
    j["stochastic_radius2"] = num(r.stochastic2);
    j["bias_radius2"] = num(r.bias2);
    j["theta_radius2"] = num(r.theta2);
    j["stacked_radius"] = r.stacked >= 0.0 ? num(r.stacked) : Json(nullptr);
    if (r.has_realization) {
        j["realization_radii"] = {{"factor", num(r.realization.factor)},
                                  {"C_B_K", num(r.realization.cbk)},
                                  {"A", num(r.realization.a)}};
    } else {
        j["realization_radii"] = nullptr;
    }
    j["constants_used"] = {{"c", r.c}, {"c0", r.c0}};
    j["delta_split"] = r.delta_split;
    return j;
}

}  // namespace parsim
