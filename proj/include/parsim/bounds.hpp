#pragma once

#include "parsim/json.hpp"
#include "parsim/system_model.hpp"

#include <span>
#include <string>
#include <vector>

namespace parsim {

/// Exact E z z^T for z = (y_k..y_{k+p-1}, u_k..u_{k+p-1}, u_{k+p}..u_{k+p+i-1}),
/// k the 1-based start time of the window. With Gamma_p, G_p and H_p the
/// p-horizon observability and Toeplitz matrices:
///
///   [ Gamma_p Sx_k Gamma_p^T + su^2 G_p G_p^T + se^2 H_p H_p^T   su^2 [G_p 0] ]
///   [ su^2 [G_p 0]^T                                              su^2 I       ]
Matrix covariate_covariance(const StateSpaceModel& m, Index p, Index i, long long k);

/// lambda_min(Sigma_{i,k}) / sigma_e^2; +infinity when sigma_e == 0.
double snr(const StateSpaceModel& m, Index p, Index i, long long k);

struct PastHorizonChoice {
    Index p = 0;
    double beta = 0.0;
    double lhs = 0.0;     // ||C A_c^p|| ||Sigma_{x,N}||
    double target = 0.0;  // N^-3
};

/// Smallest p = max(nx, ceil(beta ln N)) over the grid with
/// ||C A_c^p|| ||Sigma_{x,N}|| <= N^-3. Throws HorizonInfeasibleError.
PastHorizonChoice choose_past_horizon(const StateSpaceModel& m, long long n, std::span<const double> beta_grid);

/// tau_i = i + p, d_i = p*ny + tau_i*nu.
inline Index row_tau(Index p, Index i) { return i + p; }
inline Index row_dim(const StateSpaceModel& m, Index p, Index i) { return p * m.ny() + (p + i) * m.nu(); }

/// N_0(N) = c0 tau max(se^2, 1) (log(1/delta) + d log C_sys(N)),
/// C_sys(N) = N / (3 tau) * ||Sigma_{i,N}||^2 / lambda_min(Sigma_{i,tau})^2.
double burn_in_threshold(const StateSpaceModel& m, Index p, Index i, double delta, double c0, long long n);

/// min { N : N >= N_0(N) } by doubling then bisection, capped at `cap`
/// (BurnInNotFoundError beyond it).
long long burn_in_time(const StateSpaceModel& m, Index p, Index i, double delta, double c0,
                       long long cap = 100'000'000);

struct PeReport {
    double margin = 0.0;        // lambda_min(emp - theo/16)
    bool holds = false;         // emp >= theo/16
    double lambda_min_emp = 0.0;
};

PeReport pe_check(const Matrix& empirical, const Matrix& theoretical);

struct ThetaBound {
    double snr = 0.0;
    double log_det = 0.0;        // log det(Sigma_{i,N} Sigma_{i,tau}^{-1})
    double h_norm = 0.0;         // ||H_fi||
    double stochastic2 = 0.0;
    double bias2 = 0.0;
    double theta2 = 0.0;
};

/// Squared radii for row i:
///   stochastic = c ||H_fi||^2 / (SNR N) (d log(d/delta) + log det(Sigma_N Sigma_tau^{-1}))
///   bias       = 16 c nx log(1/delta) / (N^2 SNR)
///   theta      = the stochastic expression, bias absorbed into c.
/// SNR and covariances are taken at tau_i and N. sigma_e == 0 gives zeros.
ThetaBound theta_error_bound(const StateSpaceModel& m, Index p, Index f, Index i, long long n, double delta,
                             double c);

/// sqrt(f) * max(radii). Throws ArgumentError on an empty list.
double stacked_bound(std::span<const double> radii);

struct RealizationRadii {
    double factor = 0.0;  // Gamma_f and L_p factors
    double cbk = 0.0;     // C, B, K
    double a = 0.0;
};

/// factor = 2 sqrt(10 nx / sigma_nx) Delta; cbk = factor;
/// a = (sqrt(||Gamma_f L_p||) + sigma_o) / sigma_o^2 * factor.
/// Throws ConditionViolatedError if Delta > sigma_nx / 4.
RealizationRadii realization_bound(double delta_norm, const Matrix& true_gamma_lp, Index nx, double sigma_o,
                                   double gamma_lp_norm);

/// min(sigma_nx(Gamma_est without last block row), sigma_nx(Gamma_ref
/// without last block row)).
double realization_sigma_o(const Matrix& gamma_est, const Matrix& gamma_ref, Index ny);

/// H_fi = [C A^{i-2} K ... C K I].
Matrix noise_markov_row(const StateSpaceModel& m, Index i);

struct BoundReport {
    Index i = 0;
    Index p = 0;
    Index f = 0;
    long long n = 0;
    double delta = 0.0;
    Index tau = 0;
    Index d = 0;
    double snr = 0.0;
    long long n_pe = -1;  // -1 when not computed
    double stochastic2 = 0.0;
    double bias2 = 0.0;
    double theta2 = 0.0;
    double stacked = -1.0;        // filled by bank-level reports
    RealizationRadii realization; // zero unless computed
    bool has_realization = false;
    double c = 1.0;
    double c0 = 1.0;
    std::string delta_split;
};

/// Row-level report; burn-in evaluated at delta/(3f) when `with_burn_in`.
BoundReport make_bound_report(const StateSpaceModel& m, Index p, Index f, Index i, long long n, double delta,
                              double c, double c0, bool with_burn_in);

/// Reports for i = 1..f with stacked = sqrt(f) max_i sqrt(theta2_i).
std::vector<BoundReport> bank_bound_reports(const StateSpaceModel& m, Index p, Index f, long long n, double delta,
                                            double c, double c0, bool with_burn_in);

Json to_json(const BoundReport& r);

}  // namespace parsim
