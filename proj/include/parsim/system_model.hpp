#pragma once

#include "parsim/types.hpp"

#include <cstdint>
#include <string>

namespace parsim {

/// Discrete-time LTI system in innovations form
///
///   x_{k+1} = A x_k + B u_k + K e_k
///   y_k     = C x_k + e_k
///
/// driven by i.i.d. Gaussian inputs u_k ~ N(0, sigma_u^2 I) and innovations
/// e_k ~ N(0, sigma_e^2 I), started from x_1 = 0.
struct StateSpaceModel {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix K;
    double sigma_e = 1.0;
    double sigma_u = 1.0;

    Index nx() const { return A.rows(); }
    Index nu() const { return B.cols(); }
    Index ny() const { return C.rows(); }

    /// Predictor matrix A - K C.
    Matrix closed_loop() const { return A - K * C; }

    /// Throws ConfigError if the matrix shapes are inconsistent.
    void check_dimensions() const;
};

/// Scalar fixture with A - KC = 0 (nilpotent predictor), so the truncation
/// bias of the ARX bank vanishes for every p >= 1.
/// A = 0.5, B = 1, C = 1, K = 0.5, sigma_u = 1, sigma_e = 0.1.
StateSpaceModel fixture_s1();

/// Tolerance for the spectral radius checks.
inline constexpr double kSpectralTolerance = 1e-9;

struct ValidationOptions {
    /// Permit sigma_e == 0 (noise-free experiments).
    bool noiseless = false;
};

struct ValidationReport {
    bool passed = false;
    double rho_a = 0.0;
    double rho_closed_loop = 0.0;
    Index observability_rank = 0;
    Index controllability_rank = 0;
    std::string diagnostics;
};

/// Checks stability (rho(A) <= 1 + tol, rho(A - KC) < 1 - tol), minimality
/// and noise scales. Dimension mismatches throw ConfigError; every other
/// violation is reported through `passed == false`.
ValidationReport validate_model(const StateSpaceModel& m, ValidationOptions opts = {});

/// Simulated data, one column per time step (column 0 is time k = 1).
struct Trajectory {
    Matrix u;
    Matrix y;
    Matrix x;
    Matrix e;

    Index length() const { return u.cols(); }
};

/// Draws u and e from std::mt19937_64 seeded with `seed` and runs the
/// recursion forward from x_1 = 0. With `noiseless`, e is identically zero.
Trajectory simulate(const StateSpaceModel& m, Index length, std::uint64_t seed, bool noiseless = false);

/// Replays the state recursion from stored (u, e); used to check that a
/// trajectory is self-consistent.
Trajectory replay(const StateSpaceModel& m, const Matrix& u, const Matrix& e);

/// Input channel: 0 for j = 0, C A^{j-1} B otherwise.
/// Noise channel: I for j = 0, C A^{j-1} K otherwise.
Matrix markov_parameter(const StateSpaceModel& m, Index lag, Channel channel);

/// [C; CA; ...; CA^{f-1}]
Matrix extended_observability(const StateSpaceModel& m, Index f);

/// Block lower-triangular Toeplitz matrix of Markov parameters, block (r, c)
/// = markov_parameter(r - c).
Matrix toeplitz_markov(const StateSpaceModel& m, Index f, Channel channel);

/// [A_c^{p-1}K ... A_c K  K | A_c^{p-1}B ... A_c B  B] with A_c = A - KC.
Matrix extended_controllability(const StateSpaceModel& m, Index p);

/// E x_k x_k^T for the recursion started at x_1 = 0 (k is 1-based).
Matrix state_covariance(const StateSpaceModel& m, long long k);

/// Row i (1-based) of the ARX bank: [CA^{i-1} L_p | G_{i-1} ... G_1 G_0].
Matrix true_theta(const StateSpaceModel& m, Index p, Index i);

// JSON schema: {"A": [[...]], "B": [[...]], "C": [[...]], "K": [[...]],
//               "sigma_e": x, "sigma_u": y}, matrices row-major.
StateSpaceModel model_from_json_string(const std::string& text);
std::string model_to_json_string(const StateSpaceModel& m);
StateSpaceModel load_model(const std::string& path);
void save_model(const std::string& path, const StateSpaceModel& m);

}  // namespace parsim
