#pragma once

#include "parsim/types.hpp"

#include <iosfwd>
#include <string>

namespace parsim::linalg {

/// Largest singular value (0 for an empty matrix).
double spectral_norm(const Matrix& m);

double spectral_radius(const Matrix& m);

/// Singular values in nonincreasing order.
Vector singular_values(const Matrix& m);

/// Numerical rank with threshold rank_scale * eps * sigma_max.
Index numerical_rank(const Matrix& m, double rank_scale);

/// Smallest eigenvalue of the symmetric part of m.
double lambda_min_sym(const Matrix& m);

/// Moore-Penrose pseudo-inverse via SVD; singular values below
/// max(rows, cols) * eps * sigma_max are treated as zero.
Matrix pseudo_inverse(const Matrix& m);

/// A^k by repeated squaring.
Matrix matrix_power(const Matrix& a, long long k);

/// Sum_{j=0}^{k-1} A^j Q (A^j)^T, evaluated with O(log k) products.
Matrix lyapunov_partial_sum(const Matrix& a, const Matrix& q, long long k);

/// Writes m as CSV (one matrix row per line, %.17g).
void write_csv(std::ostream& os, const Matrix& m);
void write_csv(const std::string& path, const Matrix& m);

}  // namespace parsim::linalg
