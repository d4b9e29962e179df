#include "parsim/linalg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

namespace parsim::linalg {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

Vector singular_values(const Matrix& m) {
    if (m.size() == 0) return Vector();
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues();
}

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return singular_values(m)(0);
}

double spectral_radius(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Index numerical_rank(const Matrix& m, double rank_scale) {
    const Vector s = singular_values(m);
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double tol = rank_scale * kEps * s(0);
    return static_cast<Index>((s.array() > tol).count());
}

double lambda_min_sym(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

Matrix pseudo_inverse(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Matrix result = Matrix::Zero(m.cols(), m.rows());
    if (s.size() == 0 || s(0) == 0.0) return result;
    const double tol = static_cast<double>(std::max(m.rows(), m.cols())) * kEps * s(0);
    Vector inv = Vector::Zero(s.size());
    for (Index k = 0; k < s.size(); ++k) {
        if (s(k) > tol) inv(k) = 1.0 / s(k);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix matrix_power(const Matrix& a, long long k) {
    Matrix result = Matrix::Identity(a.rows(), a.cols());
    Matrix base = a;
    while (k > 0) {
        if (k & 1) result = result * base;
        k >>= 1;
        if (k > 0) base = base * base;
    }
    return result;
}

Matrix lyapunov_partial_sum(const Matrix& a, const Matrix& q, long long k) {
    // Binary expansion of k: with S(m) the m-term sum and P = A^m,
    // S(m + r) = S(m) + P S(r) P^T.
    const Index n = a.rows();
    Matrix total = Matrix::Zero(n, n);
    Matrix total_power = Matrix::Identity(n, n);  // A^(terms already in total)
    Matrix block = q;                               // S(2^b)
    Matrix block_power = a;                         // A^(2^b)
    while (k > 0) {
        if (k & 1) {
            total += total_power * block * total_power.transpose();
            total_power = total_power * block_power;
        }
        k >>= 1;
        if (k > 0) {
            block += block_power * block * block_power.transpose();
            block_power = block_power * block_power;
        }
    }
    return 0.5 * (total + total.transpose());
}

void write_csv(std::ostream& os, const Matrix& m) {
    char buf[32];
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
            if (c > 0) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

void write_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot open " + path + " for writing");
    write_csv(out, m);
}

}  // namespace parsim::linalg
