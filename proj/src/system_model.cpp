#include "parsim/system_model.hpp"

#include "parsim/json.hpp"
#include "parsim/linalg.hpp"

#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace parsim {

void StateSpaceModel::check_dimensions() const {
    const Index n = A.rows();
    std::ostringstream msg;
    if (n == 0 || A.cols() != n) msg << "A must be square and non-empty; ";
    if (B.rows() != n || B.cols() == 0) msg << "B must have nx rows and nu >= 1 columns; ";
    if (C.cols() != n || C.rows() == 0) msg << "C must have nx columns and ny >= 1 rows; ";
    if (K.rows() != n || K.cols() != C.rows()) msg << "K must be nx x ny; ";
    if (!(sigma_u > 0.0)) msg << "sigma_u must be positive; ";
    if (!(sigma_e >= 0.0)) msg << "sigma_e must be nonnegative; ";
    const std::string s = msg.str();
    if (!s.empty()) throw ConfigError("model dimension mismatch: " + s);
}

StateSpaceModel fixture_s1() {
    StateSpaceModel m;
    m.A = Matrix::Constant(1, 1, 0.5);
    m.B = Matrix::Constant(1, 1, 1.0);
    m.C = Matrix::Constant(1, 1, 1.0);
    m.K = Matrix::Constant(1, 1, 0.5);
    m.sigma_u = 1.0;
    m.sigma_e = 0.1;
    return m;
}

ValidationReport validate_model(const StateSpaceModel& m, ValidationOptions opts) {
    m.check_dimensions();
    ValidationReport rep;
    const Index n = m.nx();
    rep.rho_a = linalg::spectral_radius(m.A);
    rep.rho_closed_loop = linalg::spectral_radius(m.closed_loop());

    Matrix obs = extended_observability(m, n);
    Matrix drive(n, m.nu() + m.ny());
    drive << m.B, m.K;
    Matrix ctrb(n, n * drive.cols());
    Matrix blk = drive;
    for (Index j = 0; j < n; ++j) {
        ctrb.middleCols(j * drive.cols(), drive.cols()) = blk;
        blk = m.A * blk;
    }
    const double scale = static_cast<double>(n);
    rep.observability_rank = linalg::numerical_rank(obs, scale);
    rep.controllability_rank = linalg::numerical_rank(ctrb, scale);

    std::ostringstream diag;
    bool ok = true;
    if (rep.rho_a > 1.0 + kSpectralTolerance) {
        ok = false;
        diag << "rho(A) = " << rep.rho_a << " exceeds 1; ";
    }
    if (!(rep.rho_closed_loop < 1.0 - kSpectralTolerance)) {
        ok = false;
        diag << "rho(A - KC) = " << rep.rho_closed_loop << " is not below 1; ";
    }
    if (rep.observability_rank != n) {
        ok = false;
        diag << "(A, C) not observable (rank " << rep.observability_rank << " < " << n << "); ";
    }
    if (rep.controllability_rank != n) {
        ok = false;
        diag << "(A, [B K]) not controllable (rank " << rep.controllability_rank << " < " << n << "); ";
    }
    if (m.sigma_e == 0.0 && !opts.noiseless) {
        ok = false;
        diag << "sigma_e = 0 requires noiseless mode; ";
    }
    rep.passed = ok;
    rep.diagnostics = ok ? "ok" : diag.str();
    return rep;
}

Trajectory replay(const StateSpaceModel& m, const Matrix& u, const Matrix& e) {
    const Index len = u.cols();
    Trajectory t;
    t.u = u;
    t.e = e;
    t.x = Matrix::Zero(m.nx(), len);
    t.y = Matrix::Zero(m.ny(), len);
    Vector x = Vector::Zero(m.nx());
    for (Index k = 0; k < len; ++k) {
        t.x.col(k) = x;
        t.y.col(k) = m.C * x + e.col(k);
        x = m.A * x + m.B * u.col(k) + m.K * e.col(k);
    }
    return t;
}

Trajectory simulate(const StateSpaceModel& m, Index length, std::uint64_t seed, bool noiseless) {
    m.check_dimensions();
    if (length <= 0) throw DataLengthError("simulate: trajectory length must be at least 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix u(m.nu(), length);
    Matrix e = Matrix::Zero(m.ny(), length);
    // Per time step: inputs first, then innovations, so the input sequence
    // does not depend on the noiseless flag.
    for (Index k = 0; k < length; ++k) {
        for (Index r = 0; r < m.nu(); ++r) u(r, k) = m.sigma_u * normal(rng);
        for (Index r = 0; r < m.ny(); ++r) {
            const double draw = normal(rng);
            if (!noiseless) e(r, k) = m.sigma_e * draw;
        }
    }
    return replay(m, u, e);
}

Matrix markov_parameter(const StateSpaceModel& m, Index lag, Channel channel) {
    if (lag < 0) throw ArgumentError("markov_parameter: lag must be nonnegative");
    if (channel == Channel::input) {
        if (lag == 0) return Matrix::Zero(m.ny(), m.nu());
        return m.C * linalg::matrix_power(m.A, lag - 1) * m.B;
    }
    if (lag == 0) return Matrix::Identity(m.ny(), m.ny());
    return m.C * linalg::matrix_power(m.A, lag - 1) * m.K;
}

Matrix extended_observability(const StateSpaceModel& m, Index f) {
    if (f <= 0) throw ArgumentError("extended_observability: horizon must be at least 1");
    const Index ny = m.ny();
    Matrix out(f * ny, m.nx());
    Matrix blk = m.C;
    for (Index j = 0; j < f; ++j) {
        out.middleRows(j * ny, ny) = blk;
        blk = blk * m.A;
    }
    return out;
}

Matrix toeplitz_markov(const StateSpaceModel& m, Index f, Channel channel) {
    if (f <= 0) throw ArgumentError("toeplitz_markov: horizon must be at least 1");
    const Index ny = m.ny();
    const Index w = channel == Channel::input ? m.nu() : m.ny();
    Matrix out = Matrix::Zero(f * ny, f * w);
    for (Index lag = 0; lag < f; ++lag) {
        const Matrix blk = markov_parameter(m, lag, channel);
        for (Index c = 0; c + lag < f; ++c) out.block((c + lag) * ny, c * w, ny, w) = blk;
    }
    return out;
}

Matrix extended_controllability(const StateSpaceModel& m, Index p) {
    if (p <= 0) throw ArgumentError("extended_controllability: horizon must be at least 1");
    const Index ny = m.ny();
    const Index nu = m.nu();
    const Matrix ac = m.closed_loop();
    Matrix out(m.nx(), p * (ny + nu));
    Matrix pk = m.K;
    Matrix pb = m.B;
    // Rightmost block of each half is the zeroth power.
    for (Index j = 0; j < p; ++j) {
        out.middleCols((p - 1 - j) * ny, ny) = pk;
        out.middleCols(p * ny + (p - 1 - j) * nu, nu) = pb;
        pk = ac * pk;
        pb = ac * pb;
    }
    return out;
}

Matrix state_covariance(const StateSpaceModel& m, long long k) {
    if (k < 1) throw ArgumentError("state_covariance: time index is 1-based");
    const Matrix q = m.sigma_u * m.sigma_u * m.B * m.B.transpose() +
                     m.sigma_e * m.sigma_e * m.K * m.K.transpose();
    return linalg::lyapunov_partial_sum(m.A, q, k - 1);
}

Matrix true_theta(const StateSpaceModel& m, Index p, Index i) {
    const Index nu = m.nu();
    const Matrix lp = extended_controllability(m, p);
    Matrix theta(m.ny(), lp.cols() + i * nu);
    theta.leftCols(lp.cols()) = m.C * linalg::matrix_power(m.A, i - 1) * lp;
    // [G_{i-1} ... G_1 G_0]
    for (Index c = 0; c < i; ++c)
        theta.middleCols(lp.cols() + c * nu, nu) = markov_parameter(m, i - 1 - c, Channel::input);
    return theta;
}

// ---- JSON ----

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const char* name) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array()) throw ConfigError(std::string("matrix '") + name + "' must be a nested array");
    const Index rows = static_cast<Index>(j.size());
    if (rows == 0) return Matrix();
    // A flat array of numbers is read as a single row.
    if (j.front().is_number()) {
        Matrix out(1, rows);
        for (Index c = 0; c < rows; ++c) {
            if (!j[c].is_number()) throw ConfigError(std::string("matrix '") + name + "' has non-numeric entry");
            out(0, c) = j[c].get<double>();
        }
        return out;
    }
    const Index cols = static_cast<Index>(j.front().size());
    Matrix out(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const Json& row = j[r];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw ConfigError(std::string("matrix '") + name + "' is ragged");
        for (Index c = 0; c < cols; ++c) {
            if (!row[c].is_number()) throw ConfigError(std::string("matrix '") + name + "' has non-numeric entry");
            out(r, c) = row[c].get<double>();
        }
    }
    return out;
}

Json model_to_json(const StateSpaceModel& m) {
    Json j;
    j["A"] = matrix_to_json(m.A);
    j["B"] = matrix_to_json(m.B);
    j["C"] = matrix_to_json(m.C);
    j["K"] = matrix_to_json(m.K);
    j["sigma_e"] = m.sigma_e;
    j["sigma_u"] = m.sigma_u;
    return j;
}

StateSpaceModel model_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("model JSON must be an object");
    for (const char* key : {"A", "B", "C", "K", "sigma_e", "sigma_u"}) {
        if (!j.contains(key)) throw ConfigError(std::string("model JSON is missing key '") + key + "'");
    }
    StateSpaceModel m;
    m.A = matrix_from_json(j["A"], "A");
    m.B = matrix_from_json(j["B"], "B");
    m.C = matrix_from_json(j["C"], "C");
    m.K = matrix_from_json(j["K"], "K");
    if (!j["sigma_e"].is_number() || !j["sigma_u"].is_number())
        throw ConfigError("sigma_e and sigma_u must be numbers");
    m.sigma_e = j["sigma_e"].get<double>();
    m.sigma_u = j["sigma_u"].get<double>();
    m.check_dimensions();
    return m;
}

StateSpaceModel model_from_json_string(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& ex) {
        throw ConfigError(std::string("invalid model JSON: ") + ex.what());
    }
    return model_from_json(j);
}

std::string model_to_json_string(const StateSpaceModel& m) { return model_to_json(m).dump(2); }

StateSpaceModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json_string(ss.str());
}

void save_model(const std::string& path, const StateSpaceModel& m) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot open " + path + " for writing");
    out << model_to_json_string(m) << '\n';
}

}  // namespace parsim
