#include "parsim/data_assembly.hpp"

#include <string>

namespace parsim {

Matrix block_hankel(const Matrix& signal, Index first, Index blocks, Index n) {
    const Index w = signal.rows();
    Matrix out(blocks * w, n);
    for (Index r = 0; r < blocks; ++r) out.middleRows(r * w, w) = signal.middleCols(first + r, n);
    return out;
}

HankelBundle build_hankels(const Trajectory& t, Index p, Index f, Index n) {
    if (p < 1 || f < 1 || n < 1) throw ArgumentError("build_hankels: p, f and N must be at least 1");
    const Index needed = p + f + n - 1;
    if (t.length() < needed) {
        throw DataLengthError("build_hankels: trajectory has " + std::to_string(t.length()) +
                              " samples, need p + f + N - 1 = " + std::to_string(needed));
    }
    HankelBundle h;
    h.p = p;
    h.f = f;
    h.n = n;
    h.nu = t.u.rows();
    h.ny = t.y.rows();
    // Column 0 holds time 1; the past window starts there and the future
    // window at time k = p + 1.
    h.Up = block_hankel(t.u, 0, p, n);
    h.Yp = block_hankel(t.y, 0, p, n);
    h.Uf = block_hankel(t.u, p, f, n);
    h.Yf = block_hankel(t.y, p, f, n);
    h.Zp.resize(h.Yp.rows() + h.Up.rows(), n);
    h.Zp << h.Yp, h.Up;
    if (t.e.cols() >= needed) h.Ef = block_hankel(t.e, p, f, n);
    if (t.x.cols() >= needed) {
        h.Xk = t.x.middleCols(p, n);
        h.Xkp = t.x.middleCols(0, n);
    }
    return h;
}

RegressorBank build_regressor_bank(const HankelBundle& h) {
    RegressorBank bank;
    bank.p = h.p;
    bank.f = h.f;
    bank.n = h.n;
    bank.nu = h.nu;
    bank.ny = h.ny;
    const Index zp_rows = h.Zp.rows();
    for (Index i = 1; i <= h.f; ++i) {
        Matrix reg(zp_rows + i * h.nu, h.n);
        reg << h.Zp, h.Uf.topRows(i * h.nu);
        bank.regressors.push_back(std::move(reg));
        bank.targets.push_back(h.Yf.middleRows((i - 1) * h.ny, h.ny));
        if (h.Ef.size() > 0) bank.innovations.push_back(h.Ef.topRows(i * h.ny));
    }
    return bank;
}

Matrix empirical_covariance(const RegressorBank& bank, Index i) {
    if (i < 1 || i > bank.f) throw ArgumentError("empirical_covariance: row index out of range");
    const Matrix& z = bank.regressor(i);
    Matrix s = z * z.transpose() / static_cast<double>(z.cols());
    return 0.5 * (s + s.transpose());
}

}  // namespace parsim
