#include "oracles.hpp"
#include "scenarios.hpp"

#include "parsim/bounds.hpp"
#include "parsim/data_assembly.hpp"
#include "parsim/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace parsim;

namespace {

StateSpaceModel scalar(double a, double b, double c, double k, double se) {
    StateSpaceModel m;
    m.A = Matrix::Constant(1, 1, a);
    m.B = Matrix::Constant(1, 1, b);
    m.C = Matrix::Constant(1, 1, c);
    m.K = Matrix::Constant(1, 1, k);
    m.sigma_e = se;
    return m;
}

// Independent evaluation of the squared row radius from the stepped covariance.
double theta2_oracle(const StateSpaceModel& m, Index p, Index i, long long n, double delta, double c) {
    const Index tau = p + i;
    const Matrix s_tau = oracle::stepped_covariate_covariance(m, p, i, tau);
    const Matrix s_n = oracle::stepped_covariate_covariance(m, p, i, n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(s_tau);
    const double snr = es.eigenvalues().minCoeff() / (m.sigma_e * m.sigma_e);
    const Matrix prod = s_n * s_tau.inverse();
    const double log_det = std::log(prod.determinant());
    double h = 0.0;
    {
        Matrix row(m.ny(), i * m.ny());
        for (Index j = 0; j < i; ++j) {
            const Index lag = i - 1 - j;
            row.middleCols(j * m.ny(), m.ny()) =
                lag == 0 ? Matrix(Matrix::Identity(m.ny(), m.ny())) : Matrix(m.C * oracle::power_loop(m.A, lag - 1) * m.K);
        }
        Eigen::JacobiSVD<Matrix> svd(row);
        h = svd.singularValues()(0);
    }
    const double d = static_cast<double>(p * m.ny() + (p + i) * m.nu());
    return c * h * h / (snr * static_cast<double>(n)) * (d * std::log(d / delta) + log_det);
}

}  // namespace

TEST(CovariateCovariance, InputBlocksAreWhite) {
    std::mt19937_64 rng(1);
    const StateSpaceModel m = oracle::random_system(rng, 2, 2, 1);
    const Index p = 3, i = 2;
    const Matrix s = covariate_covariance(m, p, i, 7);
    const Index yp = p;
    const Index uw = (p + i) * 2;
    EXPECT_EQ(s.bottomRightCorner(uw, uw), Matrix::Identity(uw, uw));
    EXPECT_TRUE(s.block(0, yp + p * 2, yp, i * 2).isZero(0.0));
    EXPECT_TRUE(s.block(yp + p * 2, 0, i * 2, yp).isZero(0.0));
    EXPECT_TRUE(s.isApprox(s.transpose()));
    EXPECT_GE(linalg::lambda_min_sym(s), -1e-12);
}

TEST(CovariateCovariance, S1StationaryOutputVariance) {
    const Matrix s = covariate_covariance(fixture_s1(), 1, 1, 500);
    EXPECT_NEAR(s(0, 0), 1.3366666666666667 + 0.01, 1e-12);
    EXPECT_NEAR(s(0, 0), 1.3466666666666667, 1e-12);
}

TEST(CovariateCovariance, MatchesSymbolicStepping) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 10; ++t) {
        const StateSpaceModel m = oracle::random_system(rng, 3, 2, 2);
        for (long long k : {1LL, 2LL, 5LL, 40LL}) {
            const Matrix a = covariate_covariance(m, 3, 2, k);
            const Matrix b = oracle::stepped_covariate_covariance(m, 3, 2, k);
            EXPECT_LE((a - b).norm(), 1e-12 * b.norm());
        }
    }
}

TEST(CovariateCovariance, MatchesMonteCarlo) {
    std::mt19937_64 rng(3);
    const StateSpaceModel m = oracle::random_system(rng, 2, 1, 1, 0.5);
    const Index p = 2, i = 1;
    const long long k = 6;
    const oracle::SampleCovariance mc = oracle::sample_covariate_covariance(m, p, i, k, 100000, 77);
    const Matrix exact = covariate_covariance(m, p, i, k);
    for (Index r = 0; r < exact.rows(); ++r)
        for (Index c = 0; c < exact.cols(); ++c) {
            if (mc.stderr_(r, c) == 0.0) continue;
            EXPECT_LE(std::abs(mc.mean(r, c) - exact(r, c)), 3.0 * mc.stderr_(r, c)) << r << "," << c;
        }
}

TEST(Snr, Cases) {
    StateSpaceModel m = fixture_s1();
    const double base = snr(m, 2, 2, 4);
    Eigen::SelfAdjointEigenSolver<Matrix> es(covariate_covariance(m, 2, 2, 4));
    EXPECT_NEAR(base, es.eigenvalues().minCoeff() / 0.01, 1e-9 * base);
    m.sigma_e = 0.2;
    // Sigma depends on sigma_e; compare with the ratio at fixed Sigma instead.
    const Matrix s = covariate_covariance(m, 2, 2, 4);
    EXPECT_NEAR(snr(m, 2, 2, 4), linalg::lambda_min_sym(s) / 0.04, 1e-12);
    m.sigma_e = 0.0;
    EXPECT_TRUE(std::isinf(snr(m, 2, 2, 4)));
}

TEST(Snr, DiagonalCovariance) {
    // C = 0 leaves only the white y noise and inputs: Sigma = diag(se^2, su^2 ...).
    StateSpaceModel m = scalar(0.5, 1.0, 0.0, 0.0, 0.1);
    m.sigma_u = 1.0;
    EXPECT_NEAR(snr(m, 1, 1, 3), 0.01 / 0.01, 1e-12);
    m.sigma_e = 2.0;
    EXPECT_NEAR(snr(m, 1, 1, 3), 1.0 / 4.0, 1e-12);
}

TEST(PastHorizon, NilpotentPredictorUsesStateDimension) {
    const std::vector<double> grid{0.5, 1.0};
    for (long long n : {10LL, 1000LL, 100000LL}) {
        const PastHorizonChoice c = choose_past_horizon(fixture_s1(), n, grid);
        EXPECT_EQ(c.lhs, 0.0);
        EXPECT_LE(c.p, std::max<Index>(1, static_cast<Index>(std::ceil(0.5 * std::log(static_cast<double>(n))))));
    }
}

TEST(PastHorizon, ScalarDirectScan) {
    const StateSpaceModel m = scalar(0.9, 1.0, 1.0, 0.4, 0.3);  // A_c = 0.5
    std::vector<double> grid;
    for (int k = 1; k <= 3000; ++k) grid.push_back(0.01 * k);
    for (long long n : {100LL, 1000LL, 10000LL}) {
        const double sx = oracle::state_covariance_stepping(m, n)(0, 0);
        Index expect = 1;
        while (std::pow(0.5, static_cast<double>(expect)) * sx > std::pow(static_cast<double>(n), -3.0)) ++expect;
        const PastHorizonChoice c = choose_past_horizon(m, n, grid);
        EXPECT_EQ(c.p, expect) << "N=" << n;
        EXPECT_LE(c.lhs, c.target);
    }
}

TEST(PastHorizon, Infeasible) {
    const StateSpaceModel m = scalar(0.999, 1.0, 1.0, 0.001, 0.3);
    const std::vector<double> grid{0.1, 0.2};
    EXPECT_THROW(choose_past_horizon(m, 1000, grid), HorizonInfeasibleError);
}

TEST(BurnIn, DefinitionRecheck) {
    const StateSpaceModel m = fixture_s1();
    const long long npe = burn_in_time(m, 2, 2, 0.05, 1.0);
    EXPECT_GT(npe, 1);
    EXPECT_GE(static_cast<double>(npe), burn_in_threshold(m, 2, 2, 0.05, 1.0, npe));
    EXPECT_LT(static_cast<double>(npe - 1), burn_in_threshold(m, 2, 2, 0.05, 1.0, npe - 1));
}

TEST(BurnIn, MonotoneInDeltaAndC0) {
    std::mt19937_64 rng(4);
    const StateSpaceModel m = oracle::random_system(rng, 2, 1, 1, 0.5);
    long long prev = std::numeric_limits<long long>::max();
    for (double delta : {0.001, 0.01, 0.1, 0.5, 0.999}) {
        const long long n = burn_in_time(m, 2, 1, delta, 1.0);
        EXPECT_LE(n, prev);
        prev = n;
    }
    long long last = 0;
    for (double c0 : {0.5, 1.0, 2.0, 4.0}) {
        const long long n = burn_in_time(m, 2, 1, 0.05, c0);
        EXPECT_GE(n, last);
        last = n;
    }
    const double t1 = burn_in_threshold(m, 2, 1, 0.05, 1.0, 500);
    EXPECT_NEAR(burn_in_threshold(m, 2, 1, 0.05, 2.0, 500), 2.0 * t1, 1e-9 * std::abs(t1));
}

TEST(BurnIn, CapExceeded) {
    EXPECT_THROW(burn_in_time(fixture_s1(), 2, 2, 0.05, 1.0, 8), BurnInNotFoundError);
}

TEST(PeCheck, Cases) {
    Matrix s(2, 2);
    s << 2.0, 0.5, 0.5, 1.0;
    const double lmin = linalg::lambda_min_sym(s);
    const PeReport same = pe_check(s, s);
    EXPECT_TRUE(same.holds);
    EXPECT_NEAR(same.margin, 15.0 / 16.0 * lmin, 1e-14);
    EXPECT_NEAR(same.lambda_min_emp, lmin, 1e-14);
    const PeReport zero = pe_check(Matrix::Zero(2, 2), s);
    EXPECT_FALSE(zero.holds);
    EXPECT_NEAR(zero.margin, -linalg::spectral_norm(s) / 16.0, 1e-14);
    EXPECT_THROW(pe_check(Matrix::Zero(3, 3), s), ArgumentError);
}

TEST(PeCheck, S1AfterBurnInMostlyHolds) {
    const StateSpaceModel m = fixture_s1();
    const Index p = 2, f = 3;
    for (Index i : {Index{1}, f}) {
        const long long npe = burn_in_time(m, p, i, 0.05, 1.0);
        const Matrix theo = covariate_covariance(m, p, i, p + i);
        int holds = 0;
        for (int seed = 0; seed < 100; ++seed) {
            const HankelBundle h = build_hankels(simulate(m, p + f + npe - 1, 1000 + seed), p, f, npe);
            if (pe_check(empirical_covariance(build_regressor_bank(h), i), theo).holds) ++holds;
        }
        EXPECT_GE(holds, 95) << "i=" << i;
    }
}

TEST(ThetaBound, ZeroNoiseGivesZeroRadii) {
    StateSpaceModel m = fixture_s1();
    m.sigma_e = 0.0;
    const ThetaBound b = theta_error_bound(m, 2, 3, 2, 1000, 0.05, 1.0);
    EXPECT_EQ(b.stochastic2, 0.0);
    EXPECT_EQ(b.bias2, 0.0);
    EXPECT_EQ(b.theta2, 0.0);
    // At p = 1 the noiseless covariance stays nonsingular, so SNR grows like 1/sigma_e^2.
    m.sigma_e = 1e-6;
    EXPECT_LT(theta_error_bound(m, 1, 3, 2, 1000, 0.05, 1.0).theta2, 1e-9);
}

TEST(ThetaBound, MatchesIndependentFormula) {
    const StateSpaceModel m = fixture_s1();
    const ThetaBound b = theta_error_bound(m, 2, 3, 2, 1000, 0.05, 1.0);
    EXPECT_NEAR(b.theta2, theta2_oracle(m, 2, 2, 1000, 0.05, 1.0), 1e-9 * b.theta2);
    EXPECT_EQ(b.theta2, b.stochastic2);
    EXPECT_NEAR(b.bias2, 16.0 * 1.0 / (1e6 * b.snr) * std::log(20.0), 1e-15);

    std::mt19937_64 rng(5);
    for (int t = 0; t < 5; ++t) {
        const StateSpaceModel r = oracle::random_system(rng, 2, 1, 2);
        const ThetaBound rb = theta_error_bound(r, 3, 4, 3, 700, 0.1, 2.5);
        EXPECT_NEAR(rb.theta2, theta2_oracle(r, 3, 3, 700, 0.1, 2.5), 1e-8 * rb.theta2);
    }
}

TEST(ThetaBound, QuadruplingN) {
    const StateSpaceModel m = fixture_s1();
    const long long n = 2000;
    const double delta = 0.05;
    const ThetaBound a = theta_error_bound(m, 2, 3, 2, n, delta, 1.0);
    const ThetaBound b = theta_error_bound(m, 2, 3, 2, 4 * n, delta, 1.0);
    const double d = 5.0;
    const double base = d * std::log(d / delta);
    const double expect = std::sqrt((base + b.log_det) / (4.0 * (base + a.log_det)));
    EXPECT_NEAR(std::sqrt(b.theta2 / a.theta2), expect, 1e-12);
    EXPECT_NEAR(expect, 0.5, 0.01);
}

TEST(ThetaBound, MonotoneInNAndLinearInLogDelta) {
    std::mt19937_64 rng(6);
    const StateSpaceModel m = oracle::random_system(rng, 2, 1, 1);
    double prev = std::numeric_limits<double>::infinity();
    for (long long n : {250LL, 500LL, 1000LL, 2000LL, 4000LL, 8000LL}) {
        const ThetaBound b = theta_error_bound(m, 2, 3, 3, n, 0.05, 1.0);
        EXPECT_LE(b.theta2, prev);
        EXPECT_GE(b.theta2, 0.0);
        EXPECT_GE(b.bias2, 0.0);
        prev = b.theta2;
    }
    const double r1 = theta_error_bound(m, 2, 3, 3, 1000, 0.2, 1.0).theta2;
    const double r2 = theta_error_bound(m, 2, 3, 3, 1000, 0.02, 1.0).theta2;
    const double r3 = theta_error_bound(m, 2, 3, 3, 1000, 0.002, 1.0).theta2;
    EXPECT_LE(std::abs(r3 - 2.0 * r2 + r1), 1e-9 * r3);
    EXPECT_GT(r3, r2);
}

TEST(ThetaBound, BiasVanishesRelativeToStochastic) {
    const StateSpaceModel m = fixture_s1();
    double prev = std::numeric_limits<double>::infinity();
    for (long long n : {100LL, 1000LL, 10000LL, 100000LL}) {
        const ThetaBound b = theta_error_bound(m, 2, 3, 1, n, 0.05, 1.0);
        const double ratio = b.bias2 / b.stochastic2;
        EXPECT_LT(ratio, prev);
        prev = ratio;
    }
    EXPECT_LT(prev, 1e-4);
}

TEST(ThetaBound, RejectsBadArguments) {
    const StateSpaceModel m = fixture_s1();
    EXPECT_THROW(theta_error_bound(m, 2, 3, 2, 0, 0.05, 1.0), ArgumentError);
    EXPECT_THROW(theta_error_bound(m, 2, 3, 2, 10, 1.0, 1.0), ArgumentError);
    EXPECT_THROW(theta_error_bound(m, 2, 3, 4, 10, 0.05, 1.0), ArgumentError);
}

TEST(StackedBound, Examples) {
    const std::vector<double> one{0.7};
    const std::vector<double> four{1.0, 2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(stacked_bound(one), 0.7);
    EXPECT_DOUBLE_EQ(stacked_bound(four), 8.0);
    EXPECT_THROW(stacked_bound(std::span<const double>{}), ArgumentError);
}

TEST(StackedBound, UpperBoundsRandomStacks) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> pick(1, 6);
    for (int t = 0; t < 100; ++t) {
        const Index f = pick(rng), rows = pick(rng), cols = pick(rng);
        const Matrix mtx = Matrix::NullaryExpr(f * rows, cols, [&] { return g(rng); });
        std::vector<double> radii;
        for (Index i = 0; i < f; ++i) radii.push_back(linalg::spectral_norm(mtx.middleRows(i * rows, rows)));
        EXPECT_LE(linalg::spectral_norm(mtx), stacked_bound(radii) * (1.0 + 1e-12));
    }
}

TEST(BankReports, StackedUsesLargestRow) {
    const std::vector<BoundReport> reps = bank_bound_reports(fixture_s1(), 2, 3, 1000, 0.05, 1.0, 1.0, true);
    ASSERT_EQ(reps.size(), 3u);
    double worst = 0.0;
    for (const auto& r : reps) worst = std::max(worst, std::sqrt(r.theta2));
    for (const auto& r : reps) {
        EXPECT_NEAR(r.stacked, std::sqrt(3.0) * worst, 1e-15);
        EXPECT_GT(r.n_pe, 0);
        EXPECT_EQ(r.n_pe, burn_in_time(fixture_s1(), 2, r.i, 0.05 / 9.0, 1.0));
    }
    const Json j = to_json(reps[0]);
    EXPECT_EQ(j.at("i"), 1);
    EXPECT_TRUE(j.contains("theta_radius2"));
    EXPECT_EQ(j.at("constants_used").at("c"), 1.0);
}

TEST(RealizationBound, Examples) {
    Matrix truth(2, 2);
    truth << 0.5, 1.0, 0.25, 0.5;
    const RealizationRadii zero = realization_bound(0.0, truth, 1, 1.0, 1.25);
    EXPECT_EQ(zero.factor, 0.0);
    EXPECT_EQ(zero.a, 0.0);
    EXPECT_THROW(realization_bound(1.25 / 2.0, truth, 1, 1.0, 1.25), ConditionViolatedError);
    const RealizationRadii r = realization_bound(1.25 / 8.0, truth, 1, 1.0, 1.25);
    EXPECT_NEAR(r.factor, 2.0 * std::sqrt(10.0 / 1.25) * (1.25 / 8.0), 1e-14);
    EXPECT_EQ(r.cbk, r.factor);
    EXPECT_NEAR(r.a, (std::sqrt(1.25) + 1.0) * r.factor, 1e-14);
}

TEST(RealizationBound, RandomPerturbationsStayInsideRadii) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 30; ++t) {
        const scenario::RobustnessCase c = scenario::factor_robustness(rng);
        EXPECT_LE(c.factor_err, c.radii.factor);
        EXPECT_LE(c.cbk_err, c.radii.cbk);
        EXPECT_LE(c.a_err, c.radii.a);
    }
}
