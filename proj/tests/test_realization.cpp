#include "oracles.hpp"

#include "parsim/data_assembly.hpp"
#include "parsim/estimators.hpp"
#include "parsim/linalg.hpp"
#include "parsim/realization.hpp"

#include <gtest/gtest.h>

using namespace parsim;

namespace {

Matrix s1_gamma_lp() {
    Matrix g(2, 2);
    g << 0.5, 1.0, 0.25, 0.5;
    return g;
}

Matrix random_matrix(std::mt19937_64& rng, Index r, Index c) {
    std::normal_distribution<double> g(0.0, 1.0);
    return Matrix::NullaryExpr(r, c, [&] { return g(rng); });
}

}  // namespace

TEST(SvdRealize, HandWorkedRankOne) {
    const RealizationResult r = svd_realize(s1_gamma_lp(), 1);
    EXPECT_NEAR(r.singular_values(0), 1.25, 1e-14);
    EXPECT_NEAR(r.singular_values(1), 0.0, 1e-14);
    EXPECT_NEAR(r.gamma(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(r.gamma(1, 0), 0.5, 1e-14);
    EXPECT_NEAR(r.lp(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(r.lp(0, 1), 1.0, 1e-14);
    EXPECT_NEAR(r.sigma_gap, 1.25, 1e-14);
}

TEST(SvdRealize, ZeroMatrixIsRankDeficient) {
    EXPECT_THROW(svd_realize(Matrix::Zero(3, 4), 1), RankDeficiencyError);
    EXPECT_THROW(svd_realize(Matrix::Ones(3, 4), 2), RankDeficiencyError);
    EXPECT_THROW(svd_realize(Matrix::Ones(3, 4), 4), ArgumentError);
}

TEST(SvdRealize, ReproducesRankNxInput) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        const Index nx = 1 + t % 3;
        const Matrix g = random_matrix(rng, 6, nx) * random_matrix(rng, nx, 5);
        const RealizationResult r = svd_realize(g, nx);
        EXPECT_LE((r.gamma * r.lp - g).norm(), 1e-10 * g.norm());
    }
}

TEST(SvdRealize, EckartYoungAndBalance) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const Index nx = 1 + t % 3;
        const Matrix g = random_matrix(rng, 6, 4);
        const RealizationResult r = svd_realize(g, nx);
        ASSERT_EQ(r.singular_values.size(), 4);
        for (Index k = 1; k < 4; ++k) EXPECT_GE(r.singular_values(k - 1), r.singular_values(k));
        EXPECT_GE(r.singular_values(3), 0.0);
        EXPECT_NEAR(linalg::spectral_norm(g - r.gamma * r.lp), r.singular_values(nx), 1e-12 * r.singular_values(0));
        const Matrix s = r.singular_values.head(nx).asDiagonal();
        EXPECT_LE((r.gamma.transpose() * r.gamma - s).norm(), 1e-12 * s.norm());
        EXPECT_LE((r.lp * r.lp.transpose() - s).norm(), 1e-12 * s.norm());
        EXPECT_NEAR(r.sigma_gap, r.singular_values(nx - 1) - r.singular_values(nx), 1e-15);
    }
}

TEST(SvdRealize, SignConvention) {
    std::mt19937_64 rng(3);
    const Matrix g = random_matrix(rng, 5, 5);
    const RealizationResult a = svd_realize(g, 3);
    const RealizationResult b = svd_realize(-g, 3);
    for (Index c = 0; c < 3; ++c) {
        Index at = 0;
        a.gamma.col(c).cwiseAbs().maxCoeff(&at);
        EXPECT_GT(a.gamma(at, c), 0.0);
    }
    EXPECT_TRUE(a.gamma.isApprox(b.gamma, 1e-12));
    EXPECT_TRUE(a.lp.isApprox(-b.lp, 1e-12));
}

TEST(ExtractSystem, HandWorkedScalar) {
    const RealizationResult r = realize(s1_gamma_lp(), 1, 2, 1, 1, 1);
    ASSERT_TRUE(r.has_system);
    EXPECT_NEAR(r.C(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(r.A(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(r.K(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(r.B(0, 0), 1.0, 1e-14);
}

TEST(ExtractSystem, TrueFactorsRoundTrip) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 10; ++t) {
        const StateSpaceModel m = oracle::random_system(rng, 3, 2, 2);
        const Index p = 3, f = 4;
        RealizationResult r;
        r.gamma = extended_observability(m, f);
        r.lp = extended_controllability(m, p);
        extract_system(r, p, f, 3, 2, 2);
        EXPECT_LE((r.A - m.A).norm(), 1e-10);
        EXPECT_LE((r.C - m.C).norm(), 1e-14);
        EXPECT_LE((r.B - m.B).norm(), 1e-14);
        EXPECT_LE((r.K - m.K).norm(), 1e-14);
    }
}

TEST(ExtractSystem, UnequalInputOutputWidths) {
    std::mt19937_64 rng(5);
    const StateSpaceModel m = oracle::random_system(rng, 2, 3, 1);
    RealizationResult r;
    r.gamma = extended_observability(m, 4);
    r.lp = extended_controllability(m, 2);
    extract_system(r, 2, 4, 2, 3, 1);
    EXPECT_TRUE(r.B.isApprox(m.B, 1e-13));
    EXPECT_TRUE(r.K.isApprox(m.K, 1e-13));
}

TEST(ExtractSystem, FutureHorizonTooShort) {
    std::mt19937_64 rng(6);
    const StateSpaceModel m = oracle::random_system(rng, 2, 1, 1);
    RealizationResult r;
    r.gamma = extended_observability(m, 2);  // f ny = nx
    r.lp = extended_controllability(m, 2);
    EXPECT_THROW(extract_system(r, 2, 2, 2, 1, 1), ExtractionError);
}

TEST(AlignSimilarity, TruthGivesIdentity) {
    std::mt19937_64 rng(7);
    const StateSpaceModel m = oracle::random_system(rng, 2, 1, 2);
    RealizationResult r;
    r.gamma = extended_observability(m, 3);
    r.lp = extended_controllability(m, 2);
    extract_system(r, 2, 3, 2, 1, 2);
    const AlignmentResult a = align_similarity(m, 3, r);
    EXPECT_LE((a.T - Matrix::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LE(std::max({a.err_A, a.err_B, a.err_C, a.err_K, a.err_gamma, a.err_lp}), 1e-10);
}

TEST(AlignSimilarity, RecoversKnownTransform) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 10; ++t) {
        const StateSpaceModel m = oracle::random_system(rng, 3, 2, 1);
        Matrix t0 = random_matrix(rng, 3, 3);
        while (linalg::singular_values(t0).minCoeff() < 0.2) t0 = random_matrix(rng, 3, 3);
        const Index p = 3, f = 5;
        RealizationResult r;
        r.gamma = extended_observability(m, f) * t0;
        r.lp = t0.inverse() * extended_controllability(m, p);
        extract_system(r, p, f, 3, 2, 1);
        const AlignmentResult a = align_similarity(m, f, r);
        EXPECT_LE((a.T - t0).norm(), 1e-10 * t0.norm());
        EXPECT_LE(std::max({a.err_A, a.err_B, a.err_C, a.err_K, a.err_gamma, a.err_lp}), 1e-10);
        Eigen::EigenSolver<Matrix> e1(m.A, false), e2(r.A, false);
        Vector l1 = e1.eigenvalues().cwiseAbs(), l2 = e2.eigenvalues().cwiseAbs();
        std::sort(l1.begin(), l1.end());
        std::sort(l2.begin(), l2.end());
        EXPECT_LE((l1 - l2).norm(), 1e-8);
    }
}

TEST(AlignSimilarity, NoisyS1MostlyWithinTenth) {
    const StateSpaceModel m = fixture_s1();
    const Index p = 2, f = 3, n = 10000;
    int good = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const RegressorBank bank = build_regressor_bank(build_hankels(simulate(m, p + f + n - 1, 500 + seed), p, f, n));
        const ArxBankEstimate est = estimate_parsim_bank(bank);
        const RealizationResult r = realize(est.gamma_lp, p, f, 1, 1, 1);
        const AlignmentResult a = align_similarity(m, f, r);
        if (std::max({a.err_A, a.err_B, a.err_C, a.err_K}) <= 0.1) ++good;
    }
    EXPECT_GE(good, 90);
}

TEST(SvdCondition, Cases) {
    std::mt19937_64 rng(9);
    const Matrix g = random_matrix(rng, 4, 2) * random_matrix(rng, 2, 6);
    const double s2 = linalg::singular_values(g)(1);
    const SvdConditionReport same = check_svd_condition(g, g, 2);
    EXPECT_EQ(same.delta, 0.0);
    EXPECT_TRUE(same.holds);
    EXPECT_NEAR(same.sigma_nx, s2, 1e-12);
    Matrix dir = random_matrix(rng, 4, 6);
    dir /= linalg::spectral_norm(dir);
    EXPECT_FALSE(check_svd_condition(g, g + 0.5 * s2 * dir, 2).holds);
    const SvdConditionReport small = check_svd_condition(g, g + s2 / 8.0 * dir, 2);
    EXPECT_TRUE(small.holds);
    EXPECT_NEAR(small.delta, s2 / 8.0, 1e-12);
}

TEST(Procrustes, RecoversOrthogonalRotation) {
    std::mt19937_64 rng(10);
    const Matrix gamma = random_matrix(rng, 6, 3);
    const Matrix lp = random_matrix(rng, 3, 4);
    const Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, 3, 3));
    const Matrix q = qr.householderQ();
    const ProcrustesResult pr = procrustes_align(gamma, lp, gamma * q, q.transpose() * lp);
    EXPECT_LE((pr.T - q).norm(), 1e-10);
    EXPECT_LE(std::max(pr.err_gamma, pr.err_lp), 1e-10);
    EXPECT_LE((pr.T.transpose() * pr.T - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(RealizedModel, CopiesScales) {
    const RealizationResult r = realize(s1_gamma_lp(), 1, 2, 1, 1, 1);
    const StateSpaceModel m = realized_model(r, fixture_s1());
    EXPECT_EQ(m.sigma_e, 0.1);
    EXPECT_EQ(m.A, r.A);
}
