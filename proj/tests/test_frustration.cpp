#include <gtest/gtest.h>

#include "support.hpp"

using namespace ldl;

TEST(ReducedObjective, Examples) {
    ModelParams P = fixture::prototype();
    auto g1 = build_geometry(1, q1(P), 1, P, Kind::biperiodic);
    EXPECT_NEAR(evaluate_F(phase_vector({}, g1, P)), -1.0, 1e-15);
    auto g2 = build_geometry(2, 0.0, 1, P, Kind::biperiodic);
    EXPECT_NEAR(evaluate_F(phase_vector({pi}, g2, P)), -1.0, 1e-15);
    // F(t) = (cos t + cos(t + Hps))/2
    auto g3 = build_geometry(2, 0.3, 1, P, Kind::biperiodic);
    EXPECT_NEAR(evaluate_F(phase_vector({0.7}, g3, P)), 0.5 * (std::cos(0.7) + std::cos(0.7 + pi * 0.3)), 1e-15);
}

TEST(MinimizeF, TwoPlaneClosedForm) {
    ModelParams P = fixture::prototype();
    for (int i = 0; i < 24; ++i) {
        double s = 2.0 * q1(P) * i / 24;
        ReducedMinimum m = minimize_F(2, s, P);
        EXPECT_NEAR(m.F, -std::abs(std::cos(pi * s / 2)), 1e-9) << s;
    }
    // Hps = pi/2
    EXPECT_NEAR(minimize_F(2, 0.5 * q1(P), P).F, -std::sqrt(0.5), 1e-12);
    // Hps = pi: F vanishes identically in the free phase
    ReducedMinimum flat = minimize_F(2, q1(P), P);
    EXPECT_NEAR(flat.F, 0.0, 1e-12);
    EXPECT_TRUE(flat.multiple);
}

TEST(MinimizeF, CommensurateCasesReachMinusOne) {
    ModelParams P = fixture::prototype();
    for (int N = 1; N <= 6; ++N)
        for (int l = 0; l < 4; ++l) {
            double s = l * q1(P);
            Optimality o = classify_optimality(N, s, P);
            bool opt = (N % 2 == 0) == (l % 2 == 0);
            EXPECT_EQ(o != Optimality::frustrated, opt);
            if (opt) EXPECT_NEAR(minimize_F(N, s, P).F, -1.0, 1e-9);
            else EXPECT_GT(minimize_F(N, s, P).F, -1.0 + 1e-3);
        }
    ReducedMinimum m = minimize_F(3, q1(P), P);
    EXPECT_NEAR(std::cos(m.delta[2] - m.delta[1]), -1.0, 1e-9);
    EXPECT_NEAR(std::cos(m.delta[3] - m.delta[2]), -1.0, 1e-9);
    EXPECT_NEAR(std::cos(m.delta[4] - m.delta[3]), -1.0, 1e-9);
}

TEST(MinimizeF, AgreesWithBruteForce) {
    ModelParams P = fixture::prototype();
    for (int N = 1; N <= 4; ++N)
        for (int i = 0; i < 12; ++i) {
            double s = 2.0 * q1(P) * i / 12 + 0.01;
            int G = N <= 3 ? 1024 : 64;
            double bf = brute_force_F(N, s, P, G);
            double mf = minimize_F(N, s, P).F;
            EXPECT_LE(mf, bf + 1e-12);
            EXPECT_LE(bf - mf, brute_force_tolerance(N, G));
        }
    EXPECT_THROW(brute_force_F(5, 0.0, P, 8), DimensionTooLarge);
}

TEST(MinimizeF, DeterministicAndPeriodicInShift) {
    ModelParams P = fixture::prototype();
    ReducedMinimum a = minimize_F(4, 0.3, P), b = minimize_F(4, 0.3, P);
    EXPECT_EQ(a.delta.delta, b.delta.delta);
    EXPECT_NEAR(minimize_F(3, 0.3 + 2 * q1(P), P).F, minimize_F(3, 0.3, P).F, 1e-12);
}

TEST(MinimizeF, FiniteLayerAlwaysUnfrustrated) {
    ModelParams P = fixture::prototype();
    for (int N = 2; N <= 8; ++N) {
        ReducedMinimum m = minimize_F(N, 0.37, P, Kind::finite_layer);
        EXPECT_NEAR(m.F, -1.0, 1e-12);
        for (int n = 1; n < N; ++n) EXPECT_NEAR(std::cos(m.delta[n + 1] - m.delta[n]), -1.0, 1e-9);
    }
}

TEST(ReducedHessian, SignsAtStaggeredAndVortexPlanePoints) {
    ModelParams P = fixture::prototype();
    auto g = build_geometry(4, 0.0, 1, P, Kind::biperiodic);
    ReducedHessian st = reduced_hessian(staggered_phases(g, P));
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(st.matrix(i, i), 2.0, 1e-12);
        if (i + 1 < 3) EXPECT_NEAR(st.matrix(i, i + 1), -1.0, 1e-12);
    }
    // tridiag(-1, 2, -1) of size 3: 2 - 2 cos(k pi / 4)
    EXPECT_NEAR(st.min_eigenvalue, 2 - std::sqrt(2.0), 1e-12);
    ReducedHessian vp = reduced_hessian(phase_vector({0, 0, 0}, g, P));
    EXPECT_NEAR(vp.matrix(0, 0), -2.0, 1e-12);
    EXPECT_NEAR(vp.max_eigenvalue, -(2 - std::sqrt(2.0)), 1e-12);
}

TEST(ReducedHessian, SecondOrderConditionAtReportedMinimizers) {
    ModelParams P = fixture::prototype();
    for (int N = 2; N <= 6; ++N)
        for (int i = 0; i < 12; ++i) {
            ReducedMinimum m = minimize_F(N, 2.0 * q1(P) * i / 12, P);
            EXPECT_GE(reduced_hessian(m.delta).min_eigenvalue, -1e-9);
        }
}

TEST(PhaseScan, CsvLayout) {
    ModelParams P = fixture::prototype();
    auto rows = phase_scan({1, 2}, {0.0, 1.0}, P);
    std::string text = phase_scan_csv(rows).str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "N,s,F,class,min_eigenvalue");
    EXPECT_NE(text.find("2,0,-1,optimal_even,"), std::string::npos);
    EXPECT_NE(text.find("1,1,-1,optimal_odd,nan"), std::string::npos);
}
