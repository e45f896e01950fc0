#include <gtest/gtest.h>

#include "support.hpp"

using namespace ldl;

TEST(ExpansionConstants, PrototypeValues) {
    // kappa = 1, p = 1/2, H p = pi; values from the closed form evaluated at 20 digits
    ModelParams P = fixture::prototype();
    auto g = build_geometry(1, q1(P), 1, P, Kind::biperiodic);
    ExpansionReport e = expansion_constants(g, P, -1.0);
    EXPECT_NEAR(e.C0, -0.54955878443133519323, 1e-14);
    EXPECT_NEAR(e.C1, 0.0042680943786567478462, 1e-15);
    EXPECT_NEAR(e.C0 - e.C1, -0.55382687880999194108, 1e-14);
    EXPECT_NEAR(e.Omega1, 2.0 * P.p * g.q, 1e-15);
    EXPECT_NEAR(e.predicted_energy(1e-3), e.Omega1 * (1e-3 - 1e-6 * 0.55382687880999194108), 1e-16);
}

struct ConstCase {
    double kappa, p;
    int N;
    double C0, C1;
};

class QuadratureMatchesClosedForm : public ::testing::TestWithParam<ConstCase> {};

TEST_P(QuadratureMatchesClosedForm, TwoPointFit) {
    const auto& cs = GetParam();
    ModelParams P{cs.kappa, 2 * pi, cs.p, 0.0};
    auto g = build_geometry(cs.N, 0.3 * q1(P), 1, P, Kind::biperiodic);
    Grid G(g, P, Discretization{64, 2});
    Vec a(cs.N - 1, 0.0), b(cs.N - 1, 0.0);
    for (int i = 0; i < cs.N - 1; ++i) {
        a[i] = 0.4 * (i + 1);
        b[i] = 2.9 * (i + 1);
    }
    if (cs.N == 1) {
        // one free pair: vary s instead
        auto g2 = build_geometry(1, 0.8 * q1(P), 1, P, Kind::biperiodic);
        Grid G2(g2, P, Discretization{64, 2});
        double e1 = omega2_quadrature(phase_vector({}, g, P), G) / g.area(P);
        double e2 = omega2_quadrature(phase_vector({}, g2, P), G2) / g2.area(P);
        double F1 = reduced_objective(phase_vector({}, g, P), g.kind);
        double F2 = reduced_objective(phase_vector({}, g2, P), g2.kind);
        double C1 = (e1 - e2) / (F1 - F2);
        EXPECT_NEAR(C1, cs.C1, 1e-11);
        EXPECT_NEAR(e1 - C1 * F1, cs.C0, 1e-11);
        return;
    }
    ExpansionReport r = constants_by_quadrature(G, phase_vector(a, g, P), phase_vector(b, g, P));
    EXPECT_NEAR(r.C0, cs.C0, 1e-11);
    EXPECT_NEAR(r.C1, cs.C1, 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Params, QuadratureMatchesClosedForm,
                         ::testing::Values(ConstCase{1.0, 0.5, 1, -0.54955878443133519323, 0.0042680943786567478462},
                                           ConstCase{1.0, 0.5, 3, -0.54955878443133519323, 0.0042680943786567478462},
                                           ConstCase{2.0, 0.5, 2, -0.66994727944821802599, 0.045360235791749738329},
                                           ConstCase{1.0, 0.25, 2, -0.66044841848174885992, 0.045360235791749738329}));

TEST(FirstOrder, ClosedFormModulusAndField) {
    // u = -1/2 + c (cos th_n + cos th_{n+1}) for staggered N = 2, s = 0: the two cosines cancel
    ModelParams P = fixture::prototype();
    auto g = build_geometry(2, 0.0, 1, P, Kind::biperiodic);
    Grid G(g, P, Discretization{32, 2});
    FirstOrderCorrection w = first_order(staggered_phases(g, P), G);
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < G.Mx; ++i) EXPECT_NEAR(w.modulus[j][i], -0.5, 1e-13);
    // gap field: -(kappa^2/(2H)) cos(delta_n + Hpx)
    for (int n = 1; n <= 2; ++n)
        for (int i = 0; i < G.Mx; ++i)
            EXPECT_NEAR(w.field[n - 1][i], -std::cos((n - 1) * pi + pi * G.x[i]) / (2 * P.H), 1e-13);
    for (double c : w.velocity_offset) EXPECT_EQ(c, 0.0);
    for (double d : w.field_offset) EXPECT_EQ(d, 0.0);
}

TEST(FirstOrder, SingleGapModulus) {
    // N = 1, s = q1: both gaps of the plane have angle differing by pi, so u = -1/2 again;
    // at s = 0 the angles coincide and u = -1/2 + 2 c cos(Hpx), c = kappa^2/(2(H^2p^2 + 2 kappa^2))
    ModelParams P = fixture::prototype();
    auto g = build_geometry(1, 0.0, 1, P, Kind::biperiodic);
    Grid G(g, P, Discretization{32, 2});
    FirstOrderCorrection w = first_order(phase_vector({}, g, P), G);
    double c = 1.0 / (2.0 * (pi * pi + 2.0));
    for (int i = 0; i < G.Mx; ++i) EXPECT_NEAR(w.modulus[0][i], -0.5 + 2 * c * std::cos(pi * G.x[i]), 1e-13);
}

TEST(FirstOrder, FiniteLayerEdgesAndConstants) {
    // edge planes see one gap: u = -1/4 + c cos(th) with the single neighbouring angle
    ModelParams P = fixture::prototype();
    auto g = build_geometry(4, 0.0, 1, P, Kind::finite_layer);
    Grid G(g, P, Discretization{32, 2});
    PhaseVector dv = staggered_phases(g, P);
    FirstOrderCorrection w = first_order(dv, G);
    double c = 1.0 / (2.0 * (pi * pi + 2.0));
    for (int i = 0; i < G.Mx; ++i) {
        EXPECT_NEAR(w.modulus[0][i], -0.25 + c * std::cos(pi * G.x[i]), 1e-13);
        EXPECT_NEAR(w.modulus[4][i], -0.25 + c * std::cos(3 * pi + pi * G.x[i]), 1e-13);
        for (int j = 1; j < 4; ++j) EXPECT_NEAR(w.modulus[j][i], -0.5, 1e-13);
    }
    for (double v : w.velocity_offset) EXPECT_LE(std::abs(v), 1e-12);
    for (double v : w.field_offset) EXPECT_LE(std::abs(v), 1e-12);
}

TEST(GapConstants, SolverHandlesAllClosures) {
    // manufactured solutions for the cyclic and the Dirichlet difference operator
    for (int N : {1, 2, 3, 5}) {
        for (Kind kind : {Kind::biperiodic, Kind::finite_layer}) {
            Vec D(N), rhs(N);
            for (int n = 0; n < N; ++n) D[n] = std::sin(1.0 + n) + 0.1 * n;
            const double p = 0.5;
            for (int n = 0; n < N; ++n) {
                double up, lo;
                if (kind == Kind::biperiodic) {
                    up = D[(n + 1) % N];
                    lo = D[(n - 1 + N) % N];
                } else {
                    up = n + 1 < N ? D[n + 1] : 0.0;
                    lo = n > 0 ? D[n - 1] : 0.0;
                }
                rhs[n] = up - 2 * D[n] + lo - p * p * D[n];
            }
            Vec got = solve_gap_constants(p, rhs, kind);
            EXPECT_LT(fixture::max_diff(got, D), 1e-12) << N;
        }
    }
}

class FirstOrderConfig : public ::testing::TestWithParam<Kind> {};

TEST_P(FirstOrderConfig, EnergyErrorIsCubic) {
    ModelParams P = fixture::prototype();
    auto g = build_geometry(2, 0.5 * q1(P), 1, P, GetParam());
    PhaseVector dv = GetParam() == Kind::biperiodic ? minimize_F(2, g.s, P).delta : staggered_phases(g, P);
    Vec errs;
    for (double r : {1e-2, 2e-2}) {
        ModelParams Q = P;
        Q.r = r;
        Grid G(g, Q, Discretization{64, 4});
        Configuration c = first_order_configuration(dv, r, G);
        double pred = g.area(P) * r + r * r * omega2_quadrature(dv, G);
        errs.push_back(std::abs(energy(c, G).total - pred) / g.area(P));
        FieldSet F = observables(c, G), Pf = predicted_fields(dv, r, G);
        EXPECT_LT(fixture::max_diff(F.Phi, Pf.Phi), 1e-12);
        EXPECT_LT(fixture::max_diff(F.V, Pf.V), 1e-12);
        EXPECT_LT(fixture::max_diff(F.h, Pf.h), 1e-12);
    }
    double slope = std::log2(errs[1] / errs[0]);
    EXPECT_NEAR(slope, 3.0, 0.2);
}

TEST_P(FirstOrderConfig, ResidualsAreSecondOrder) {
    ModelParams P = fixture::prototype();
    auto g = build_geometry(3, q1(P), 1, P, GetParam());
    PhaseVector dv = staggered_phases(g, P);
    Vec res;
    for (double r : {1e-3, 2e-3}) {
        ModelParams Q = P;
        Q.r = r;
        Grid G(g, Q, Discretization{64, 4});
        Residuals R = el_residuals(first_order_configuration(dv, r, G), G);
        res.push_back(std::max({R.modulus, R.jump, R.field_slope, R.current, R.field_z}));
    }
    EXPECT_NEAR(std::log2(res[1] / res[0]), 2.0, 0.1);
}

INSTANTIATE_TEST_SUITE_P(Kinds, FirstOrderConfig, ::testing::Values(Kind::biperiodic, Kind::finite_layer));

TEST(Manifold, RequiresAdmissibleGeometry) {
    ModelParams P = fixture::prototype();
    auto g = custom_geometry(1, 0.0, 1.3 * q1(P), {0, 1}, Kind::biperiodic);
    Grid G(g, P, Discretization{16, 2});
    EXPECT_THROW(manifold_point(phase_vector({}, g, P), G), InadmissibleGeometry);
    EXPECT_THROW(expansion_constants(g, P, -1), InadmissibleGeometry);
}
