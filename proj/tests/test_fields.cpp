#include <gtest/gtest.h>

#include "support.hpp"

using namespace ldl;

namespace {

double flux(const FieldSet& F, const Grid& G) {
    double s = 0.0;
    for (auto& row : F.h)
        for (double v : row) s += v * G.w * G.dz;
    return s;
}

Rows random_gauge(const RawConfiguration& R, const Grid& G, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Rows lam(R.ax.size(), Vec(G.Mx));
    for (auto& a : lam)
        for (double& v : a) v = 0.3 * nd(rng);
    return drop_nyquist(lam, G);
}

struct Case {
    Kind kind;
    int N;
    double s;
    int m;
};

}  // namespace

class FieldCases : public ::testing::TestWithParam<Case> {
protected:
    ModelParams P = fixture::prototype(0.3);
    LatticeGeometry g() const { return build_geometry(GetParam().N, GetParam().s, GetParam().m, P, GetParam().kind); }
};

TEST_P(FieldCases, FluxIsQuantizedOnBiperiodicCells) {
    if (GetParam().kind != Kind::biperiodic) GTEST_SKIP() << "open stacks carry no flux constraint";
    auto geo = g();
    Grid G(geo, P, Discretization{32, 4});
    std::mt19937_64 rng(11);
    for (int t = 0; t < 5; ++t) {
        FieldSet F = observables(fixture::random_configuration(G, rng), G);
        double want = 2.0 * pi * geo.K;
        EXPECT_LE(std::abs(flux(F, G) - want), 1e-10 * want);
    }
}

TEST_P(FieldCases, ObservablesAreGaugeInvariant) {
    Grid G(g(), P, Discretization{16, 4});
    std::mt19937_64 rng(12);
    Configuration c = fixture::random_configuration(G, rng);
    RawConfiguration R = to_raw(c, G);
    FieldSet A = observables(R, G);
    FieldSet B = observables(apply_gauge(R, random_gauge(R, G, rng), G), G);
    EXPECT_LT(fixture::max_diff(A.h, B.h), 1e-11);
    EXPECT_LT(fixture::max_diff(A.V, B.V), 1e-11);
    EXPECT_LT(fixture::max_diff(A.Phi, B.Phi), 1e-11);
    EXPECT_LT(fixture::max_diff(A.jz, B.jz), 1e-11);
}

TEST_P(FieldCases, GaugeFixRecoversObservablesAndEnergy) {
    Grid G(g(), P, Discretization{16, 4});
    std::mt19937_64 rng(13);
    Configuration c = fixture::random_configuration(G, rng);
    RawConfiguration R = to_raw(c, G);
    RawConfiguration moved = apply_gauge(R, random_gauge(R, G, rng), G);
    Configuration back = gauge_fix(moved, G);
    FieldSet A = observables(c, G), B = observables(back, G);
    EXPECT_LT(fixture::max_diff(A.h, B.h), 1e-10);
    EXPECT_LT(fixture::max_diff(A.V, B.V), 1e-10);
    for (std::size_t n = 0; n < A.Phi.size(); ++n)
        for (int i = 0; i < G.Mx; ++i) EXPECT_NEAR(std::remainder(A.Phi[n][i] - B.Phi[n][i], 2 * pi), 0.0, 1e-10);
    EXPECT_NEAR(energy(c, G).total, energy(back, G).total, 1e-10);
}

TEST_P(FieldCases, StokesFormulaReproducesPhaseDifference) {
    Grid G(g(), P, Discretization{32, 4});
    std::mt19937_64 rng(14);
    FieldSet F = observables(fixture::random_configuration(G, rng), G);
    for (int n = 1; n <= G.geom.N; ++n) EXPECT_LT(fixture::max_diff(stokes_phase(F, n, G), F.Phi[n - 1]), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Geometries, FieldCases,
                         ::testing::Values(Case{Kind::biperiodic, 1, 1.0, 1}, Case{Kind::biperiodic, 2, 0.37, 1},
                                           Case{Kind::biperiodic, 3, 0.8, 2}, Case{Kind::finite_layer, 2, 0.0, 1},
                                           Case{Kind::finite_layer, 4, 0.0, 1}));

TEST(GaugeFix, RejectsWrongFlux) {
    ModelParams P = fixture::prototype(0.1);
    auto geo = build_geometry(1, 0.5, 1, P, Kind::biperiodic);
    Grid G(geo, P, Discretization{16, 4});
    std::mt19937_64 rng(15);
    RawConfiguration R = to_raw(fixture::random_configuration(G, rng), G);
    R.B += 0.5;
    EXPECT_THROW(gauge_fix(R, G), FluxMismatch);
}

TEST(Export, WritesAllTablesWithHeaders) {
    ModelParams P = fixture::prototype(0.1);
    auto geo = build_geometry(2, 0.0, 1, P, Kind::biperiodic);
    Grid G(geo, P, Discretization{8, 2});
    auto dir = std::filesystem::temp_directory_path() / "ldl_export_test";
    std::filesystem::remove_all(dir);
    export_fields(observables(Configuration::zeros(geo, Discretization{8, 2}), G), G, dir, json{{"N", 2}});
    for (const char* name : {"f.csv", "V.csv", "jx.csv", "Phi.csv", "jz.csv", "h.csv"}) {
        std::ifstream in(dir / name);
        ASSERT_TRUE(in.good()) << name;
        std::string first;
        std::getline(in, first);
        EXPECT_EQ(first, "# N=2");
    }
    std::ifstream in(dir / "h.csv");
    int lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 1 + 1 + 8 * 4);
    std::filesystem::remove_all(dir);
}
