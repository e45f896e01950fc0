#include <gtest/gtest.h>

#include "support.hpp"

using namespace ldl;

namespace {

Rows random_rows(const Grid& G, std::mt19937_64& rng, bool zero_mean) {
    std::normal_distribution<double> nd;
    Rows r = zero_rows(G.NZ, G.Mx);
    for (auto& v : r)
        for (double& a : v) a = nd(rng);
    r = drop_nyquist(r, G);
    if (zero_mean) {
        double m = 0.0;
        for (auto& v : r) m += spectral::Periodic::mean(v);
        m /= G.NZ;
        for (auto& v : r)
            for (double& a : v) a -= m;
    }
    return r;
}

}  // namespace

class StreamKinds : public ::testing::TestWithParam<Kind> {};

TEST_P(StreamKinds, PoissonInvertsLaplacian) {
    ModelParams P = fixture::prototype();
    auto g = build_geometry(2, 0.37, 1, P, GetParam());
    Grid G(g, P, Discretization{16, 4});
    std::mt19937_64 rng(5);
    Rows rhs = random_rows(G, rng, GetParam() == Kind::biperiodic);
    auto sol = solve_periodic_poisson(rhs, G);
    EXPECT_FALSE(sol.nonzero_mean);
    EXPECT_LT(fixture::max_diff(laplacian(sol.xi, G), rhs), 1e-10);
}

TEST_P(StreamKinds, SpectralFunctionMatchesOperator) {
    ModelParams P = fixture::prototype();
    auto g = build_geometry(2, 0.37, 1, P, GetParam());
    Grid G(g, P, Discretization{16, 4});
    std::mt19937_64 rng(6);
    Rows xi = random_rows(G, rng, true);
    Rows a = apply_laplace_function(xi, G, [](double lam) { return lam; });
    EXPECT_LT(fixture::max_diff(a, laplacian(xi, G)), 1e-9);
}

TEST_P(StreamKinds, AdjointIsTranspose) {
    ModelParams P = fixture::prototype();
    auto g = build_geometry(3, 0.2, 1, P, GetParam());
    Grid G(g, P, Discretization{16, 3});
    std::mt19937_64 rng(7);
    Rows xi = random_rows(G, rng, false);
    StreamFields f = stream_forward(xi, G);
    for (auto& v : f.h)
        for (double& a : v) a -= G.B;
    Rows gh = random_rows(G, rng, false);
    Rows ga = zero_rows(g.planes(), G.Mx), gg = zero_rows(g.N, G.Mx);
    std::normal_distribution<double> nd;
    for (auto& v : ga)
        for (double& a : v) a = nd(rng);
    for (auto& v : gg)
        for (double& a : v) a = nd(rng);
    Rows back = stream_adjoint(gh, ga, gg, G);
    auto inner = [](const Rows& a, const Rows& b) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
            for (std::size_t i = 0; i < a[k].size(); ++i) s += a[k][i] * b[k][i];
        return s;
    };
    double lhs = inner(f.h, gh) + inner(f.axp, ga) + inner(f.gap, gg);
    double rhs = inner(xi, back);
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(lhs));
}

INSTANTIATE_TEST_SUITE_P(Kinds, StreamKinds, ::testing::Values(Kind::biperiodic, Kind::finite_layer));

TEST(Stream, TwistedWrapMatchesShiftedCopy) {
    // a pure x-mode with xi(x, z + Np) = xi(x - s, z) has the same h on the wrap as in the bulk
    ModelParams P = fixture::prototype();
    auto g = build_geometry(1, 0.4, 1, P, Kind::biperiodic);
    Grid G(g, P, Discretization{16, 8});
    Rows xi = zero_rows(G.NZ, G.Mx);
    const double k = pi / g.q, beta = k * g.s / G.NZ;
    for (int c = 0; c < G.NZ; ++c)
        for (int i = 0; i < G.Mx; ++i) xi[c][i] = std::cos(k * G.x[i] - beta * c);
    StreamFields f = stream_forward(xi, G);
    double lam = -k * k - 4.0 * std::pow(std::sin(0.5 * beta), 2) / (G.dz * G.dz);
    for (int c = 0; c < G.NZ; ++c)
        for (int i = 0; i < G.Mx; ++i) EXPECT_NEAR(f.h[c][i] - G.B, lam * xi[c][i], 1e-9);
}
