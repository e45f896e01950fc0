#include <gtest/gtest.h>

#include "support.hpp"

using namespace ldl;

namespace {

// Relative error between analytic gradient and central differences over one group of
// flat coordinates [lo, hi), sampling at most `samples` of them.
double group_error(const Configuration& c, const Grid& G, const Vec& grad, std::size_t lo, std::size_t hi,
                   int samples) {
    Vec v = c.pack();
    Configuration w = c;
    double num = 0.0, den = 0.0;
    std::size_t stride = std::max<std::size_t>(1, (hi - lo) / samples);
    for (std::size_t i = lo; i < hi; i += stride) {
        const double h = 1e-5;
        Vec t = v;
        t[i] += h;
        w.unpack(t);
        double ep = energy(w, G).total;
        t[i] -= 2 * h;
        w.unpack(t);
        double em = energy(w, G).total;
        double fd = (ep - em) / (2 * h);
        num = std::max(num, std::abs(fd - grad[i]));
        den = std::max(den, std::abs(grad[i]));
    }
    return num / std::max(den, 1e-300);
}

}  // namespace

class GradientKinds : public ::testing::TestWithParam<Kind> {};

TEST_P(GradientKinds, MatchesCentralDifferences) {
    ModelParams P = fixture::prototype(0.4);
    auto g = build_geometry(2, 0.37, 1, P, GetParam());
    Grid G(g, P, Discretization{16, 4});
    std::mt19937_64 rng(21);
    Configuration c = fixture::random_configuration(G, rng);
    Configuration gc;
    energy_and_gradient(c, G, &gc);
    Vec grad = gc.pack();
    std::size_t nf = c.f.size() * c.Mx, na = c.alpha.size();
    std::size_t o = 0;
    EXPECT_LT(group_error(c, G, grad, o, o + nf, 1000), 1e-6) << "f";
    o += nf;
    EXPECT_LT(group_error(c, G, grad, o, o + nf, 1000), 1e-6) << "chi";
    o += nf;
    EXPECT_LT(group_error(c, G, grad, o, o + na, 1000), 1e-6) << "alpha";
    o += na;
    EXPECT_LT(group_error(c, G, grad, o, o + 2, 2), 1e-6) << "omega, d";
    o += 2;
    EXPECT_LT(group_error(c, G, grad, o, grad.size(), 1000), 1e-6) << "xi";
}

INSTANTIATE_TEST_SUITE_P(Kinds, GradientKinds, ::testing::Values(Kind::biperiodic, Kind::finite_layer));

TEST(Energy, ConfigurationAndFieldEvaluationsAgree) {
    for (Kind kind : {Kind::biperiodic, Kind::finite_layer}) {
        ModelParams P = fixture::prototype(0.2);
        auto g = build_geometry(3, 0.5, 1, P, kind);
        Grid G(g, P, Discretization{16, 4});
        std::mt19937_64 rng(22);
        Configuration c = fixture::random_configuration(G, rng);
        EnergyBreakdown a = energy(c, G), b = energy_of_fields(observables(c, G), G);
        EXPECT_NEAR(a.total, b.total, 1e-11 * std::abs(a.total));
        EXPECT_NEAR(a.josephson, b.josephson, 1e-11 * std::abs(a.total));
        EXPECT_NEAR(a.total, a.condensation + a.josephson + a.magnetic, 1e-13 * std::abs(a.total));
    }
}

TEST(Energy, ManifoldPointsCostNothingWithoutCoupling) {
    for (Kind kind : {Kind::biperiodic, Kind::finite_layer}) {
        ModelParams P = fixture::prototype(0.0);
        auto g = build_geometry(3, 0.3, 2, P, kind);
        Grid G(g, P, Discretization{32, 4});
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> U(0, 2 * pi);
        Configuration c = manifold_point(phase_vector({U(rng), U(rng)}, g, P), G);
        EXPECT_LE(energy(c, G).total, 1e-12);
        Residuals r = el_residuals(c, G);
        EXPECT_LT(r.modulus + r.jump + r.field_slope + r.current + r.field_z, 1e-10);
    }
}

TEST(Energy, ManifoldPointsPayOneCouplingUnitPerArea) {
    // on the manifold every gap has |psi| = 1 and Phi = delta + Hpx, so the coupling term
    // averages to r per unit area
    ModelParams P = fixture::prototype(0.01);
    auto g = build_geometry(2, 0.5, 1, P, Kind::biperiodic);
    Grid G(g, P, Discretization{32, 4});
    Configuration c = manifold_point(phase_vector({1.0}, g, P), G);
    EXPECT_NEAR(energy(c, G).total / g.area(P), P.r, 1e-14);
}
