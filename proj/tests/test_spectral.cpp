#include <gtest/gtest.h>

#include "support.hpp"

using namespace ldl;
using spectral::Periodic;

TEST(Periodic, DerivativeOfResolvedModeIsExact) {
    Periodic X(32, 3.0);
    Vec x = X.grid(), v(32), dv(32);
    double k = 2.0 * pi * 3 / 3.0;
    for (int i = 0; i < 32; ++i) {
        v[i] = std::sin(k * x[i]) + 0.5 * std::cos(2 * k * x[i]);
        dv[i] = k * std::cos(k * x[i]) - k * std::sin(2 * k * x[i]);
    }
    EXPECT_LT(fixture::max_diff(X.deriv(v), dv), 1e-12);
}

TEST(Periodic, ShiftMatchesEvaluation) {
    Periodic X(16, 2.0);
    Vec x = X.grid(), v(16);
    for (int i = 0; i < 16; ++i) v[i] = std::cos(pi * x[i]) + 0.2 * std::sin(3 * pi * x[i]);
    Vec s = X.shift(v, 0.37);
    for (int i = 0; i < 16; ++i) {
        double y = x[i] + 0.37;
        EXPECT_NEAR(s[i], std::cos(pi * y) + 0.2 * std::sin(3 * pi * y), 1e-13);
        EXPECT_NEAR(X.eval(v, y), s[i], 1e-13);
    }
}

TEST(Periodic, ShiftByMinusIsInverse) {
    Periodic X(16, 2.0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Vec v(16);
    for (double& a : v) a = nd(rng);
    v = X.drop_nyquist(v);
    EXPECT_LT(fixture::max_diff(X.shift(X.shift(v, 0.3), -0.3), v), 1e-13);
}

TEST(Periodic, AntiderivativeIsMeanFreeInverse) {
    Periodic X(32, 1.0);
    Vec x = X.grid(), v(32);
    for (int i = 0; i < 32; ++i) v[i] = std::cos(2 * pi * x[i]) + 0.3;
    Vec a = X.antideriv(v);
    EXPECT_NEAR(Periodic::mean(a), 0.0, 1e-14);
    Vec d = X.deriv(a);
    for (int i = 0; i < 32; ++i) EXPECT_NEAR(d[i], std::cos(2 * pi * x[i]), 1e-12);
}
