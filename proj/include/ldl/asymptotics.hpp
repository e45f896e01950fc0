#pragma once
// Small-coupling expansion: zero-energy manifold, order-r corrections, predicted fields
// and the order-r^2 energy constants.

#include <cmath>
#include <string>
#include <vector>

#include "energy.hpp"

namespace ldl {

/// Reduced coordinates: phase offsets of the gaps, delta[n-1] for gap n.
/// Biperiodic holds N+1 entries (delta_1 = 0, delta_{N+1} = -Hps); finite holds N.
struct PhaseVector {
    Vec delta;
    double operator[](int n) const { return delta[n - 1]; }
};

inline PhaseVector phase_vector(const Vec& interior, const LatticeGeometry& g, const ModelParams& P) {
    if (static_cast<int>(interior.size()) != g.N - 1) throw ConfigError("phase vector needs N-1 interior entries");
    PhaseVector v;
    v.delta.push_back(0.0);
    v.delta.insert(v.delta.end(), interior.begin(), interior.end());
    if (g.kind == Kind::biperiodic) v.delta.push_back(-P.H * P.p * g.s);
    return v;
}

/// delta_n = (n-1) pi, the staggered choice.
inline PhaseVector staggered_phases(const LatticeGeometry& g, const ModelParams& P) {
    Vec in;
    for (int n = 2; n <= g.N; ++n) in.push_back((n - 1) * pi);
    return phase_vector(in, g, P);
}

inline Configuration manifold_point(const PhaseVector& dv, const Grid& G) {
    const auto& g = G.geom;
    require_admissible(g, G.par);
    Configuration c = Configuration::zeros(g, Discretization{G.Mx, G.Mz});
    if (G.biperiodic()) {
        // slot j holds plane j+1; alpha_1 = 0, alpha_n = sum_{2..n} delta
        for (int n = 2; n <= g.N; ++n) c.alpha[n - 1] = c.alpha[n - 2] + dv[n];
        c.d = c.alpha[g.N - 1] + g.N * G.par.H * G.par.p * g.s;
    } else {
        for (int n = 2; n <= g.N; ++n) c.alpha[n] = c.alpha[n - 1] + dv[n];
    }
    return c;
}

struct FirstOrderCorrection {
    Rows modulus;        // per stored plane slot
    Rows velocity;       // per stored plane slot
    Rows field;          // per gap
    Rows phase;          // per gap
    Vec velocity_offset;  // per stored plane slot
    Vec field_offset;     // per gap
};

namespace detail {

inline Vec dense_solve(std::vector<Vec> A, Vec b) {
    int n = static_cast<int>(b.size());
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(A[i][k]) > std::abs(A[piv][k])) piv = i;
        std::swap(A[k], A[piv]);
        std::swap(b[k], b[piv]);
        for (int i = k + 1; i < n; ++i) {
            double m = A[i][k] / A[k][k];
            for (int j = k; j < n; ++j) A[i][j] -= m * A[k][j];
            b[i] -= m * b[k];
        }
    }
    Vec x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= A[i][j] * x[j];
        x[i] = s / A[i][i];
    }
    return x;
}

}  // namespace detail

/// Solves D_{n+1} - 2 D_n + D_{n-1} - p^2 D_n = forcing_n for the gap constants.
/// Biperiodic closes cyclically (D_{n+N} = D_n), finite layers with D_0 = D_{N+1} = 0.
inline Vec solve_gap_constants(double p, const Vec& forcing, Kind kind) {
    const int N = static_cast<int>(forcing.size());
    const double diag = -(2.0 + p * p);
    if (kind == Kind::finite_layer || N == 1) {
        if (N == 1) {
            double dd = kind == Kind::finite_layer ? diag : -p * p;
            return {forcing[0] / dd};
        }
        CVec rhs(forcing.begin(), forcing.end());
        CVec x = ldl::detail::thomas(1.0, Vec(N, diag), rhs);
        Vec out(N);
        for (int i = 0; i < N; ++i) out[i] = x[i].real();
        return out;
    }
    if (N == 2) {
        // both neighbours coincide
        std::vector<Vec> A{{diag, 2.0}, {2.0, diag}};
        return detail::dense_solve(A, forcing);
    }
    // cyclic tridiagonal by Sherman-Morrison on the corner entries
    const double gamma = -diag;
    Vec dmod(N, diag);
    dmod[0] -= gamma;
    dmod[N - 1] -= 1.0 / gamma;
    CVec r1(forcing.begin(), forcing.end());
    CVec u(N, cplx(0.0));
    u[0] = gamma;
    u[N - 1] = 1.0;
    CVec y = ldl::detail::thomas(1.0, dmod, r1);
    CVec zz = ldl::detail::thomas(1.0, dmod, u);
    double vy = y[0].real() + y[N - 1].real() / gamma;
    double vz = zz[0].real() + zz[N - 1].real() / gamma;
    Vec out(N);
    for (int i = 0; i < N; ++i) out[i] = y[i].real() - vy / (1.0 + vz) * zz[i].real();
    return out;
}

/// Angle of gap n, delta_n + Hpx, extended to n = 0 and n = N+1 for biperiodic stacks.
inline Vec gap_angle(const PhaseVector& dv, int n, const Grid& G) {
    const auto& g = G.geom;
    const double Hp = G.par.H * G.par.p;
    double delta;
    if (n == 0)
        delta = dv[g.N] + Hp * g.s;
    else
        delta = dv[n];
    Vec t(G.Mx);
    for (int i = 0; i < G.Mx; ++i) t[i] = delta + Hp * G.x[i];
    return t;
}

inline FirstOrderCorrection first_order(const PhaseVector& dv, const Grid& G) {
    const auto& g = G.geom;
    const auto& P = G.par;
    require_admissible(g, P);
    const double k2 = P.kappa * P.kappa;
    const int M = G.Mx, N = g.N;
    const bool bi = G.biperiodic();
    FirstOrderCorrection w;

    // gaps touching each plane: lower gap n, upper gap n+1
    auto gaps_of = [&](int n) {
        std::vector<int> out;
        if (bi || n >= 1) out.push_back(n);
        if (bi || n + 1 <= N) out.push_back(n + 1);
        return out;
    };
    auto angle = [&](int n) { return gap_angle(dv, n, G); };

    Vec forcing(N, 0.0);
    w.field_offset = solve_gap_constants(P.p, forcing, g.kind);
    int np = g.planes();
    w.velocity_offset.assign(np, 0.0);
    for (int j = 0; j < np; ++j) {
        // -p C_n = D_{n+1} - D_n; finite stacks have no gap below plane 0 or above plane N
        int n = g.plane(j);
        double up = bi ? w.field_offset[n % N] : (n < N ? w.field_offset[n] : 0.0);
        double lo = bi ? w.field_offset[n - 1] : (n > 0 ? w.field_offset[n - 1] : 0.0);
        w.velocity_offset[j] = -(up - lo) / P.p;
    }

    for (int j = 0; j < np; ++j) {
        int n = g.plane(j);
        auto gs = gaps_of(n);
        Vec rhs(M, 0.0), cur(M, 0.0);
        for (int gap : gs) {
            Vec t = angle(gap);
            for (int i = 0; i < M; ++i) {
                rhs[i] += 0.5 * (std::cos(t[i]) - 1.0);
                // lower gap enters with +sin, upper with -sin
                cur[i] += (gap == n ? 1.0 : -1.0) * 0.5 * k2 * std::sin(t[i]);
            }
        }
        w.modulus.push_back(G.X.apply(rhs, [&](int i) { return cplx(1.0 / (G.X.k(i) * G.X.k(i) / k2 + 2.0)); }));
        Vec v = G.X.antideriv(cur);
        for (double& a : v) a += w.velocity_offset[j];
        w.velocity.push_back(std::move(v));
    }
    for (int n = 1; n <= N; ++n) {
        Vec t = angle(n);
        Vec src(M);
        for (int i = 0; i < M; ++i) src[i] = 0.5 * k2 * P.p * std::sin(t[i]);
        Vec b = G.X.antideriv(src);
        for (double& a : b) a += w.field_offset[n - 1];
        w.field.push_back(std::move(b));
    }
    for (int n = 1; n <= N; ++n) {
        int ju = bi ? n - 1 : n;
        Vec Vl;
        if (bi)
            Vl = n == 1 ? G.X.shift(w.velocity[N - 1], g.s) : w.velocity[n - 2];
        else
            Vl = w.velocity[n - 1];
        Vec rhs(M);
        for (int i = 0; i < M; ++i) rhs[i] = w.velocity[ju][i] - Vl[i] + P.p * w.field[n - 1][i];
        w.phase.push_back(G.X.antideriv(rhs));
    }
    return w;
}

/// sigma + r w_1 as a gauge-fixed configuration: moduli, velocities, gap fields and
/// phase differences agree with the order-r corrections.
inline Configuration first_order_configuration(const PhaseVector& dv, double r, const Grid& G) {
    const auto& g = G.geom;
    FirstOrderCorrection w = first_order(dv, G);
    Configuration c = manifold_point(dv, G);
    for (int j = 0; j < g.planes(); ++j)
        for (int i = 0; i < G.Mx; ++i) c.f[j][i] = 1.0 + r * w.modulus[j][i];
    Rows rhs(G.NZ);
    for (int k = 0; k < G.NZ; ++k) {
        rhs[k] = w.field[k / G.Mz];
        for (double& v : rhs[k]) v *= r;
    }
    c.xi = solve_periodic_poisson(rhs, G).xi;
    StreamFields sf = stream_forward(c.xi, G);
    for (int j = 0; j < g.planes(); ++j) {
        Vec src(G.Mx);
        for (int i = 0; i < G.Mx; ++i) src[i] = r * w.velocity[j][i] + sf.axp[j][i];
        c.chi[j] = G.X.antideriv(src);
        c.alpha[j] = 0.0;
    }
    c.d = 0.0;
    FieldSet F = observables(c, G);
    Vec shift(g.N);
    for (int n = 1; n <= g.N; ++n) {
        Vec t = gap_angle(dv, n, G);
        double acc = 0.0;
        for (int i = 0; i < G.Mx; ++i) acc += t[i] + r * w.phase[n - 1][i] - F.Phi[n - 1][i];
        shift[n - 1] = acc / G.Mx;
    }
    if (G.biperiodic()) {
        for (int n = 2; n <= g.N; ++n) c.alpha[n - 1] = c.alpha[n - 2] + shift[n - 1];
        c.d = shift[0] + c.alpha[g.N - 1];
    } else {
        for (int n = 1; n <= g.N; ++n) c.alpha[n] = c.alpha[n - 1] + shift[n - 1];
    }
    return c;
}

/// Leading-order fields of the expansion on the grid of G.
inline FieldSet predicted_fields(const PhaseVector& dv, double r, const Grid& G) {
    const auto& g = G.geom;
    const auto& P = G.par;
    FirstOrderCorrection w = first_order(dv, G);
    FieldSet F;
    F.kind = g.kind;
    F.N = g.N;
    F.x = G.x;
    for (int k = 0; k < G.NZ; ++k) {
        F.z.push_back((k + 0.5) * G.dz);
        Vec row(G.Mx);
        for (int i = 0; i < G.Mx; ++i) row[i] = P.H + r * w.field[k / G.Mz][i];
        F.h.push_back(std::move(row));
    }
    for (int j = 0; j < g.planes(); ++j) {
        Vec f(G.Mx), V(G.Mx), jx(G.Mx);
        for (int i = 0; i < G.Mx; ++i) {
            f[i] = 1.0 + r * w.modulus[j][i];
            V[i] = r * w.velocity[j][i];
            jx[i] = V[i];
        }
        F.f.push_back(f);
        F.V.push_back(V);
        F.jx.push_back(jx);
    }
    for (int n = 1; n <= g.N; ++n) {
        Vec t = gap_angle(dv, n, G);
        Vec Phi(G.Mx), jz(G.Mx);
        for (int i = 0; i < G.Mx; ++i) {
            Phi[i] = t[i] + r * w.phase[n - 1][i];
            jz[i] = 0.5 * r * P.kappa * P.kappa * P.p * std::sin(t[i]);
        }
        F.Phi.push_back(Phi);
        F.jz.push_back(jz);
    }
    return F;
}

/// Coefficient of r^2 in the energy along sigma + r w_1, by direct quadrature of the
/// second variation of the r = 0 energy plus the first variation of the coupling term.
inline double omega2_quadrature(const PhaseVector& dv, const Grid& G) {
    const auto& g = G.geom;
    const auto& P = G.par;
    const double k2 = P.kappa * P.kappa;
    FirstOrderCorrection w = first_order(dv, G);
    double acc = 0.0;
    for (int j = 0; j < g.planes(); ++j) {
        Vec du = G.X.deriv(w.modulus[j]);
        for (int i = 0; i < G.Mx; ++i)
            acc += P.p * G.w * (2.0 * w.modulus[j][i] * w.modulus[j][i] + (du[i] * du[i] + w.velocity[j][i] * w.velocity[j][i]) / k2);
    }
    for (int n = 1; n <= g.N; ++n) {
        Vec t = gap_angle(dv, n, G);
        const Vec& uu = G.biperiodic() ? w.modulus[n - 1] : w.modulus[n];
        Vec ul = G.biperiodic() ? (n == 1 ? G.X.shift(w.modulus[g.N - 1], g.s) : w.modulus[n - 2]) : w.modulus[n - 1];
        for (int i = 0; i < G.Mx; ++i) {
            acc += P.p * G.w * w.field[n - 1][i] * w.field[n - 1][i] / k2;
            acc += P.p * G.w * ((uu[i] + ul[i]) * (1.0 - std::cos(t[i])) + std::sin(t[i]) * w.phase[n - 1][i]);
        }
    }
    return acc;
}

/// Objective of the reduced problem: (1/N) sum cos(delta_n - delta_{n+1}) over the
/// coupled neighbour pairs (N pairs biperiodic, N-1 pairs finite, normalized per pair).
inline double reduced_objective(const PhaseVector& dv, Kind kind) {
    int N = kind == Kind::biperiodic ? static_cast<int>(dv.delta.size()) - 1 : static_cast<int>(dv.delta.size());
    int pairs = kind == Kind::biperiodic ? N : N - 1;
    if (pairs <= 0) return 0.0;
    double s = 0.0;
    for (int n = 0; n < pairs; ++n) s += std::cos(dv.delta[n] - dv.delta[n + 1]);
    return s / pairs;
}

struct ExpansionReport {
    double Omega1 = 0.0;
    double C0 = 0.0;
    double C1 = 0.0;
    double F = 0.0;
    std::string formula;

    double predicted_energy(double r) const { return Omega1 * (r + r * r * (C0 + C1 * F)); }
};

inline void to_json(json& j, const ExpansionReport& e) {
    j = json{{"Omega1", e.Omega1}, {"C0", e.C0}, {"C1", e.C1}, {"F", e.F}, {"formula", e.formula}};
}

/// Closed-form constants of the biperiodic expansion
/// E = 2Npq (r + r^2 (C0 + C1 F)) + O(r^3), with e = kappa^2/(2H^2p^2),
/// c = kappa^2/(2(H^2p^2 + 2kappa^2)):  C0 = -(1 + c + e(1 + p^2/2))/2, C1 = (e - c)/2.
inline ExpansionReport expansion_constants(const LatticeGeometry& g, const ModelParams& P, double F) {
    require_admissible(g, P);
    const double k2 = P.kappa * P.kappa, Hp2 = P.H * P.H * P.p * P.p;
    const double e = k2 / (2.0 * Hp2);
    const double c = k2 / (2.0 * (Hp2 + 2.0 * k2));
    ExpansionReport rep;
    rep.Omega1 = 2.0 * g.N * P.p * g.q;
    rep.C0 = -0.5 * (1.0 + c + e * (1.0 + 0.5 * P.p * P.p));
    rep.C1 = 0.5 * (e - c);
    rep.F = F;
    rep.formula = "E = 2Npq (r + r^2 (C0 + C1 F)); C0 = -(1 + c + e (1 + p^2/2))/2, C1 = (e - c)/2, "
                  "e = kappa^2/(2 H^2 p^2), c = kappa^2/(2 (H^2 p^2 + 2 kappa^2))";
    return rep;
}

/// Constants recovered from the quadrature of the r^2 coefficient at two phase vectors
/// with distinct reduced objective values. Works for both stack kinds.
inline ExpansionReport constants_by_quadrature(const Grid& G, const PhaseVector& a, const PhaseVector& b) {
    const auto& g = G.geom;
    double area = 2.0 * g.N * G.par.p * g.q;
    double ea = omega2_quadrature(a, G) / area, eb = omega2_quadrature(b, G) / area;
    double Fa = reduced_objective(a, g.kind), Fb = reduced_objective(b, g.kind);
    ExpansionReport rep;
    rep.Omega1 = area;
    rep.C1 = (ea - eb) / (Fa - Fb);
    rep.C0 = ea - rep.C1 * Fa;
    rep.F = Fa;
    rep.formula = "quadrature of the r^2 coefficient at two phase vectors";
    return rep;
}

}  // namespace ldl
