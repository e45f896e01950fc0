// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ldl/minimize.hpp"

using namespace ldl;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ModelParams prototype(double r = 0.0) { return ModelParams{1.0, 2.0 * pi, 0.5, r}; }

double sup_diff(const Rows& a, const Rows& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a[k].size(); ++i) m = std::max(m, std::abs(a[k][i] - b[k][i]));
    return m;
}

// smooth noise on the moduli, phases and field around a random manifold point, plus noise
// on the plane offsets and the scalar unknowns
Configuration random_state(const Grid& G, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Configuration c = random_init(G, rng(), 0.1);
    for (double& v : c.alpha) v += 0.1 * nd(rng);
    c.omega += 0.1 * nd(rng);
    c.d += 0.1 * nd(rng);
    return c;
}

// ---------------------------------------------------------------- 1

Outcome gradient_consistency() {
    auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    const char* names[] = {"f", "chi", "alpha", "omega/d", "xi"};
    std::string worst_group;
    for (int t = 0; t < 20; ++t) {
        ModelParams P = prototype(0.25 + 0.25 * (t % 4));
        Kind kind = t % 2 ? Kind::finite_layer : Kind::biperiodic;
        int N = 1 + t % 3;
        auto g = build_geometry(N, 0.13 * t, 1 + t % 2, P, kind);
        Grid G(g, P, Discretization{64, 8});
        Configuration c = random_state(G, rng);
        Configuration gc;
        energy_and_gradient(c, G, &gc);
        Vec x = c.pack(), grad = gc.pack();
        std::size_t nf = c.f.size() * c.Mx, na = c.alpha.size();
        std::size_t bounds[] = {0, nf, 2 * nf, 2 * nf + na, 2 * nf + na + 2, x.size()};
        Configuration w = c;
        for (int b = 0; b < 5; ++b) {
            std::size_t lo = bounds[b], hi = bounds[b + 1];
            std::size_t stride = std::max<std::size_t>(1, (hi - lo) / 24);
            double num = 0.0, den = 0.0;
            for (std::size_t i = lo; i < hi; i += stride) {
                Vec y = x;
                y[i] += 1e-5;
                w.unpack(y);
                double ep = energy(w, G).total;
                y[i] -= 2e-5;
                w.unpack(y);
                double em = energy(w, G).total;
                num = std::max(num, std::abs((ep - em) / 2e-5 - grad[i]));
                den = std::max(den, std::abs(grad[i]));
            }
            // a group with identically zero gradient is a symmetry direction; use the absolute error
            double rel = den > 0 ? num / den : num;
            if (rel > worst) {
                worst = rel;
                worst_group = names[b];
            }
        }
    }
    double secs = seconds_since(t0);
    return {worst < 1e-6 && secs < 30.0, "max group relative error " + fmt("%.2e", worst) + " (" + worst_group +
                                             "), tol 1e-6; " + fmt("%.1f", secs) + " s, limit 30 s"};
}

// ---------------------------------------------------------------- 2

Outcome flux_quantization() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0, 2 * pi);
    double worst = 0.0;
    int count = 0;
    auto check = [&](const Configuration& c, const Grid& G) {
        FieldSet F = observables(c, G);
        double flux = 0.0;
        for (auto& row : F.h)
            for (double v : row) flux += v * G.w * G.dz;
        double want = 2.0 * pi * G.geom.K;
        worst = std::max(worst, std::abs(flux - want) / want);
        ++count;
    };
    for (int t = 0; t < 12; ++t) {
        ModelParams P = prototype(0.01 * t);
        auto g = build_geometry(1 + t % 4, 0.21 * t, 1 + t % 3, P, Kind::biperiodic);
        Grid G(g, P, Discretization{32, 4});
        Vec in;
        for (int n = 1; n < g.N; ++n) in.push_back(U(rng));
        PhaseVector dv = phase_vector(in, g, P);
        Configuration rs = random_state(G, rng);
        check(rs, G);
        check(manifold_point(dv, G), G);
        check(first_order_configuration(dv, P.r, G), G);
        check(random_init(G, t), G);
        check(gauge_fix(to_raw(rs, G), G), G);
    }
    return {worst <= 1e-10, std::to_string(count) + " biperiodic configurations, max |flux - 2 pi K|/(2 pi K) = " +
                                fmt("%.2e", worst) + ", tol 1e-10"};
}

// ---------------------------------------------------------------- 3

Outcome zero_energy_manifold() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0, 2 * pi);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        ModelParams P = prototype(0.0);
        Kind kind = t % 2 ? Kind::finite_layer : Kind::biperiodic;
        auto g = build_geometry(1 + t % 4, U(rng) / pi, 1 + t % 2, P, kind);
        Grid G(g, P, Discretization{64, 8});
        Vec in;
        for (int n = 1; n < g.N; ++n) in.push_back(U(rng));
        worst = std::max(worst, energy(manifold_point(phase_vector(in, g, P), G), G).total);
    }
    ModelParams P = prototype(0.0);
    auto g = custom_geometry(1, 0.0, 1.3 * q1(P), {0, 1}, Kind::biperiodic);
    Grid G(g, P, Discretization{32, 4});
    double best = 1e300;
    bool all_converged = true;
    for (int s = 0; s < 4; ++s) {
        MinimizeResult r = minimize_energy(random_init(G, 100 + s), G, SolverOptions{});
        all_converged = all_converged && r.converged;
        best = std::min(best, r.energy.total / g.area(P));
    }
    bool ok = worst <= 1e-12 && all_converged && best >= 1e-3;
    return {ok, "manifold max energy " + fmt("%.2e", worst) + " (tol 1e-12); inadmissible q = 1.3 q1: min energy per area over 4 starts " +
                    fmt("%.6g", best) + (all_converged ? "" : " (not all runs converged)") + ", bound 1e-3"};
}

// ---------------------------------------------------------------- 4-6

struct Sweep {
    ComparisonReport rep;
    bool ok = true;
    std::string err;
};

Sweep sweep(int N, double s_q1) {
    ModelParams P = prototype();
    auto g = build_geometry(N, s_q1 * q1(P), 1, P, Kind::biperiodic);
    Vec rs{1e-3, 2e-3, 4e-3};
    Sweep out;
    try {
        auto runs = continuation_in_r(minimize_F(N, g.s, P).delta, rs, g, P, Discretization{128, 16}, SolverOptions{});
        std::vector<Configuration> st;
        for (auto& r : runs) st.push_back(r.state);
        out.rep = compare_with_asymptotics(st, rs, g, P);
    } catch (const NoConvergence& e) {
        out.ok = false;
        out.err = e.what();
    }
    return out;
}

Outcome order_r_law(const Sweep& sw) {
    if (!sw.ok) return {false, sw.err};
    std::string d = "e(r)/r =";
    bool ok = true;
    for (std::size_t i = 0; i < sw.rep.r_values.size(); ++i) {
        double q = sw.rep.measured_energy_per_area[i] / sw.rep.r_values[i];
        ok = ok && q >= 0.99 && q <= 1.0;
        d += " " + fmt("%.6f", q);
    }
    return {ok, d + " at r = 1e-3, 2e-3, 4e-3; required in [0.99, 1]"};
}

Outcome order_r2_constant(const Sweep& opt, const Sweep& fr) {
    if (!opt.ok || !fr.ok) return {false, opt.ok ? fr.err : opt.err};
    bool ok = opt.rep.relative_error < 0.05 && fr.rep.relative_error < 0.05;
    return {ok, "optimal (N=1, s=q1, F=" + fmt("%.6f", opt.rep.F) + "): fitted " + fmt("%.7f", opt.rep.fitted_C0_plus_C1F) +
                    " vs " + fmt("%.7f", opt.rep.predicted_C0_plus_C1F) + ", rel " + fmt("%.1e", opt.rep.relative_error) +
                    "; frustrated (N=2, Hps=pi/2, F=" + fmt("%.6f", fr.rep.F) + "): fitted " +
                    fmt("%.7f", fr.rep.fitted_C0_plus_C1F) + " vs " + fmt("%.7f", fr.rep.predicted_C0_plus_C1F) +
                    ", rel " + fmt("%.1e", fr.rep.relative_error) + "; tol 5%"};
}

Outcome field_convergence(const Sweep& sw) {
    if (!sw.ok) return {false, sw.err};
    const auto& r = sw.rep.r_values;
    const auto& e = sw.rep.field_sup_errors;
    // least-squares slope of log(err/r) against log r
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = static_cast<int>(r.size());
    for (int i = 0; i < n; ++i) {
        double x = std::log(r[i]), y = std::log(e[i] / r[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    // staggered phases from a random start of the even stack at r = 1e-3
    ModelParams P = prototype(1e-3);
    auto g = build_geometry(2, 0.0, 1, P, Kind::biperiodic);
    Grid G(g, P, Discretization{64, 8});
    MinimizeResult m = minimize_energy(random_init(G, 5), G, SolverOptions{});
    PhaseVector d = relative_phases(extract_phases(observables(m.state, G), G));
    double dev = std::abs(std::abs(std::remainder(d[2] - d[1], 2 * pi)) - pi);
    double dev1 = std::abs(std::abs(std::remainder(sw.rep.delta_extracted[2] - sw.rep.delta_extracted[1], 2 * pi)) - pi);
    bool ok = std::abs(slope - 1.0) <= 0.3 && dev <= 1e-2 && dev1 <= 1e-2 && m.converged;
    return {ok, "log-log slope of sup|h - h_pred|/r: " + fmt("%.3f", slope) + " (1.0 +- 0.3); |delta_2 - delta_1| - pi: N=1 " +
                    fmt("%.1e", dev1) + ", N=2 random start " + fmt("%.1e", dev) + " (tol 1e-2)"};
}

// ---------------------------------------------------------------- 7

Outcome reduced_oracle() {
    ModelParams P = prototype();
    double worst_ratio = 0.0, worst_closed = 0.0, worst_comm = 0.0;
    bool below = true;
    for (int N = 1; N <= 4; ++N) {
        int G = N <= 3 ? 4096 : 128;
        for (int i = 0; i < 12; ++i) {
            double s = 2.0 * q1(P) * i / 12 + 0.017;
            double mf = minimize_F(N, s, P).F;
            double bf = brute_force_F(N, s, P, G);
            below = below && mf <= bf + 1e-12;
            worst_ratio = std::max(worst_ratio, (bf - mf) / brute_force_tolerance(N, G));
            if (N == 2) worst_closed = std::max(worst_closed, std::abs(mf + std::abs(std::cos(pi * s / 2))));
        }
    }
    for (int N = 1; N <= 8; ++N)
        for (int l = -2; l <= 3; ++l) {
            if (classify_optimality(N, l * q1(P), P) == Optimality::frustrated) continue;
            worst_comm = std::max(worst_comm, std::abs(minimize_F(N, l * q1(P), P).F + 1.0));
        }
    bool ok = below && worst_ratio <= 1.0 && worst_closed <= 1e-6 && worst_comm <= 1e-9;
    return {ok, "brute-force gap / grid tolerance max " + fmt("%.3f", worst_ratio) + "; |F + 1| on commensurate set " +
                    fmt("%.1e", worst_comm) + " (tol 1e-9); |F(2,s) + |cos(Hps/2)|| " + fmt("%.1e", worst_closed) +
                    " (tol 1e-6)"};
}

// ---------------------------------------------------------------- 8

Outcome hessian_signs() {
    ModelParams P = prototype();
    double min_st = 1e300, max_vp = -1e300;
    for (int N = 2; N <= 8; ++N) {
        auto g = build_geometry(N, (N % 2) * q1(P), 1, P, Kind::biperiodic);
        min_st = std::min(min_st, reduced_hessian(staggered_phases(g, P)).min_eigenvalue);
        auto g0 = build_geometry(N, 0.0, 1, P, Kind::biperiodic);
        max_vp = std::max(max_vp, reduced_hessian(phase_vector(Vec(N - 1, 0.0), g0, P)).max_eigenvalue);
    }
    ModelParams Q = prototype(1e-2);
    auto g = build_geometry(2, 0.0, 1, Q, Kind::biperiodic);
    Grid G(g, Q, Discretization{64, 8});
    PhaseVector vp = phase_vector({0.0}, g, Q);
    Configuration start = first_order_configuration(vp, Q.r, G);
    MinimizeResult saddle = minimize_energy(start, G, SolverOptions{});
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    Configuration kicked = start;
    for (auto& v : kicked.chi)
        for (double& a : v) a += 1e-3 * nd(rng);
    normalize_phases(kicked);
    MinimizeResult esc = minimize_energy(kicked, G, SolverOptions{});
    double gap = (saddle.energy.total - esc.energy.total) / g.area(Q);
    double expect = 2.0 * expansion_constants(g, Q, -1.0).C1 * Q.r * Q.r;
    PhaseVector d = relative_phases(extract_phases(observables(esc.state, G), G));
    bool ok = min_st > 0 && max_vp < 0 && saddle.converged && esc.converged && gap > 0;
    return {ok, "staggered min eigenvalue " + fmt("%.3f", min_st) + " > 0; vortex-plane max eigenvalue " +
                    fmt("%.3f", max_vp) + " < 0; full model r=1e-2: saddle - escaped energy per area " +
                    fmt("%.3e", gap) + " (expansion " + fmt("%.3e", expect) + "), escaped |delta_2 - delta_1| = " +
                    fmt("%.4f", std::abs(std::remainder(d[2] - d[1], 2 * pi)))};
}

// ---------------------------------------------------------------- 9

Outcome commensurate_equivalence() {
    ModelParams P = prototype(1e-2);
    Discretization D{64, 8};
    auto g1 = build_geometry(1, q1(P), 1, P, Kind::biperiodic);
    auto g2 = build_geometry(2, 0.0, 1, P, Kind::biperiodic);
    Grid G1(g1, P, D), G2(g2, P, D);
    MinimizeResult a = minimize_energy(random_init(G1, 21), G1, SolverOptions{});
    MinimizeResult b = minimize_energy(random_init(G2, 22), G2, SolverOptions{});
    double ea = a.energy.total / g1.area(P), eb = b.energy.total / g2.area(P);
    double rel = std::abs(ea - eb) / std::abs(ea);
    FieldSet A = observables(a.state, G1), B = observables(b.state, G2);
    // translate the single-plane state onto the two-plane one, then stack it twice with
    // the shift s = q1 between copies
    const double Hp = P.H * P.p;
    double x0 = std::remainder(extract_phases(A, G1)[1] - extract_phases(B, G2)[1], 2 * pi) / Hp;
    auto move = [&](const Vec& v, double extra) { return G1.X.shift(v, -x0 - extra); };
    FieldSet E = B;
    for (int n = 0; n < 2; ++n) {
        double sh = n * g1.s;
        E.f[n] = move(A.f[0], sh);
        E.V[n] = move(A.V[0], sh);
        // the gap phase winds in x, so move its periodic cosine and sine instead
        Vec c(G1.Mx), si(G1.Mx);
        for (int i = 0; i < G1.Mx; ++i) {
            c[i] = std::cos(A.Phi[0][i]);
            si[i] = std::sin(A.Phi[0][i]);
        }
        c = move(c, sh);
        si = move(si, sh);
        for (int i = 0; i < G1.Mx; ++i) E.Phi[n][i] = std::atan2(si[i], c[i]);
        E.jz[n] = move(A.jz[0], sh);
        for (int k = 0; k < G1.NZ; ++k) E.h[n * G1.NZ + k] = move(A.h[k], sh);
    }
    double df = sup_diff(E.f, B.f), dv = sup_diff(E.V, B.V), dh = sup_diff(E.h, B.h), dj = sup_diff(E.jz, B.jz);
    double dp = 0.0;
    for (int n = 0; n < 2; ++n)
        for (int i = 0; i < G2.Mx; ++i) dp = std::max(dp, std::abs(std::remainder(E.Phi[n][i] - B.Phi[n][i], 2 * pi)));
    double field = std::max({df, dv, dh, dj, dp});
    bool ok = a.converged && b.converged && rel <= 1e-6 && field <= 1e-6;
    return {ok, "r=1e-2 energy per area " + fmt("%.12f", ea) + " vs " + fmt("%.12f", eb) + ", rel " + fmt("%.1e", rel) +
                    " (tol 1e-6); shifted field sup difference " + fmt("%.1e", field) + " (tol 1e-6)"};
}

// ---------------------------------------------------------------- 10

Outcome finite_layer_edges() {
    ModelParams P = prototype(1e-2);
    auto g = build_geometry(4, 0.0, 1, P, Kind::finite_layer);
    Grid G(g, P, Discretization{64, 8});
    PhaseVector dv = staggered_phases(g, P);
    MinimizeResult m = minimize_energy(first_order_configuration(dv, P.r, G), G, SolverOptions{});
    FieldSet F = observables(m.state, G);
    PhaseVector ext = extract_phases(F, G);
    FirstOrderCorrection w = first_order(ext, G);
    const double c = P.kappa * P.kappa / (2.0 * (P.H * P.H * P.p * P.p + 2.0 * P.kappa * P.kappa));
    const double Hp = P.H * P.p;
    double interior = 0.0, edge = 0.0, formula = 0.0;
    for (int n = 0; n <= 4; ++n)
        for (int i = 0; i < G.Mx; ++i) {
            double pred = 1.0 + P.r * w.modulus[n][i];
            double dev = std::abs(F.f[n][i] - pred);
            if (n == 0 || n == 4) edge = std::max(edge, dev);
            else interior = std::max(interior, dev);
            // closed forms of the order-r modulus at the edge and in the interior
            double th_lo = n > 0 ? ext[n] + Hp * G.x[i] : 0.0, th_hi = n < 4 ? ext[n + 1] + Hp * G.x[i] : 0.0;
            double closed = n == 0 ? -0.25 + c * std::cos(th_hi)
                            : n == 4 ? -0.25 + c * std::cos(th_lo)
                                     : -0.5 + c * (std::cos(th_lo) + std::cos(th_hi));
            formula = std::max(formula, std::abs(w.modulus[n][i] - closed));
        }
    double consts = 0.0;
    FirstOrderCorrection w0 = first_order(dv, G);
    for (double v : w0.velocity_offset) consts = std::max(consts, std::abs(v));
    for (double v : w0.field_offset) consts = std::max(consts, std::abs(v));
    double tol = 3.0 * P.r * P.r;
    bool ok = m.converged && interior <= tol && edge <= tol && consts <= 1e-12 && formula <= 1e-12;
    return {ok, "N=4 r=1e-2: interior sup|f - f_pred| " + fmt("%.2e", interior) + ", edge planes " + fmt("%.2e", edge) +
                    " (tol " + fmt("%.0e", tol) + "); gap/velocity constants " + fmt("%.1e", consts) +
                    " (tol 1e-12); closed-form check " + fmt("%.1e", formula)};
}

}  // namespace

int main() {
    auto t0 = Clock::now();
    std::vector<std::pair<std::string, std::function<Outcome()>>> crit;
    Sweep opt, fr;
    bool swept = false;
    auto ensure = [&] {
        if (swept) return;
        opt = sweep(1, 1.0);
        fr = sweep(2, 0.5);
        swept = true;
    };
    crit.emplace_back("gradient consistency", gradient_consistency);
    crit.emplace_back("flux quantization", flux_quantization);
    crit.emplace_back("zero-energy manifold", zero_energy_manifold);
    crit.emplace_back("order-r law", [&] { ensure(); return order_r_law(opt); });
    crit.emplace_back("order-r^2 constant", [&] { ensure(); return order_r2_constant(opt, fr); });
    crit.emplace_back("field convergence", [&] { ensure(); return field_convergence(opt); });
    crit.emplace_back("reduced-problem oracle", reduced_oracle);
    crit.emplace_back("Hessian signs", hessian_signs);
    crit.emplace_back("commensurate equivalence", commensurate_equivalence);
    crit.emplace_back("finite-layer edge effect", finite_layer_edges);
    int failed = 0;
    for (std::size_t i = 0; i < crit.size(); ++i) {
        Outcome o;
        try {
            o = crit[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %zu [%s]: %s  %s\n", i + 1, crit[i].first.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed in %.1f s\n", static_cast<int>(crit.size()) - failed, crit.size(),
                seconds_since(t0));
    return failed ? 1 : 0;
}
