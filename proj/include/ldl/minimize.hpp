#pragma once
// Full-model minimization (preconditioned L-BFGS), continuation in the coupling, and the
// comparison of numerical minimizers with the small-coupling expansion.

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "frustration.hpp"

namespace ldl {

struct SolverOptions {
    int max_iters = 20000;
    double grad_tol = 1e-9;
    int memory = 10;
    unsigned long long seed = 12345;

    void validate() const {
        if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
        if (!(grad_tol > 0.0)) throw ConfigError("grad_tol must be positive");
        if (memory < 1) throw ConfigError("memory must be >= 1");
    }
};

inline void to_json(json& j, const SolverOptions& o) {
    j = json{{"max_iters", o.max_iters}, {"grad_tol", o.grad_tol}, {"memory", o.memory}, {"seed", o.seed}};
}

struct MinimizeResult {
    Configuration state;
    EnergyBreakdown energy;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

struct NoConvergence : std::runtime_error {
    MinimizeResult best;
    double r = 0.0;
    NoConvergence(const std::string& what, MinimizeResult b, double r_)
        : std::runtime_error(what), best(std::move(b)), r(r_) {}
};

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec axpy(const Vec& x, double t, const Vec& d) {
    Vec y(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += t * d[i];
    return y;
}

/// Block-diagonal approximation of the inverse Hessian around f = 1.
struct Preconditioner {
    const Grid& G;
    Configuration shape;

    Vec apply(const Vec& gvec) const {
        const auto& P = G.par;
        const double k2 = P.kappa * P.kappa, pw = P.p * G.w, L = 2.0 * G.geom.q;
        const double eps = 1e-3;
        Configuration g = shape;
        g.unpack(gvec);
        for (auto& v : g.f)
            v = G.X.apply(v, [&](int i) {
                double k = G.X.k(i);
                return cplx(1.0 / (pw * (4.0 + 2.0 * k * k / k2 + 2.0 * P.r)));
            });
        for (auto& v : g.chi)
            v = G.X.apply(v, [&](int i) {
                if (i == 0) return cplx(0.0);  // the mean is carried by alpha
                double k = G.X.k(i);
                return cplx(1.0 / (pw * (2.0 * k * k / k2 + 2.0 * P.r + eps)));
            });
        for (double& a : g.alpha) a /= 2.0 * P.r * P.p * L + eps;
        g.d /= P.r * P.p * L + eps;
        g.omega /= g.planes() * P.p / (k2 * G.geom.q);
        const double mw = 2.0 * G.w * G.dz / k2;
        g.xi = apply_laplace_function(g.xi, G, [&](double lam) { return 1.0 / (mw * (lam * lam + std::abs(lam)) + eps); });
        return g.pack();
    }
};

inline bool moduli_positive(const Vec& x, int count) {
    for (int i = 0; i < count; ++i)
        if (!(x[i] > 0.0)) return false;
    return true;
}

}  // namespace detail

/// Limited-memory quasi-Newton descent with a backtracking line search (sufficient decrease
/// 1e-4, factor 0.5). Steps that make any modulus sample non-positive are rejected.
/// Stops when the sup-norm of the energy gradient is below grad_tol; throws NoConvergence
/// with the best state otherwise.
inline MinimizeResult minimize_energy(const Configuration& initial, const Grid& G, const SolverOptions& opts) {
    opts.validate();
    const Configuration shape = initial;
    const int nf = static_cast<int>(initial.f.size()) * initial.Mx;
    detail::Preconditioner pre{G, shape};

    auto eval = [&](const Vec& x, Vec& g) {
        Configuration c = shape, gc;
        c.unpack(x);
        EnergyBreakdown E = energy_and_gradient(c, G, &gc);
        g = gc.pack();
        return E;
    };
    auto sup = [](const Vec& v) {
        double m = 0.0;
        for (double a : v) m = std::max(m, std::abs(a));
        return m;
    };

    Vec x = initial.pack(), g;
    if (!detail::moduli_positive(x, nf)) throw ConfigError("initial moduli must be positive");
    EnergyBreakdown E = eval(x, g);
    std::deque<Vec> S, Y;
    std::deque<double> rho;
    MinimizeResult res;
    auto finish = [&](int it, bool ok, const std::string& msg) {
        res.state = shape;
        res.state.unpack(x);
        res.energy = E;
        res.grad_norm = sup(g);
        res.iterations = it;
        res.converged = ok;
        res.message = msg;
        return res;
    };

    for (int it = 0; it < opts.max_iters; ++it) {
        if (sup(g) <= opts.grad_tol) return finish(it, true, "converged");

        // two-loop recursion with the block preconditioner as the seed matrix
        Vec q = g;
        std::vector<double> a(S.size());
        for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
            a[i] = rho[i] * detail::dot(S[i], q);
            for (std::size_t k = 0; k < q.size(); ++k) q[k] -= a[i] * Y[i][k];
        }
        Vec r = pre.apply(q);
        if (!S.empty()) {
            Vec Hy = pre.apply(Y.back());
            double gamma = detail::dot(S.back(), Y.back()) / detail::dot(Y.back(), Hy);
            for (double& v : r) v *= gamma;
        }
        for (std::size_t i = 0; i < S.size(); ++i) {
            double b = rho[i] * detail::dot(Y[i], r);
            for (std::size_t k = 0; k < r.size(); ++k) r[k] += (a[i] - b) * S[i][k];
        }
        Vec d(r.size());
        for (std::size_t k = 0; k < r.size(); ++k) d[k] = -r[k];
        double slope = detail::dot(g, d);
        if (!(slope < 0.0)) {
            S.clear();
            Y.clear();
            rho.clear();
            d = pre.apply(g);
            for (double& v : d) v = -v;
            slope = detail::dot(g, d);
            if (!(slope < 0.0)) return finish(it, false, "no descent direction");
        }

        // keep modulus updates moderate
        double t = 1.0, dfmax = 0.0;
        for (int i = 0; i < nf; ++i) dfmax = std::max(dfmax, std::abs(d[i]));
        if (dfmax * t > 0.25) t = 0.25 / dfmax;

        bool accepted = false;
        Vec xn, gn;
        EnergyBreakdown En;
        for (int b = 0; b < 60; ++b, t *= 0.5) {
            xn = detail::axpy(x, t, d);
            if (!detail::moduli_positive(xn, nf)) continue;
            En = eval(xn, gn);
            if (!std::isfinite(En.total)) continue;
            if (En.total <= E.total + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            // roundoff regime: no measurable change in energy but the slope along d has dropped
            double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(E.total));
            if (En.total <= E.total + tol && detail::dot(gn, d) <= 0.8 * std::abs(slope)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!S.empty()) {
                S.clear();
                Y.clear();
                rho.clear();
                continue;
            }
            return finish(it, false, "line search failed");
        }
        Vec s(x.size()), y(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            s[k] = xn[k] - x[k];
            y[k] = gn[k] - g[k];
        }
        double sy = detail::dot(s, y);
        if (sy > 1e-30 * std::sqrt(detail::dot(s, s) * detail::dot(y, y)) && sy > 0.0) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > opts.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        x = std::move(xn);
        g = std::move(gn);
        E = En;
    }
    return finish(opts.max_iters, sup(g) <= opts.grad_tol, sup(g) <= opts.grad_tol ? "converged" : "iteration limit");
}

/// Same as minimize_energy but throws NoConvergence on failure.
inline MinimizeResult minimize_or_throw(const Configuration& initial, const Grid& G, const SolverOptions& opts) {
    MinimizeResult res = minimize_energy(initial, G, opts);
    if (!res.converged)
        throw NoConvergence("minimization stopped (" + res.message + ") at gradient " + io::num(res.grad_norm) +
                                " after " + std::to_string(res.iterations) + " iterations",
                            res, G.par.r);
    return res;
}

namespace detail {

// Smooth periodic Gaussian sample with pointwise standard deviation amp: the lowest
// `modes` Fourier pairs with independent normal coefficients.
inline Vec smooth_noise(const Grid& G, std::mt19937_64& rng, double amp, int modes = 4) {
    std::normal_distribution<double> N01(0.0, 1.0);
    Vec v(G.Mx, 0.0);
    const double L = 2.0 * G.geom.q;
    for (int j = 1; j <= modes; ++j) {
        double a = N01(rng), b = N01(rng);
        for (int i = 0; i < G.Mx; ++i) {
            double t = 2.0 * pi * j * G.x[i] / L;
            v[i] += amp * (a * std::cos(t) + b * std::sin(t)) / std::sqrt(double(modes));
        }
    }
    return v;
}

}  // namespace detail

/// Manifold point (random phases for admissible geometries) plus smooth Gaussian noise of
/// the given amplitude on the moduli, the phases and the field h (one sample per gap).
inline Configuration random_init(const Grid& G, unsigned long long seed, double amplitude = 0.1) {
    const auto& g = G.geom;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 2.0 * pi);
    Configuration c;
    if (classify_geometry(g, G.par).admissible) {
        Vec in(g.N - 1);
        for (double& a : in) a = U(rng);
        c = manifold_point(phase_vector(in, g, G.par), G);
    } else {
        c = Configuration::zeros(g, Discretization{G.Mx, G.Mz});
    }
    for (auto& v : c.f) {
        Vec n = detail::smooth_noise(G, rng, amplitude);
        for (int i = 0; i < G.Mx; ++i) v[i] += n[i];
    }
    for (auto& v : c.chi) {
        Vec n = detail::smooth_noise(G, rng, amplitude);
        for (int i = 0; i < G.Mx; ++i) v[i] += n[i];
    }
    normalize_phases(c);
    Rows eta(G.NZ);
    for (int n = 0; n < g.N; ++n) {
        Vec v = detail::smooth_noise(G, rng, amplitude);
        for (int k = 0; k < G.Mz; ++k) eta[n * G.Mz + k] = v;
    }
    Rows dxi = solve_periodic_poisson(eta, G).xi;
    for (int k = 0; k < G.NZ; ++k)
        for (int i = 0; i < G.Mx; ++i) c.xi[k][i] += dxi[k][i];
    return c;
}

/// Minimizers along an ascending list of couplings. The first run starts from the order-r
/// corrected manifold point, later runs warm-start from the previous minimizer.
inline std::vector<MinimizeResult> continuation_in_r(const PhaseVector& dv, const Vec& r_list, const LatticeGeometry& g,
                                                     const ModelParams& P, const Discretization& D,
                                                     const SolverOptions& opts) {
    require_admissible(g, P);
    for (std::size_t i = 1; i < r_list.size(); ++i)
        if (!(r_list[i] > r_list[i - 1])) throw ConfigError("r values must be strictly ascending");
    std::vector<MinimizeResult> out;
    for (std::size_t i = 0; i < r_list.size(); ++i) {
        ModelParams Q = P;
        Q.r = r_list[i];
        Q.validate();
        Grid G(g, Q, D);
        Configuration start = i == 0 ? first_order_configuration(dv, Q.r, G) : out.back().state;
        if (Q.r == 0.0 && i == 0) start = manifold_point(dv, G);
        out.push_back(minimize_or_throw(start, G, opts));
    }
    return out;
}

/// Gap phases recovered from the Josephson current: j_z of gap n is fitted against
/// a sin(Hpx) + b cos(Hpx), giving delta_n = atan2(b, a). The offset of gap 1 is kept,
/// so the result describes the state including its horizontal translation.
inline PhaseVector extract_phases(const FieldSet& F, const Grid& G) {
    const double Hp = G.par.H * G.par.p;
    PhaseVector v;
    for (int n = 0; n < G.geom.N; ++n) {
        double a = 0.0, b = 0.0;
        for (int i = 0; i < G.Mx; ++i) {
            a += F.jz[n][i] * std::sin(Hp * G.x[i]);
            b += F.jz[n][i] * std::cos(Hp * G.x[i]);
        }
        v.delta.push_back(std::atan2(b, a));
    }
    if (G.biperiodic()) v.delta.push_back(v.delta[0] - Hp * G.geom.s);
    return v;
}

/// Same phases with gap 1 moved to zero and the rest wrapped to (-pi, pi].
inline PhaseVector relative_phases(const PhaseVector& v) {
    PhaseVector out = v;
    for (double& a : out.delta) a = std::remainder(a - v.delta[0], 2.0 * pi);
    return out;
}

/// Value at r = 0 of the polynomial through (r_i, y_i).
inline double extrapolate_to_zero(const Vec& r, const Vec& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        double l = 1.0;
        for (std::size_t j = 0; j < r.size(); ++j)
            if (j != i) l *= r[j] / (r[j] - r[i]);
        s += l * y[i];
    }
    return s;
}

struct ComparisonReport {
    Vec r_values;
    Vec measured_energy_per_area;
    Vec normalized_r2_term;  // (e(r) - r)/r^2
    double fitted_C0_plus_C1F = 0.0;
    double predicted_C0_plus_C1F = 0.0;
    double relative_error = 0.0;
    Vec field_sup_errors;
    Vec min_modulus;
    Vec moduli_constant;  // (1 - min f)/sqrt(r)
    bool energy_bound_holds = true;
    PhaseVector delta_extracted;
    double F = 0.0;
};

inline void to_json(json& j, const ComparisonReport& c) {
    j = json{{"r_values", c.r_values},
             {"measured_energy_per_area", c.measured_energy_per_area},
             {"normalized_r2_term", c.normalized_r2_term},
             {"fitted_C0_plus_C1F", c.fitted_C0_plus_C1F},
             {"predicted_C0_plus_C1F", c.predicted_C0_plus_C1F},
             {"relative_error", c.relative_error},
             {"field_sup_errors", c.field_sup_errors},
             {"min_modulus", c.min_modulus},
             {"moduli_constant", c.moduli_constant},
             {"energy_bound_holds", c.energy_bound_holds},
             {"delta_extracted", c.delta_extracted.delta},
             {"F", c.F}};
}

/// Predicted r^2 constant C0 + C1 F for the geometry: closed form for biperiodic stacks,
/// quadrature at the alternating phases for finite layers.
inline double predicted_r2_constant(const LatticeGeometry& g, const ModelParams& P, const Discretization& D,
                                    double* F_out = nullptr) {
    if (g.kind == Kind::biperiodic) {
        double F = minimize_F(g.N, g.s, P).F;
        if (F_out) *F_out = F;
        auto e = expansion_constants(g, P, F);
        return e.C0 + e.C1 * F;
    }
    Grid G(g, P, D);
    PhaseVector dv = staggered_phases(g, P);
    if (F_out) *F_out = reduced_objective(dv, g.kind);
    return omega2_quadrature(dv, G) / (2.0 * g.N * P.p * g.q);
}

inline ComparisonReport compare_with_asymptotics(const std::vector<Configuration>& states, const Vec& r_values,
                                                 const LatticeGeometry& g, const ModelParams& P) {
    if (states.size() != r_values.size()) throw ConfigError("one state per r value expected");
    if (states.size() < 2) throw InsufficientData("need at least two r values");
    ComparisonReport rep;
    rep.r_values = r_values;
    const double area = 2.0 * g.N * P.p * g.q;
    Discretization D{states[0].Mx, states[0].Mz};
    rep.predicted_C0_plus_C1F = predicted_r2_constant(g, P, D, &rep.F);
    for (std::size_t i = 0; i < states.size(); ++i) {
        ModelParams Q = P;
        Q.r = r_values[i];
        Grid G(g, Q, D);
        double E = energy(states[i], G).total;
        double e = E / area;
        rep.measured_energy_per_area.push_back(e);
        rep.normalized_r2_term.push_back((e - Q.r) / (Q.r * Q.r));
        if (E > area * Q.r * (1.0 + 1e-12)) rep.energy_bound_holds = false;
        FieldSet F = observables(states[i], G);
        PhaseVector dv = extract_phases(F, G);
        if (i == 0) rep.delta_extracted = relative_phases(dv);
        FieldSet Pf = predicted_fields(dv, Q.r, G);
        double err = 0.0;
        for (std::size_t k = 0; k < F.h.size(); ++k)
            for (int x = 0; x < G.Mx; ++x) err = std::max(err, std::abs(F.h[k][x] - Pf.h[k][x]));
        rep.field_sup_errors.push_back(err);
        double fmin = 1e300;
        for (auto& v : states[i].f)
            for (double a : v) fmin = std::min(fmin, a);
        rep.min_modulus.push_back(fmin);
        rep.moduli_constant.push_back((1.0 - fmin) / std::sqrt(Q.r));
    }
    rep.fitted_C0_plus_C1F = extrapolate_to_zero(rep.r_values, rep.normalized_r2_term);
    rep.relative_error =
        std::abs(rep.fitted_C0_plus_C1F - rep.predicted_C0_plus_C1F) / std::abs(rep.predicted_C0_plus_C1F);
    return rep;
}

// ---------------------------------------------------------------- checkpoints

/// Writes checkpoint.json (setup, solver options, iteration, energy and the scalar unknowns)
/// and checkpoint.csv (one row per plane or stream row array) into dir.
inline void save_checkpoint(const std::filesystem::path& dir, const Configuration& c, const Grid& G,
                            const SolverOptions& opts, int iteration, const EnergyBreakdown& E) {
    json h;
    h["geometry"] = geometry_json(G.geom, G.par, Discretization{G.Mx, G.Mz});
    h["params"] = G.par;
    h["solver"] = opts;
    h["iteration"] = iteration;
    h["energy"] = E;
    h["alpha"] = c.alpha;
    h["omega"] = c.omega;
    h["d"] = c.d;
    io::write_atomic(dir / "checkpoint.json", h.dump(2) + "\n");
    std::vector<std::string> head{"array", "index"};
    for (int i = 0; i < G.Mx; ++i) head.push_back("x" + std::to_string(i));
    io::Csv csv(head);
    auto put = [&](const std::string& name, const Rows& rows) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            std::vector<std::string> cells{name, std::to_string(k)};
            for (double v : rows[k]) cells.push_back(io::num(v));
            csv.row_strings(cells);
        }
    };
    put("f", c.f);
    put("chi", c.chi);
    put("xi", c.xi);
    csv.save(dir / "checkpoint.csv");
}

struct Checkpoint {
    Setup setup;
    Configuration state;
    int iteration = 0;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream in(dir / "checkpoint.json");
    if (!in) throw ConfigError("cannot read " + (dir / "checkpoint.json").string());
    json h = json::parse(in);
    json s = h.at("geometry");
    Checkpoint cp;
    cp.setup = setup_from_json(s);
    cp.iteration = h.at("iteration").get<int>();
    cp.state = Configuration::zeros(cp.setup.geom, cp.setup.disc);
    cp.state.alpha = h.at("alpha").get<Vec>();
    cp.state.omega = h.at("omega").get<double>();
    cp.state.d = h.at("d").get<double>();
    std::ifstream csv(dir / "checkpoint.csv");
    if (!csv) throw ConfigError("cannot read " + (dir / "checkpoint.csv").string());
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string name, cell;
        std::getline(ss, name, ',');
        std::getline(ss, cell, ',');
        std::size_t k = std::stoul(cell);
        Rows* target = name == "f" ? &cp.state.f : name == "chi" ? &cp.state.chi : name == "xi" ? &cp.state.xi : nullptr;
        if (!target || k >= target->size()) throw ConfigError("bad checkpoint row: " + name);
        Vec& row = (*target)[k];
        for (double& v : row) {
            if (!std::getline(ss, cell, ',')) throw ConfigError("short checkpoint row");
            v = std::stod(cell);
        }
    }
    return cp;
}

}  // namespace ldl
