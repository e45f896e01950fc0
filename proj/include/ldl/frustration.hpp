#pragma once
// Reduced phase problem on the zero-energy manifold: minimize the mean of
// cos(delta_n - delta_{n+1}) with delta_1 = 0 and, for biperiodic stacks, delta_{N+1} = -Hps.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "asymptotics.hpp"
#include "io.hpp"
#include "parallel.hpp"

namespace ldl {

struct DimensionTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReducedProblem {
    int N = 1;
    Kind kind = Kind::biperiodic;
    double Hps = 0.0;

    int free_count() const { return N - 1; }
    int pairs() const { return kind == Kind::biperiodic ? N : N - 1; }

    PhaseVector embed(const Vec& interior) const {
        PhaseVector v;
        v.delta.push_back(0.0);
        v.delta.insert(v.delta.end(), interior.begin(), interior.end());
        if (kind == Kind::biperiodic) v.delta.push_back(-Hps);
        return v;
    }
};

inline ReducedProblem reduced_problem(int N, double s, const ModelParams& P, Kind kind = Kind::biperiodic) {
    if (N < 1) throw ConfigError("N must be >= 1");
    return ReducedProblem{N, kind, P.H * P.p * s};
}

inline double evaluate_F(const PhaseVector& dv, Kind kind = Kind::biperiodic) { return reduced_objective(dv, kind); }

namespace detail {

// Sum of cosines over coupled pairs, with gradient and Hessian in the free phases.
inline double pair_sum(const ReducedProblem& rp, const Vec& x, Vec* grad, Eigen::MatrixXd* hess) {
    PhaseVector v = rp.embed(x);
    const int m = rp.free_count();
    double s = 0.0;
    if (grad) grad->assign(m, 0.0);
    if (hess) hess->setZero(m, m);
    for (int a = 0; a < rp.pairs(); ++a) {
        double t = v.delta[a] - v.delta[a + 1];
        s += std::cos(t);
        // free index of delta[a] is a-1 (delta[0] is pinned)
        int i = a - 1, j = a < m ? a : -1;
        if (grad) {
            if (i >= 0) (*grad)[i] -= std::sin(t);
            if (j >= 0) (*grad)[j] += std::sin(t);
        }
        if (hess) {
            double c = std::cos(t);
            if (i >= 0) (*hess)(i, i) -= c;
            if (j >= 0) (*hess)(j, j) -= c;
            if (i >= 0 && j >= 0) {
                (*hess)(i, j) += c;
                (*hess)(j, i) += c;
            }
        }
    }
    return s;
}

inline double sup_norm(const Vec& v) {
    double m = 0.0;
    for (double a : v) m = std::max(m, std::abs(a));
    return m;
}

inline double wrap_2pi(double a) {
    double w = std::fmod(a, 2.0 * pi);
    if (w < 0) w += 2.0 * pi;
    if (2.0 * pi - w < 1e-9) w = 0.0;
    return w;
}

inline double circular_gap(double a, double b) {
    double d = std::abs(wrap_2pi(a) - wrap_2pi(b));
    return std::min(d, 2.0 * pi - d);
}

struct LocalResult {
    Vec x;
    double value = 0.0;
};

inline LocalResult descend(const ReducedProblem& rp, Vec x) {
    const int m = rp.free_count();
    Vec g;
    double f = pair_sum(rp, x, &g, nullptr);
    // gradient descent with backtracking until the basin is reached
    for (int it = 0; it < 2000 && sup_norm(g) > 1e-6; ++it) {
        double step = 0.5;
        for (int b = 0; b < 60; ++b) {
            Vec y(x);
            for (int i = 0; i < m; ++i) y[i] -= step * g[i];
            double fy = pair_sum(rp, y, nullptr, nullptr);
            double gg = 0.0;
            for (double a : g) gg += a * a;
            if (fy <= f - 1e-4 * step * gg) {
                x = y;
                break;
            }
            step *= 0.5;
        }
        f = pair_sum(rp, x, &g, nullptr);
    }
    // damped Newton; falls back to a gradient step where the Hessian is not positive definite
    Eigen::MatrixXd Hm;
    for (int it = 0; it < 100 && sup_norm(g) > 1e-14; ++it) {
        pair_sum(rp, x, nullptr, &Hm);
        Eigen::VectorXd ge = Eigen::Map<const Eigen::VectorXd>(g.data(), m);
        Eigen::LLT<Eigen::MatrixXd> llt(Hm);
        Eigen::VectorXd dir = llt.info() == Eigen::Success ? Eigen::VectorXd(-llt.solve(ge)) : Eigen::VectorXd(-ge);
        double step = 1.0;
        bool moved = false;
        for (int b = 0; b < 60; ++b) {
            Vec y(x);
            for (int i = 0; i < m; ++i) y[i] += step * dir[i];
            double fy = pair_sum(rp, y, nullptr, nullptr);
            if (fy < f) {
                moved = true;
                x = y;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        f = pair_sum(rp, x, &g, nullptr);
    }
    return {x, f / rp.pairs()};
}

}  // namespace detail

struct ReducedHessian {
    Eigen::MatrixXd matrix;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
};

/// Hessian of sum cos(delta_n - delta_{n+1}) in the free phases:
/// diagonal -(C_{n-1} + C_n), off-diagonal C_n.
inline ReducedHessian reduced_hessian(const PhaseVector& dv, Kind kind = Kind::biperiodic) {
    ReducedProblem rp;
    rp.kind = kind;
    rp.N = kind == Kind::biperiodic ? static_cast<int>(dv.delta.size()) - 1 : static_cast<int>(dv.delta.size());
    if (rp.N < 2) throw ConfigError("reduced Hessian needs N >= 2");
    if (kind == Kind::biperiodic) rp.Hps = -dv.delta.back();
    Vec x(dv.delta.begin() + 1, dv.delta.begin() + rp.N);
    ReducedHessian h;
    detail::pair_sum(rp, x, nullptr, &h.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix, Eigen::EigenvaluesOnly);
    h.min_eigenvalue = es.eigenvalues().minCoeff();
    h.max_eigenvalue = es.eigenvalues().maxCoeff();
    return h;
}

struct ReducedMinimum {
    double F = 0.0;
    PhaseVector delta;
    bool multiple = false;
    int distinct = 1;
};

/// Multi-start minimization. Free phases of the result are reported in [0, 2pi); among
/// equally good minimizers the lexicographically smallest is returned.
inline ReducedMinimum minimize_F(const ReducedProblem& rp, int starts = 32, unsigned long long seed = 12345) {
    const int m = rp.free_count();
    if (m == 0) return {rp.pairs() > 0 ? reduced_objective(rp.embed({}), rp.kind) : 0.0, rp.embed({}), false, 1};
    std::vector<Vec> inits(starts, Vec(m));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 2.0 * pi);
    for (auto& v : inits)
        for (double& a : v) a = U(rng);
    std::vector<detail::LocalResult> res(starts);
    parallel_for(starts, [&](int i) {
        res[i] = detail::descend(rp, inits[i]);
        for (double& a : res[i].x) a = detail::wrap_2pi(a);
    });
    double best = res[0].value;
    for (const auto& r : res) best = std::min(best, r.value);
    std::vector<Vec> winners;
    for (const auto& r : res) {
        if (r.value > best + 1e-6) continue;
        bool seen = false;
        for (const auto& w : winners) {
            double d = 0.0;
            for (int i = 0; i < m; ++i) d = std::max(d, detail::circular_gap(w[i], r.x[i]));
            if (d < 1e-5) seen = true;
        }
        if (!seen) winners.push_back(r.x);
    }
    const Vec* pick = nullptr;
    double pick_val = 0.0;
    for (const auto& r : res) {
        if (r.value > best + 1e-12) continue;
        if (!pick || r.x < *pick) {
            pick = &r.x;
            pick_val = r.value;
        }
    }
    ReducedMinimum out;
    out.F = pick_val;
    out.delta = rp.embed(*pick);
    out.distinct = static_cast<int>(winners.size());
    out.multiple = winners.size() > 1;
    return out;
}

inline ReducedMinimum minimize_F(int N, double s, const ModelParams& P, Kind kind = Kind::biperiodic, int starts = 32,
                                 unsigned long long seed = 12345) {
    return minimize_F(reduced_problem(N, s, P, kind), starts, seed);
}

/// Exhaustive grid scan over the free phases. Grid spacing 2pi/grid_points.
inline double brute_force_F(const ReducedProblem& rp, int grid_points) {
    const int m = rp.free_count();
    if (rp.N > 4) throw DimensionTooLarge("brute force scan limited to N <= 4");
    if (grid_points < 1) throw ConfigError("grid_points must be positive");
    if (m == 0) return reduced_objective(rp.embed({}), rp.kind);
    const int G = grid_points;
    const double h = 2.0 * pi / G;
    // cos of index differences, and of the last free phase against the pinned end
    Vec ctab(G), cend(G, 0.0);
    for (int j = 0; j < G; ++j) ctab[j] = std::cos(h * j);
    bool closed = rp.kind == Kind::biperiodic;
    for (int j = 0; j < G; ++j) cend[j] = closed ? std::cos(h * j + rp.Hps) : 0.0;
    auto cdiff = [&](int a, int b) { return ctab[((a - b) % G + G) % G]; };
    double best = 1e300;
    std::vector<int> idx(m, 0);
    while (true) {
        double s = ctab[(G - idx[0]) % G];
        for (int i = 0; i + 1 < m; ++i) s += cdiff(idx[i], idx[i + 1]);
        s += cend[idx[m - 1]];
        best = std::min(best, s);
        int k = m - 1;
        while (k >= 0 && ++idx[k] == G) idx[k--] = 0;
        if (k < 0) break;
    }
    return best / rp.pairs();
}

inline double brute_force_F(int N, double s, const ModelParams& P, int grid_points, Kind kind = Kind::biperiodic) {
    return brute_force_F(reduced_problem(N, s, P, kind), grid_points);
}

/// Largest gap between the grid minimum and the true minimum: the objective has curvature
/// at most 4/pairs per free phase and each phase is off by at most half a spacing.
inline double brute_force_tolerance(int N, int grid_points) {
    double half = pi / grid_points;
    return 2.0 * std::max(1, N - 1) * half * half + 1e-12;
}

enum class Optimality { optimal_even, optimal_odd, frustrated };

inline std::string to_string(Optimality o) {
    switch (o) {
        case Optimality::optimal_even: return "optimal_even";
        case Optimality::optimal_odd: return "optimal_odd";
        default: return "frustrated";
    }
}

/// Even stacks are unfrustrated at s = 2l q1, odd stacks at s = (2l+1) q1.
inline Optimality classify_optimality(int N, double s, const ModelParams& P) {
    if (N < 1) throw ConfigError("N must be >= 1");
    double t = s / q1(P);
    double l = std::round(t);
    if (std::abs(t - l) > 1e-9) return Optimality::frustrated;
    bool even_shift = std::fmod(std::abs(l), 2.0) == 0.0;
    if (N % 2 == 0 && even_shift) return Optimality::optimal_even;
    if (N % 2 == 1 && !even_shift) return Optimality::optimal_odd;
    return Optimality::frustrated;
}

struct ScanRow {
    int N;
    double s;
    double F;
    Optimality cls;
    double min_eigenvalue;  // NaN for N = 1
};

inline std::vector<ScanRow> phase_scan(const std::vector<int>& Ns, const Vec& s_values, const ModelParams& P,
                                       int starts = 32, unsigned long long seed = 12345) {
    std::vector<ScanRow> rows;
    for (int N : Ns)
        for (double s : s_values) {
            ReducedMinimum mn = minimize_F(N, s, P, Kind::biperiodic, starts, seed);
            double ev = N >= 2 ? reduced_hessian(mn.delta).min_eigenvalue : std::nan("");
            rows.push_back({N, s, mn.F, classify_optimality(N, s, P), ev});
        }
    return rows;
}

inline io::Csv phase_scan_csv(const std::vector<ScanRow>& rows) {
    io::Csv csv({"N", "s", "F", "class", "min_eigenvalue"});
    for (const auto& r : rows)
        csv.row_strings({std::to_string(r.N), io::num(r.s), io::num(r.F), to_string(r.cls),
                         std::isnan(r.min_eigenvalue) ? std::string("nan") : io::num(r.min_eigenvalue)});
    return csv;
}

}  // namespace ldl
