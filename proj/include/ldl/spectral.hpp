#pragma once
// Periodic 1D spectral helpers on a uniform grid of M points over a period L.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace ldl {

using cplx = std::complex<double>;
using Vec = std::vector<double>;
using CVec = std::vector<cplx>;

namespace spectral {

inline Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}

inline CVec forward(const Vec& v) {
    CVec out;
    engine().fwd(out, v);
    return out;
}

inline Vec inverse(const CVec& c) {
    Vec out;
    engine().inv(out, c);
    return out;
}

inline CVec forward_c(const CVec& v) {
    CVec out;
    engine().fwd(out, v);
    return out;
}

inline CVec inverse_c(const CVec& c) {
    CVec out;
    engine().inv(out, c);
    return out;
}

/// Uniform periodic grid with precomputed wavenumbers. The Nyquist mode
/// (index M/2) is treated as non-differentiable: derivatives zero it.
class Periodic {
public:
    Periodic() = default;
    Periodic(int M, double L) : M_(M), L_(L), k_(M) {
        if (M < 2 || M % 2 != 0) throw std::invalid_argument("grid size must be even and >= 2");
        for (int i = 0; i < M; ++i) {
            int a = i <= M / 2 ? i : i - M;
            k_[i] = 2.0 * std::numbers::pi * a / L;
        }
    }

    int size() const { return M_; }
    double period() const { return L_; }
    double spacing() const { return L_ / M_; }
    int nyquist() const { return M_ / 2; }
    double k(int i) const { return k_[i]; }
    double x(int i) const { return L_ * i / M_; }

    Vec grid() const {
        Vec out(M_);
        for (int i = 0; i < M_; ++i) out[i] = x(i);
        return out;
    }

    // derivative multiplier, zero at Nyquist
    cplx d_symbol(int i) const { return i == M_ / 2 ? cplx(0.0) : cplx(0.0, k_[i]); }
    double d2_symbol(int i) const { return i == M_ / 2 ? 0.0 : -k_[i] * k_[i]; }
    // multiplier of v(x) -> v(x + a); real cosine at Nyquist keeps real data real
    cplx shift_symbol(int i, double a) const {
        if (i == M_ / 2) return cplx(std::cos(k_[i] * a), 0.0);
        return std::polar(1.0, k_[i] * a);
    }

    Vec deriv(const Vec& v) const { return apply(v, [&](int i) { return d_symbol(i); }); }
    Vec deriv2(const Vec& v) const { return apply(v, [&](int i) { return cplx(d2_symbol(i)); }); }
    Vec shift(const Vec& v, double a) const {
        if (a == 0.0) return v;
        return apply(v, [&](int i) { return shift_symbol(i, a); });
    }
    Vec drop_nyquist(const Vec& v) const {
        return apply(v, [&](int i) { return cplx(i == M_ / 2 ? 0.0 : 1.0); });
    }

    /// Mean-free antiderivative of the mean-free part of v (Nyquist dropped).
    Vec antideriv(const Vec& v) const {
        return apply(v, [&](int i) {
            if (i == 0 || i == M_ / 2) return cplx(0.0);
            return cplx(1.0) / cplx(0.0, k_[i]);
        });
    }

    static double mean(const Vec& v) {
        double s = 0.0;
        for (double a : v) s += a;
        return s / static_cast<double>(v.size());
    }

    /// Trigonometric interpolant evaluated at an arbitrary point.
    double eval(const Vec& v, double xp) const {
        CVec c = forward(v);
        double acc = c[0].real();
        for (int i = 1; i < M_ / 2; ++i) acc += 2.0 * (c[i] * std::polar(1.0, k_[i] * xp)).real();
        acc += c[M_ / 2].real() * std::cos(k_[M_ / 2] * xp);
        return acc / M_;
    }

    template <class F>
    Vec apply(const Vec& v, F&& symbol) const {
        CVec c = forward(v);
        for (int i = 0; i < M_; ++i) c[i] *= symbol(i);
        return inverse(c);
    }

private:
    int M_ = 0;
    double L_ = 1.0;
    Vec k_;
};

}  // namespace spectral
}  // namespace ldl
