#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "omegalab/error.hpp"
#include "omegalab/jet.hpp"
#include "omegalab/parallel.hpp"
#include "omegalab/quadrature.hpp"

namespace omegalab {

using Complex = std::complex<long double>;

/// Highest derivative order the window evaluator supports.
inline constexpr std::size_t kWindowMaxOrder = 8;

/// Smooth window equal to 1 on [1/2, 2] and 0 outside (1/4, 4):
/// W(x) = step(4(x - 1/4)) * step((4 - x)/2), where
/// step(u) = psi(u) / (psi(u) + psi(1 - u)) and psi(u) = exp(-1/u) for u > 0.
class WindowFn {
public:
    static constexpr long double support_lo = 0.25L;
    static constexpr long double plateau_lo = 0.5L;
    static constexpr long double plateau_hi = 2.0L;
    static constexpr long double support_hi = 4.0L;

    using Jet8 = Jet<kWindowMaxOrder>;

    long double operator()(long double x) const { return value(x); }

    long double value(long double x) const {
        if (x <= support_lo || x >= support_hi) return 0;
        if (x >= plateau_lo && x <= plateau_hi) return 1;
        return step(4 * (x - support_lo)) * step((support_hi - x) / 2);
    }

    /// Taylor jet of W at x; derivative(j) gives W^{(j)}(x) for j <= 8.
    Jet8 jet(long double x) const {
        if (x <= support_lo || x >= support_hi) return Jet8{};
        if (x >= plateau_lo && x <= plateau_hi) return Jet8::constant(1);
        const Jet8 X = Jet8::variable(x);
        return step_jet(4 * (X - support_lo)) * step_jet((support_hi - X) * 0.5L);
    }

    long double derivative(long double x, std::size_t j) const {
        if (j > kWindowMaxOrder)
            throw RangeError("window derivatives are available up to order " + std::to_string(kWindowMaxOrder));
        return jet(x).derivative(j);
    }

private:
    // Below this argument psi is under 1e-304 together with its first eight
    // derivatives and is treated as zero.
    static constexpr long double kPsiCutoff = 1.0L / 700;

    static long double psi(long double u) { return u < kPsiCutoff ? 0 : std::exp(-1 / u); }

    static long double step(long double u) {
        if (u <= 0) return 0;
        if (u >= 1) return 1;
        const long double a = psi(u), b = psi(1 - u);
        return a / (a + b);
    }

    static Jet8 psi_jet(const Jet8& u) {
        if (u.value() < kPsiCutoff) return Jet8{};
        return exp(-reciprocal(u));
    }

    static Jet8 step_jet(const Jet8& u) {
        if (u.value() <= 0) return Jet8{};
        if (u.value() >= 1) return Jet8::constant(1);
        const Jet8 a = psi_jet(u), b = psi_jet(1.0L - u);
        return a / (a + b);
    }
};

inline WindowFn build_window() { return {}; }

struct MellinValue {
    Complex value;
    long double error = 0; // quadrature error estimate
    std::size_t intervals = 0;
};

struct MellinOptions {
    long double abs_tol = 1e-12L;
    std::size_t max_intervals = 200000;
};

namespace detail {

// Breakpoints in u = log x: the support and plateau ends, then a grid fine
// enough that each piece spans at most one oscillation of e^{i t u}.
inline std::vector<long double> mellin_breakpoints(long double lo, long double hi, long double t) {
    std::vector<long double> bp{std::log(0.5L), std::log(2.0L)};
    const long double period = 2 * std::numbers::pi_v<long double> / std::max(std::fabs(t), 1.0L);
    const std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / period));
    for (std::size_t i = 1; i < n; ++i) bp.push_back(lo + (hi - lo) * static_cast<long double>(i) / n);
    return bp;
}

template <typename F>
MellinValue mellin_integral(F&& integrand_u, long double lo, long double hi, long double t,
                            const MellinOptions& opt) {
    QuadratureOptions q;
    q.abs_tol = opt.abs_tol;
    q.max_intervals = opt.max_intervals;
    auto r = integrate<Complex>(integrand_u, lo, hi, mellin_breakpoints(lo, hi, t), q);
    return {r.value, r.error, r.intervals};
}

} // namespace detail

/// W^dagger(s) = integral_0^inf W(x) x^{s-1} dx, computed as
/// integral W(e^u) e^{s u} du over log(1/4) < u < log 4.
inline MellinValue mellin_transform(const WindowFn& w, Complex s, const MellinOptions& opt = {}) {
    const long double lo = std::log(WindowFn::support_lo), hi = std::log(WindowFn::support_hi);
    return detail::mellin_integral(
        [&](long double u) { return w.value(std::exp(u)) * std::exp(s * u); }, lo, hi, s.imag(), opt);
}

/// The same transform after k integrations by parts:
/// W^dagger(s) = (-1)^k / (s (s+1) ... (s+k-1)) * integral W^{(k)}(x) x^{s+k-1} dx.
inline MellinValue mellin_by_parts(const WindowFn& w, Complex s, std::size_t k, const MellinOptions& opt = {}) {
    if (k > kWindowMaxOrder) throw RangeError("by-parts order exceeds the derivative order available");
    Complex denom = 1;
    for (std::size_t i = 0; i < k; ++i) denom *= s + static_cast<long double>(i);
    if (std::abs(denom) == 0) throw DomainError("s is a pole of the by-parts representation");
    const long double lo = std::log(WindowFn::support_lo), hi = std::log(WindowFn::support_hi);
    const Complex shift = s + static_cast<long double>(k);
    auto r = detail::mellin_integral(
        [&](long double u) {
            const long double x = std::exp(u);
            return w.derivative(x, k) * std::exp(shift * u);
        },
        lo, hi, s.imag(), opt);
    const Complex factor = (k % 2 == 0 ? 1.0L : -1.0L) / denom;
    r.value *= factor;
    r.error *= std::abs(factor);
    return r;
}

struct DecayRow {
    long double t = 0;
    Complex value;
    long double magnitude = 0;
    long double error = 0;
    long double envelope = 0; // C 4^{|sigma|} exp(-c |s|^{1/3})
};

struct DecayProfile {
    long double sigma = 0;
    std::vector<DecayRow> rows;
    long double c = 0;     // fitted decay rate
    long double log_C = 0; // smallest log C putting every row under the envelope
    bool all_below_envelope = false;
};

namespace detail {

inline long double cube_root_abs(Complex s) { return std::cbrt(std::abs(s)); }

// y_i = log|W^dagger| - |sigma| log 4 against x_i = |s|^{1/3}. The slope is
// fitted to the running maximum of y from the right (the decay envelope,
// which ignores the zeros of an oscillating transform); log C is then the
// least constant with every point on or under the line.
inline void fit_envelope(DecayProfile& p, std::optional<long double> fixed_c) {
    const std::size_t n = p.rows.size();
    if (n == 0) return;
    std::vector<long double> x(n), y(n), env(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Complex s(p.sigma, p.rows[i].t);
        x[i] = cube_root_abs(s);
        y[i] = std::log(p.rows[i].magnitude) - std::fabs(p.sigma) * std::log(4.0L);
    }
    if (fixed_c) {
        p.c = *fixed_c;
    } else if (n >= 2) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
        long double running = -std::numeric_limits<long double>::infinity();
        for (std::size_t k = n; k-- > 0;) {
            running = std::max(running, y[order[k]]);
            env[order[k]] = running;
        }
        long double mx = 0, my = 0;
        for (std::size_t i = 0; i < n; ++i) {
            mx += x[i];
            my += env[i];
        }
        mx /= n;
        my /= n;
        long double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (x[i] - mx) * (env[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
        }
        p.c = sxx > 0 ? -sxy / sxx : 0;
    }
    p.log_C = -std::numeric_limits<long double>::infinity();
    for (std::size_t i = 0; i < n; ++i) p.log_C = std::max(p.log_C, y[i] + p.c * x[i]);
    p.all_below_envelope = true;
    for (std::size_t i = 0; i < n; ++i) {
        const long double log_env = p.log_C + std::fabs(p.sigma) * std::log(4.0L) - p.c * x[i];
        p.rows[i].envelope = std::exp(log_env);
        if (y[i] + p.c * x[i] > p.log_C + 1e-12L) p.all_below_envelope = false;
    }
}

} // namespace detail

/// |W^dagger(sigma + i t)| over a grid with a fitted envelope. With fixed_c
/// the rate is held and only C is fitted, which lets constants for different
/// sigma be compared.
inline DecayProfile decay_profile(const WindowFn& w, long double sigma, const std::vector<long double>& t_grid,
                                  std::optional<long double> fixed_c = std::nullopt, unsigned threads = 0,
                                  const MellinOptions& opt = {}) {
    for (long double t : t_grid)
        if (!(t > 0) || !std::isfinite(t)) throw DomainError("t grid must be finite and positive");
    DecayProfile p;
    p.sigma = sigma;
    p.rows.resize(t_grid.size());
    parallel_for(t_grid.size(), threads, [&](std::size_t i) {
        const auto m = mellin_transform(w, Complex(sigma, t_grid[i]), opt);
        p.rows[i] = {t_grid[i], m.value, std::abs(m.value), m.error, 0};
    });
    detail::fit_envelope(p, fixed_c);
    return p;
}

struct DerivativeGrowth {
    std::vector<long double> max_abs;  // max_x |W^{(j)}(x)|, index j (0 unused)
    std::vector<long double> constant; // max_abs[j] / j^{3j}
    long double C = 0;                 // max_j constant[j]
    bool non_growing = false;          // constant[j+1] <= constant[j] for 1 <= j < j_max
};

/// Grid maximization of |W^{(j)}| over the two transition regions.
inline DerivativeGrowth derivative_growth(const WindowFn& w, std::size_t j_max = kWindowMaxOrder,
                                          std::size_t points = 20000) {
    if (j_max < 1 || j_max > kWindowMaxOrder) throw RangeError("j_max must lie in [1, 8]");
    DerivativeGrowth g;
    g.max_abs.assign(j_max + 1, 0);
    g.constant.assign(j_max + 1, 0);
    auto scan = [&](long double lo, long double hi) {
        for (std::size_t i = 1; i < points; ++i) {
            const auto jet = w.jet(lo + (hi - lo) * static_cast<long double>(i) / points);
            for (std::size_t j = 1; j <= j_max; ++j) g.max_abs[j] = std::max(g.max_abs[j], std::fabs(jet.derivative(j)));
        }
    };
    scan(WindowFn::support_lo, WindowFn::plateau_lo);
    scan(WindowFn::plateau_hi, WindowFn::support_hi);
    for (std::size_t j = 1; j <= j_max; ++j) {
        const long double jl = static_cast<long double>(j);
        g.constant[j] = g.max_abs[j] / std::pow(jl, 3 * jl);
        g.C = std::max(g.C, g.constant[j]);
    }
    g.non_growing = true;
    for (std::size_t j = 1; j < j_max; ++j)
        if (g.constant[j + 1] > g.constant[j]) g.non_growing = false;
    return g;
}

} // namespace omegalab
