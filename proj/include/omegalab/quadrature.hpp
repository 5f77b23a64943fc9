#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <string>
#include <vector>

#include "omegalab/error.hpp"

namespace omegalab {

struct QuadratureOptions {
    long double abs_tol = 1e-13L;
    long double rel_tol = 0;          // stop when error <= max(abs_tol, rel_tol * |value|)
    std::size_t max_intervals = 20000; // refinement limit before PrecisionError
};

template <typename Value>
struct QuadratureResult {
    Value value{};
    long double error = 0; // estimated absolute error (sum of |K15 - G7| per piece)
    std::size_t intervals = 0;
};

namespace detail {

// 15-point Kronrod nodes on [-1, 1] (nonnegative half) and weights, with the
// embedded 7-point Gauss weights at the odd-indexed nodes.
inline constexpr std::array<long double, 8> kKronrodNodes{
    0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
    0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
    0.586087235467691130294144845693013L, 0.405845151377397166906606412076961L,
    0.207784955007898467600689403773245L, 0.000000000000000000000000000000000L};
inline constexpr std::array<long double, 8> kKronrodWeights{
    0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
    0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
    0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
    0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
inline constexpr std::array<long double, 4> kGaussWeights{
    0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
    0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};

inline long double magnitude(long double v) { return std::fabs(v); }
inline long double magnitude(const std::complex<long double>& v) { return std::abs(v); }

template <typename Value, typename F>
std::pair<Value, long double> gauss_kronrod_15(F& f, long double a, long double b) {
    const long double c = (a + b) / 2, h = (b - a) / 2;
    const Value fc = f(c);
    Value kronrod = fc * kKronrodWeights[7];
    Value gauss = fc * kGaussWeights[3];
    for (std::size_t i = 0; i < 7; ++i) {
        const long double dx = h * kKronrodNodes[i];
        const Value pair = f(c - dx) + f(c + dx);
        kronrod += pair * kKronrodWeights[i];
        if (i % 2 == 1) gauss += pair * kGaussWeights[i / 2];
    }
    kronrod *= h;
    gauss *= h;
    return {kronrod, magnitude(kronrod - gauss)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature over [a, b], split first
/// at the given breakpoints. Bisects the piece with the largest error
/// estimate until the total estimate meets the tolerance.
template <typename Value, typename F>
QuadratureResult<Value> integrate(F&& f, long double a, long double b, std::vector<long double> breakpoints = {},
                                  const QuadratureOptions& opt = {}) {
    struct Piece {
        long double a, b;
        Value value;
        long double error;
        bool operator<(const Piece& o) const { return error < o.error; }
    };
    breakpoints.push_back(a);
    breakpoints.push_back(b);
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

    std::priority_queue<Piece> heap;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const long double lo = breakpoints[i], hi = breakpoints[i + 1];
        if (lo < a || hi > b) continue;
        auto [v, e] = detail::gauss_kronrod_15<Value>(f, lo, hi);
        heap.push({lo, hi, v, e});
    }

    auto totals = [&] {
        Value v{};
        long double e = 0;
        auto copy = heap;
        while (!copy.empty()) {
            v += copy.top().value;
            e += copy.top().error;
            copy.pop();
        }
        return std::pair{v, e};
    };

    Value value{};
    long double error = 0;
    for (auto t = totals();; t = totals()) {
        value = t.first;
        error = t.second;
        if (error <= std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(value))) break;
        if (heap.size() >= opt.max_intervals)
            throw PrecisionError("quadrature did not reach tolerance within " + std::to_string(opt.max_intervals) +
                                     " intervals",
                                 "error_estimate=" + std::to_string(static_cast<double>(error)));
        // Bisect the worst pieces in one batch to keep the bookkeeping cheap.
        const std::size_t batch = std::max<std::size_t>(1, heap.size() / 8);
        for (std::size_t i = 0; i < batch && !heap.empty(); ++i) {
            Piece worst = heap.top();
            heap.pop();
            const long double mid = (worst.a + worst.b) / 2;
            auto [v1, e1] = detail::gauss_kronrod_15<Value>(f, worst.a, mid);
            auto [v2, e2] = detail::gauss_kronrod_15<Value>(f, mid, worst.b);
            heap.push({worst.a, mid, v1, e1});
            heap.push({mid, worst.b, v2, e2});
        }
    }
    // Sum in left-to-right order so results do not depend on heap layout.
    std::vector<Piece> pieces;
    while (!heap.empty()) {
        pieces.push_back(heap.top());
        heap.pop();
    }
    std::sort(pieces.begin(), pieces.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });
    QuadratureResult<Value> r;
    for (const auto& p : pieces) {
        r.value += p.value;
        r.error += p.error;
    }
    r.intervals = pieces.size();
    return r;
}

} // namespace omegalab
