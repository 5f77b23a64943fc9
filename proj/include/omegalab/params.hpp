#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "omegalab/error.hpp"
#include "omegalab/linear_forms.hpp"
#include "omegalab/primality.hpp"

namespace omegalab {

using BigFloat = boost::multiprecision::cpp_bin_float_50;

/// The working scale x, stored as log x in 50-digit binary floating point so
/// that x = 10^300 and beyond are representable and floors of iterated logs
/// are not at the mercy of double rounding.
class Scale {
public:
    static Scale from_value(long double x) {
        if (!(x > 1)) throw DomainError("scale x must exceed 1", "x=" + std::to_string(static_cast<double>(x)));
        return Scale(boost::multiprecision::log(BigFloat(x)), std::to_string(static_cast<double>(x)));
    }

    /// x = 10^exponent, with log x = exponent * log 10 evaluated in 50 digits.
    static Scale power_of_ten(long double exponent) {
        if (!(exponent > 0)) throw DomainError("x = 10^e needs e > 0");
        return Scale(BigFloat(exponent) * boost::multiprecision::log(BigFloat(10)),
                     "1e" + std::to_string(static_cast<double>(exponent)));
    }

    const BigFloat& log_x() const { return log_x_; }
    BigFloat loglog_x() const { return boost::multiprecision::log(log_x_); }
    BigFloat logloglog_x() const { return boost::multiprecision::log(loglog_x()); }
    long double log10_x() const { return static_cast<long double>(log_x_ / boost::multiprecision::log(BigFloat(10))); }
    const std::string& label() const { return label_; }

private:
    Scale(BigFloat log_x, std::string label) : log_x_(std::move(log_x)), label_(std::move(label)) {}
    BigFloat log_x_;
    std::string label_;
};

/// Q = (log log x)^E; the sandwich 10 - eps <= E <= 20 + eps is asymptotic,
/// so for small x it is reported rather than enforced.
struct QSizeCheck {
    long double exponent = 0; // log Q / log log log x
    long double drift = 0;    // max(0, 10 - E, E - 20)
    bool within = false;      // 10 <= E <= 20
    bool advisory = true;     // x < 10^50: o(1) terms dominate
};

struct ParamSet {
    std::string x_label;
    long double log10_x = 0;
    unsigned K = 0;
    unsigned L = 0;
    u64 Q = 0;
    u64 g = 0;      // gcd(K + 1, Q)
    u64 Qprime = 0; // Q / g
    u64 Kprime = 0; // (K + 1) / g
    long double log_X = 0; // X = x^{1/(log log x)^3}
    long double X = 0;
    u64 V = 0;          // 2 floor((log log x)^2)
    u64 B_excluded = 1; // excluded prime for the sieve; 1 = none
    QSizeCheck q_size;

    /// k^2 | Q for every 1 <= k <= K.
    bool square_divisibility() const {
        for (u64 k = 1; k <= K; ++k)
            if (Q % (k * k) != 0) return false;
        return true;
    }
    bool coprime_shift() const { return std::gcd(Kprime, Qprime) == 1; }
};

namespace detail {

inline unsigned exact_floor(const BigFloat& v, const char* what) {
    const BigFloat f = boost::multiprecision::floor(v);
    if (v - f < BigFloat("1e-40") || (f + 1) - v < BigFloat("1e-40"))
        throw PrecisionError(std::string(what) + " lies within 1e-40 of an integer; floor is ambiguous");
    return static_cast<unsigned>(f);
}

inline u64 checked_mul(u64 a, u64 b, const char* what) {
    u128 r = static_cast<u128>(a) * b;
    if (r > std::numeric_limits<u64>::max()) throw RangeError(std::string(what) + " exceeds 64 bits");
    return static_cast<u64>(r);
}

} // namespace detail

/// Q = prod_{p <= K} p^{2 e_p} with e_p = ceil(log K / log p), the least e
/// with p^e >= K (computed exactly, no logarithms).
inline u64 modulus_Q(unsigned K) {
    u64 Q = 1;
    for (u64 p : primes_up_to(K)) {
        u64 pe = 1;
        unsigned e = 0;
        while (pe < K) {
            pe *= p;
            ++e;
        }
        for (unsigned i = 0; i < 2 * e; ++i) Q = detail::checked_mul(Q, p, "Q");
    }
    return Q;
}

/// Minimum x with K = floor(5 log log log x) >= 1, i.e. exp(exp(exp(1/5))).
inline long double min_scale() { return std::exp(std::exp(std::exp(0.2L))); }

inline ParamSet derive_params(const Scale& x, u64 B_excluded = 1) {
    using boost::multiprecision::floor;
    const BigFloat e = boost::multiprecision::exp(BigFloat(1));
    if (x.log_x() <= e || x.logloglog_x() * 5 < 1)
        throw DomainError("x too small: need x >= exp(exp(exp(1/5))) ~ " +
                              std::to_string(static_cast<double>(min_scale())) + " so that K >= 1",
                          "x=" + x.label());
    if (B_excluded == 0) throw DomainError("excluded prime B must be >= 1 (1 = none)");
    if (B_excluded > 1 && !is_prime(B_excluded)) throw DomainError("excluded prime B must be 1 or a prime");

    const BigFloat ll = x.loglog_x();
    const BigFloat lll = x.logloglog_x();

    ParamSet ps;
    ps.x_label = x.label();
    ps.log10_x = x.log10_x();
    ps.K = detail::exact_floor(5 * lll, "5 log log log x");
    ps.L = detail::exact_floor(2 * ll, "2 log log x");
    ps.Q = modulus_Q(ps.K);
    ps.g = std::gcd<u64>(ps.K + 1, ps.Q);
    ps.Qprime = ps.Q / ps.g;
    ps.Kprime = (ps.K + 1) / ps.g;
    const BigFloat log_X = x.log_x() / (ll * ll * ll);
    ps.log_X = static_cast<long double>(log_X);
    ps.X = static_cast<long double>(boost::multiprecision::exp(log_X));
    ps.V = 2 * static_cast<u64>(detail::exact_floor(ll * ll, "(log log x)^2"));
    ps.B_excluded = B_excluded;

    const long double E = std::log(static_cast<long double>(ps.Q)) / static_cast<long double>(lll);
    ps.q_size.exponent = E;
    ps.q_size.drift = std::max({0.0L, 10 - E, E - 20});
    ps.q_size.within = E >= 10 && E <= 20;
    ps.q_size.advisory = ps.log10_x < 50;
    return ps;
}

/// The linear forms n*Q/k + 1, k = 1..K.
inline LinearFormSystem divisor_shift_forms(u64 Q, unsigned K) {
    std::vector<LinearForm> fs;
    for (u64 k = 1; k <= K; ++k) {
        if (Q % k != 0) throw PreconditionError("Q/k must be an integer for k <= K", "k=" + std::to_string(k));
        fs.push_back({Q / k, 1});
    }
    return LinearFormSystem(std::move(fs));
}

// ---------------------------------------------------------------------------
// The specific singular series prod_{p<=K}(1-1/p)^{-K} prod_{p>K}(1-K/p)(1-1/p)^{-K}
// ---------------------------------------------------------------------------

struct ProductPiece {
    long double log_value = 0;
    long double error_bound = 0; // on log_value
    long double lower_log() const { return log_value - error_bound; }
    long double value() const { return std::exp(log_value); }
};

struct SplitSingularSeries {
    unsigned K = 0;
    SingularSeriesValue total;
    ProductPiece small;  // p <= K; at least 1
    ProductPiece middle; // K < p <= 2K; at least K^{-K}
    ProductPiece large;  // p > 2K, including the certified tail; at least e^{-K}

    // Lower-bound chain, each checked against the certified lower end.
    bool small_at_least_one() const { return small.lower_log() >= 0; }
    bool middle_at_least_K_pow_minus_K() const {
        return middle.lower_log() >= -static_cast<long double>(K) * std::log(static_cast<long double>(K));
    }
    bool large_at_least_exp_minus_K() const { return large.lower_log() >= -static_cast<long double>(K); }
    bool total_at_least_K_pow_minus_2K() const {
        return total.log_value - total.error_bound >=
               -2 * static_cast<long double>(K) * std::log(static_cast<long double>(K));
    }
};

inline SplitSingularSeries paper_singular_series(unsigned K, u64 truncation_prime, unsigned threads = 0) {
    if (K == 0) throw DomainError("paper_singular_series needs K >= 1");
    const u64 need = 2 * u64{K} * K;
    if (truncation_prime < need)
        throw PreconditionError("truncation_prime must be at least 2K^2 = " + std::to_string(need),
                                "required_minimum=" + std::to_string(need));
    auto omega_of = [K](u64 p) -> u64 { return p <= K ? 0 : K; };
    auto piece = [&](u64 lo, u64 hi, bool with_tail) {
        long double rounding = 0;
        auto logs = detail::log_euler_product(lo, hi, K, threads, omega_of, rounding);
        ProductPiece pc;
        pc.log_value = logs.value();
        pc.error_bound = rounding + logs.rounding_bound() + (with_tail ? euler_tail_bound(K, hi) : 0);
        return std::pair{pc, std::pair{logs, rounding}};
    };

    SplitSingularSeries out;
    out.K = K;
    auto [small, small_raw] = piece(2, K, false);
    auto [middle, middle_raw] = piece(K + 1, 2 * u64{K}, false);
    auto [large, large_raw] = piece(2 * u64{K} + 1, truncation_prime, true);
    out.small = small;
    out.middle = middle;
    out.large = large;

    CompensatedSum all;
    all.add(small_raw.first);
    all.add(middle_raw.first);
    all.add(large_raw.first);
    out.total = detail::finish_singular_series(all, small_raw.second + middle_raw.second + large_raw.second, K,
                                               truncation_prime);
    return out;
}

// ---------------------------------------------------------------------------
// Exponent optimization for the lambda-trick
// ---------------------------------------------------------------------------

/// f(lambda) = lambda + theta log(1/lambda); the saving exponent is 1 - f.
inline long double exponent_objective(long double lambda, long double theta = 0.1L) {
    return lambda + theta * std::log(1 / lambda);
}

struct ExponentOptimum {
    long double lambda_star = 0;
    long double c0 = 0; // 1 - f(lambda_star)
    long double f_min = 0;
    unsigned iterations = 0;
};

/// Golden-section minimization of exponent_objective over (0, 1). f is
/// strictly convex there, so the bracket always contains the minimizer.
inline ExponentOptimum exponent_optimum(long double theta = 0.1L) {
    const long double invphi = (std::sqrt(5.0L) - 1) / 2;
    long double a = 1e-12L, b = 1;
    long double c = b - invphi * (b - a), d = a + invphi * (b - a);
    long double fc = exponent_objective(c, theta), fd = exponent_objective(d, theta);
    ExponentOptimum r;
    while (b - a > 1e-15L) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = exponent_objective(c, theta);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = exponent_objective(d, theta);
        }
        ++r.iterations;
    }
    r.lambda_star = (a + b) / 2;
    r.f_min = exponent_objective(r.lambda_star, theta);
    r.c0 = 1 - r.f_min;
    return r;
}

} // namespace omegalab
