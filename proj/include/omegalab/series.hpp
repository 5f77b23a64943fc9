#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omegalab/error.hpp"
#include "omegalab/primality.hpp"
#include "omegalab/sieve.hpp"

// Exact rational arithmetic for alpha_t = sum_{n >= 1} omega(n) / t^n.
// Nothing in this header rounds: values are mpq_class in lowest terms, and
// decimals are produced only by outward rounding of an enclosure.

namespace omegalab {

using Rational = mpq_class;
using Integer = mpz_class;

/// Largest N accepted for exact partial sums (t^N has N log2 t bits).
inline constexpr u64 kMaxSeriesN = 10000000;

namespace detail {

inline void check_base(u64 t) {
    if (t < 2) throw DomainError("series base t must be >= 2", "t=" + std::to_string(t));
}

inline Integer power(u64 t, u64 e) {
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), t, e);
    return r;
}

inline Rational make_rational(const Integer& num, const Integer& den) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

inline std::vector<std::uint8_t> omega_values(u64 lo, u64 hi) {
    if (hi < lo) return {};
    return omega_range(FactorSieve::build(lo, hi));
}

// sum_{i < w.size()} w[i] * t^(w.size() - 1 - i), by splitting in halves so
// the cost is a few big multiplications rather than N growing ones.
inline Integer horner(const std::uint8_t* w, std::size_t len, u64 t) {
    if (len <= 64) {
        Integer acc = 0;
        for (std::size_t i = 0; i < len; ++i) {
            acc *= t;
            acc += w[i];
        }
        return acc;
    }
    const std::size_t half = len / 2;
    return horner(w, half, t) * power(t, len - half) + horner(w + half, len - half, t);
}

} // namespace detail

/// sum_{n <= N} omega(n) / t^n, exact.
inline Rational partial_sum(u64 t, u64 N) {
    detail::check_base(t);
    if (N > kMaxSeriesN) throw RangeError("partial_sum: N exceeds " + std::to_string(kMaxSeriesN));
    if (N == 0) return 0;
    const auto w = detail::omega_values(1, N);
    return detail::make_rational(detail::horner(w.data(), w.size(), t), detail::power(t, N));
}

/// Upper bound on sum_{k >= m} omega(N + k) / t^k (m >= 1), from
/// omega(n) <= floor(log2 n) = #{i >= 1 : 2^i <= n}. Swapping the sums gives
/// t/(t-1) * (A t^{-m} + sum_{i >= i0} t^{-(2^i - N)}) with A = floor(log2(N + m))
/// and 2^{i0} the least power of two above N + m; since 2^{i0+j} - N >= (j+1) e0
/// for e0 = 2^{i0} - N, the last sum is at most 1/(t^{e0} - 1).
/// When N is large, e0 is capped at 2m + 64 (a weaker but still valid bound).
inline Rational shifted_tail_bound(u64 t, u64 N, u64 m) {
    detail::check_base(t);
    if (m == 0) throw DomainError("shifted_tail_bound needs m >= 1");
    const u128 top = static_cast<u128>(N) + m;
    if (top >= (static_cast<u128>(1) << 63)) throw RangeError("N + m too large for the tail bound");
    const u64 Nm = static_cast<u64>(top);
    unsigned A = 0;
    while (A + 1 < 64 && (u64{1} << (A + 1)) <= Nm) ++A;
    const u64 e0 = (u64{1} << (A + 1)) - N;
    const u64 e = N == 0 ? e0 : std::min<u64>(e0, 2 * m + 64);
    if (e > 4 * kMaxSeriesN) throw RangeError("tail bound exponent too large");
    Rational head = detail::make_rational(Integer(A), detail::power(t, m));
    Rational geometric = detail::make_rational(Integer(1), detail::power(t, e) - 1);
    Rational r = Rational(t, t - 1) * (head + geometric);
    r.canonicalize();
    return r;
}

/// Certified bound on sum_{n > N} omega(n) / t^n; positive and strictly
/// decreasing in N.
inline Rational tail_bound(u64 t, u64 N) {
    if (N > kMaxSeriesN) throw RangeError("tail_bound: N exceeds " + std::to_string(kMaxSeriesN));
    return shifted_tail_bound(t, 0, N + 1);
}

enum class Rounding { Down, Up };

/// q rounded to `digits` decimals in the given direction.
inline std::string to_decimal(const Rational& q, unsigned digits, Rounding dir) {
    const Integer scale = detail::power(10, digits);
    Integer num = q.get_num() * scale, quot;
    if (dir == Rounding::Down)
        mpz_fdiv_q(quot.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
    else
        mpz_cdiv_q(quot.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
    const bool negative = quot < 0;
    if (negative) quot = -quot;
    std::string s = quot.get_str();
    if (s.size() <= digits) s.insert(0, digits + 1 - s.size(), '0');
    if (digits > 0) s.insert(s.size() - digits, ".");
    return negative ? "-" + s : s;
}

/// partial <= alpha_t <= partial + tail_hi.
struct SeriesEnclosure {
    u64 t = 2;
    u64 N = 0;
    Rational partial;
    Rational tail_hi;

    Rational lower() const { return partial; }
    Rational upper() const { return partial + tail_hi; }
    Rational width() const { return tail_hi; }
    bool contains(const SeriesEnclosure& inner) const {
        return lower() <= inner.lower() && inner.upper() <= upper();
    }
    std::string lower_decimal(unsigned digits = 20) const { return to_decimal(lower(), digits, Rounding::Down); }
    std::string upper_decimal(unsigned digits = 20) const { return to_decimal(upper(), digits, Rounding::Up); }
};

inline SeriesEnclosure alpha_enclosure(u64 t, u64 N) {
    return {t, N, partial_sum(t, N), tail_bound(t, N)};
}

// ---------------------------------------------------------------------------
// T(N) = b sum_{k >= 1} omega(N + k) / t^k and its split at K and L.
// ---------------------------------------------------------------------------

struct S1Identity {
    Rational rhs;      // b sum_{k<=K} omega(k)/t^k + b sum_{k<=K} 1/t^k
    bool holds = false; // S1 == rhs exactly
};

struct TDecomposition {
    u64 t = 2, b = 1, n0 = 0, Q = 1;
    u64 N = 0; // n0 * Q
    unsigned K = 0, L = 0;
    u64 M = 0;
    Rational S1;           // b sum_{k <= K}
    Rational S2;           // b sum_{K < k <= L}
    Rational S3_truncated; // b sum_{L < k <= M}
    Rational S3_tail;      // b * bound on sum_{k > M}
    Rational direct;       // b sum_{k <= M} in one pass, for cross-checking
    bool forms_prime = false;
    std::optional<S1Identity> s1_identity; // present when every n0 Q/k + 1 is prime

    Rational lower() const { return S1 + S2 + S3_truncated; }
    Rational upper() const { return lower() + S3_tail; }
    bool direct_matches() const { return direct == lower(); }
};

namespace detail {

// omega(N + k) for k = 1..M.
inline std::vector<std::uint8_t> shifted_omegas(u64 N, u64 M) {
    if (M == 0) return {};
    if (M > kMaxSeriesN) throw RangeError("too many terms requested");
    const u128 hi = static_cast<u128>(N) + M;
    if (hi > kMaxSieveHi) throw RangeError("N + M exceeds the sieve range");
    return omega_values(N + 1, static_cast<u64>(hi));
}

// sum_{k = from..to} w[k - 1] / t^k, exact.
inline Rational weighted_sum(const std::vector<std::uint8_t>& w, u64 t, u64 from, u64 to) {
    if (to < from) return 0;
    const Integer num = horner(w.data() + (from - 1), static_cast<std::size_t>(to - from + 1), t);
    return make_rational(num, power(t, to));
}

} // namespace detail

inline TDecomposition decompose_T(u64 t, u64 b, u64 n0, unsigned K, u64 Q, unsigned L, u64 M) {
    detail::check_base(t);
    if (b == 0) throw DomainError("decompose_T needs b >= 1");
    if (K == 0 || Q == 0) throw PreconditionError("decompose_T needs K >= 1 and Q >= 1");
    if (!(K < L && L <= M))
        throw PreconditionError("decompose_T needs K < L <= M",
                                "K=" + std::to_string(K) + " L=" + std::to_string(L) + " M=" + std::to_string(M));
    for (u64 k = 1; k <= K; ++k)
        if (Q % (k * k) != 0)
            throw PreconditionError("k^2 must divide Q for every k <= K",
                                    "k=" + std::to_string(k) + " Q=" + std::to_string(Q));
    const u128 N128 = static_cast<u128>(n0) * Q;
    if (N128 + M > kMaxSieveHi) throw RangeError("n0*Q + M exceeds the sieve range");

    TDecomposition d;
    d.t = t;
    d.b = b;
    d.n0 = n0;
    d.Q = Q;
    d.N = static_cast<u64>(N128);
    d.K = K;
    d.L = L;
    d.M = M;
    const auto w = detail::shifted_omegas(d.N, M);
    const Rational bq(b);
    d.S1 = bq * detail::weighted_sum(w, t, 1, K);
    d.S2 = bq * detail::weighted_sum(w, t, K + 1, L);
    d.S3_truncated = bq * detail::weighted_sum(w, t, L + 1, M);
    d.S3_tail = bq * shifted_tail_bound(t, d.N, M + 1);
    for (Rational* q : {&d.S1, &d.S2, &d.S3_truncated, &d.S3_tail}) q->canonicalize();

    Rational direct = 0;
    for (u64 k = 1; k <= M; ++k) direct += Rational(w[k - 1]) / detail::power(t, k);
    d.direct = bq * direct;
    d.direct.canonicalize();

    d.forms_prime = true;
    for (u64 k = 1; k <= K && d.forms_prime; ++k) d.forms_prime = is_prime(d.N / k + 1);
    if (d.forms_prime) {
        S1Identity id;
        Rational rhs = 0;
        for (u64 k = 1; k <= K; ++k) rhs += Rational(omega(k) + 1) / detail::power(t, k);
        id.rhs = bq * rhs;
        id.rhs.canonicalize();
        id.holds = id.rhs == d.S1;
        d.s1_identity = id;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Integrality probe: if alpha_t were a/b then
// T(N) = b t^N (alpha_t - partial(N)) = a t^N - b t^N partial(N)
// would be an integer. The probe evaluates that integer and the certified
// enclosure of T(N) computed from omega directly.
// ---------------------------------------------------------------------------

struct IntegralityProbe {
    u64 t = 2, a = 0, b = 1, N = 0, M = 0;
    Integer hypothetical;   // a t^N - b t^N partial(N)
    Rational T_lower;       // b sum_{k <= M} omega(N + k)/t^k
    Rational T_upper;       // T_lower + b * tail bound
    bool consistent = false; // T_lower <= hypothetical <= T_upper
    bool enclosure_contains_integer = false;
};

inline IntegralityProbe integrality_probe(u64 t, u64 a, u64 b, u64 N, u64 M = 64) {
    detail::check_base(t);
    if (b == 0) throw DomainError("integrality probe needs b >= 1");
    if (M == 0) throw DomainError("integrality probe needs M >= 1");
    IntegralityProbe p{t, a, b, N, M, 0, 0, 0, false, false};
    const Integer tN = detail::power(t, N);
    const Rational scaled = partial_sum(t, N) * tN; // an integer
    p.hypothetical = Integer(a) * tN - Integer(b) * scaled.get_num();
    const auto w = detail::shifted_omegas(N, M);
    p.T_lower = Rational(b) * detail::weighted_sum(w, t, 1, M);
    p.T_lower.canonicalize();
    p.T_upper = p.T_lower + Rational(b) * shifted_tail_bound(t, N, M + 1);
    p.T_upper.canonicalize();
    const Rational h(p.hypothetical);
    p.consistent = p.T_lower <= h && h <= p.T_upper;
    Integer ceil_lo;
    mpz_cdiv_q(ceil_lo.get_mpz_t(), p.T_lower.get_num_mpz_t(), p.T_lower.get_den_mpz_t());
    p.enclosure_contains_integer = Rational(ceil_lo) <= p.T_upper;
    return p;
}

} // namespace omegalab
