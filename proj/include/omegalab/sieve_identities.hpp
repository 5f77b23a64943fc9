#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "omegalab/compensated.hpp"
#include "omegalab/error.hpp"
#include "omegalab/primality.hpp"
#include "omegalab/series.hpp"
#include "omegalab/sieve.hpp"

namespace omegalab {

// ---------------------------------------------------------------------------
// Brun truncation of sum_{d | m} mu(d)
// ---------------------------------------------------------------------------

/// sum_{d | m, omega(d) <= V} mu(d) = sum_{j <= V} (-1)^j C(omega(m), j) for squarefree m.
inline std::int64_t brun_truncated_divisor_sum(u64 m, unsigned V) {
    if (m == 0) throw DomainError("brun_truncated_divisor_sum needs m >= 1");
    const Factorization f = factorize(m);
    if (!f.squarefree()) throw DomainError("m must be squarefree", "m=" + std::to_string(m));
    const unsigned r = f.omega();
    std::int64_t sum = 0, binom = 1;
    for (unsigned j = 0; j <= std::min(V, r); ++j) {
        sum += (j % 2 == 0 ? 1 : -1) * binom;
        binom = binom * (r - j) / (j + 1);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Prime intervals
// ---------------------------------------------------------------------------

/// The primes lo < p <= hi not in `excluded`.
struct PrimeInterval {
    long double lo = 0;
    long double hi = 0;
    std::set<u64> excluded;

    static constexpr long double kMaxHi = 4294967296.0L; // 2^32

    void validate() const {
        if (!(lo < hi)) throw DomainError("prime interval needs lo < hi");
        if (!(hi <= kMaxHi)) throw RangeError("prime interval upper end exceeds 2^32");
    }

    std::vector<u64> primes() const {
        validate();
        const u64 first = lo < 0 ? 1 : static_cast<u64>(std::floor(lo)) + 1;
        const u64 last = static_cast<u64>(std::floor(hi));
        std::vector<u64> out;
        if (last < first) return out;
        for_each_prime(first, last, [&](u64 p) {
            if (!excluded.count(p)) out.push_back(p);
        });
        return out;
    }
};

namespace detail {

// Product of a range of integers by a balanced tree.
inline Integer product_tree(const std::vector<Integer>& v, std::size_t lo, std::size_t hi) {
    if (hi <= lo) return 1;
    if (hi - lo == 1) return v[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return product_tree(v, lo, mid) * product_tree(v, mid, hi);
}

inline void check_sieve_primes(unsigned K, const std::vector<u64>& primes) {
    for (u64 p : primes) {
        if (p == u64{K} + 1)
            throw DomainError("factor 1 - K/(p-1) vanishes at p = K + 1", "p=" + std::to_string(p));
        if (p < u64{K} + 1)
            throw PreconditionError("interval primes must exceed K + 1", "p=" + std::to_string(p));
    }
}

} // namespace detail

/// Exhaustive sides are only computed for intervals with at most this many primes.
inline constexpr std::size_t kBruteForcePrimes = 12;

struct CompleteSieveProduct {
    std::size_t prime_count = 0;
    Rational product;                   // prod_p (1 - K/(p-1))
    std::optional<Rational> divisor_sum; // sum_{d | P} mu(d) K^omega(d) / phi(d), when brute-checkable
    bool equal = false;                  // divisor_sum == product (false when not computed)
};

inline CompleteSieveProduct complete_sieve_product(unsigned K, const PrimeInterval& interval) {
    const auto primes = interval.primes();
    detail::check_sieve_primes(K, primes);
    CompleteSieveProduct r;
    r.prime_count = primes.size();

    std::vector<Integer> num, den;
    for (u64 p : primes) {
        num.emplace_back(Integer(p - 1 - K));
        den.emplace_back(Integer(p - 1));
    }
    r.product = Rational(detail::product_tree(num, 0, num.size()), detail::product_tree(den, 0, den.size()));
    r.product.canonicalize();

    if (primes.size() <= kBruteForcePrimes) {
        Rational sum = 0;
        const std::size_t subsets = std::size_t{1} << primes.size();
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            Integer phi = 1, Kpow = 1;
            int sign = 1;
            for (std::size_t i = 0; i < primes.size(); ++i)
                if (mask >> i & 1) {
                    phi *= primes[i] - 1;
                    Kpow *= K;
                    sign = -sign;
                }
            sum += detail::make_rational(sign * Kpow, phi);
        }
        sum.canonicalize();
        r.divisor_sum = sum;
        r.equal = sum == r.product;
    }
    return r;
}

struct TruncationBound {
    std::size_t prime_count = 0;
    unsigned V = 0;
    long double bound = 0;                // (sum_p K/(p-1))^{V+1} / (V+1)!
    std::optional<Rational> bound_exact;  // same, exact, for intervals of at most kExactPrimes primes
    std::optional<Rational> true_dropped; // sum_{omega(d) = V+1} K^omega(d)/phi(d), when brute-checkable
    bool dominates = true;                // bound >= true_dropped (vacuous when not computed)
};

inline constexpr std::size_t kExactPrimes = 2000;

inline TruncationBound truncation_error_bound(unsigned K, const PrimeInterval& interval, unsigned V) {
    const auto primes = interval.primes();
    TruncationBound r;
    r.prime_count = primes.size();
    r.V = V;

    Rational factorial = 1;
    for (unsigned i = 2; i <= V + 1; ++i) factorial *= i;

    if (primes.size() <= kExactPrimes) {
        Rational s = 0;
        for (u64 p : primes) s += detail::make_rational(Integer(K), Integer(p - 1));
        s.canonicalize();
        Rational power = 1;
        for (unsigned i = 0; i <= V; ++i) power *= s;
        r.bound_exact = power / factorial;
        r.bound_exact->canonicalize();
        r.bound = static_cast<long double>(r.bound_exact->get_d());
    } else {
        CompensatedSum s;
        for (u64 p : primes) s.add(static_cast<long double>(K) / static_cast<long double>(p - 1));
        r.bound = std::pow(s.value(), static_cast<long double>(V + 1)) / static_cast<long double>(factorial.get_d());
    }

    if (primes.size() <= kBruteForcePrimes) {
        Rational dropped = 0;
        const std::size_t subsets = std::size_t{1} << primes.size();
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            if (static_cast<unsigned>(__builtin_popcountll(mask)) != V + 1) continue;
            Integer phi = 1, Kpow = 1;
            for (std::size_t i = 0; i < primes.size(); ++i)
                if (mask >> i & 1) {
                    phi *= primes[i] - 1;
                    Kpow *= K;
                }
            dropped += detail::make_rational(Kpow, phi);
        }
        dropped.canonicalize();
        r.true_dropped = dropped;
        r.dominates = *r.bound_exact >= dropped;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Mean values of lambda^omega(n)
// ---------------------------------------------------------------------------

/// 1_{w <= theta} <= lambda^{w - theta}, the inequality behind the lambda-trick.
inline bool lambda_trick_bound_holds(unsigned w, long double theta, long double lambda) {
    const long double indicator = static_cast<long double>(w) <= theta ? 1 : 0;
    return indicator <= std::pow(lambda, static_cast<long double>(w) - theta);
}

struct LambdaMean {
    u64 n_max = 0;
    long double lambda = 0;
    std::optional<Rational> lambda_exact; // set for rational lambda
    std::optional<Rational> exact;        // sum_{n <= n_max} lambda^omega(n), for rational lambda
    long double value = 0;                // the same sum in long double
    long double error_bound = 0;          // on value; 0 when it is exact.get_d() rounded once
    std::vector<u64> histogram;           // #{n <= n_max : omega(n) = k}
    bool ratio_defined = false;           // n_max >= 2
    long double normalizer = 0;           // n_max / (log n_max)^{1 - lambda}
    long double ratio = 0;                // value / normalizer
};

namespace detail {

inline std::vector<u64> omega_histogram(u64 n_max, unsigned threads) {
    if (n_max == 0) return {};
    SieveOptions opt;
    opt.threads = threads;
    auto h = omega_summary(1, n_max, opt).histogram;
    while (!h.empty() && h.back() == 0) h.pop_back();
    return h;
}

inline void finish_mean(LambdaMean& m) {
    if (m.n_max < 2) return;
    const long double N = static_cast<long double>(m.n_max);
    m.normalizer = N / std::pow(std::log(N), 1 - m.lambda);
    m.ratio = m.value / m.normalizer;
    m.ratio_defined = true;
}

} // namespace detail

/// Exact mean for rational lambda = num/den in (0, 1].
inline LambdaMean lambda_omega_mean(const Rational& lambda, u64 n_max, unsigned threads = 0) {
    if (!(lambda > 0 && lambda <= 1)) throw DomainError("lambda must lie in (0, 1]");
    LambdaMean m;
    m.n_max = n_max;
    m.lambda_exact = lambda;
    m.lambda = static_cast<long double>(lambda.get_d());
    m.histogram = detail::omega_histogram(n_max, threads);
    Rational sum = 0, power = 1;
    for (u64 count : m.histogram) {
        sum += Rational(Integer(count)) * power;
        power *= lambda;
    }
    sum.canonicalize();
    m.exact = sum;
    // get_d truncates; one extra ulp covers the conversion.
    m.value = static_cast<long double>(sum.get_d());
    m.error_bound = std::fabs(m.value) * std::numeric_limits<double>::epsilon();
    detail::finish_mean(m);
    return m;
}

/// Floating-point mean for real lambda in (0, 1], with a rounding bound.
inline LambdaMean lambda_omega_mean(long double lambda, u64 n_max, unsigned threads = 0) {
    if (!(lambda > 0 && lambda <= 1)) throw DomainError("lambda must lie in (0, 1]");
    LambdaMean m;
    m.n_max = n_max;
    m.lambda = lambda;
    m.histogram = detail::omega_histogram(n_max, threads);
    constexpr long double u = std::numeric_limits<long double>::epsilon() / 2;
    CompensatedSum sum;
    long double power = 1, term_rounding = 0;
    for (std::size_t k = 0; k < m.histogram.size(); ++k) {
        // lambda^k by k multiplications, then one product with an exact count.
        const long double term = static_cast<long double>(m.histogram[k]) * power;
        sum.add(term);
        term_rounding += term * (static_cast<long double>(k) + 1) * u * 1.01L;
        power *= lambda;
    }
    m.value = sum.value();
    m.error_bound = term_rounding + sum.rounding_bound();
    detail::finish_mean(m);
    return m;
}

} // namespace omegalab
