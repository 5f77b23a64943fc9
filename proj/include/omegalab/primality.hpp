#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "omegalab/error.hpp"

namespace omegalab {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

struct PrimePower {
    u64 prime = 0;
    unsigned exponent = 0;

    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// n = prod prime^exponent with strictly increasing primes. n = 1 has no factors.
struct Factorization {
    u64 n = 1;
    std::vector<PrimePower> factors;

    unsigned omega() const { return static_cast<unsigned>(factors.size()); }

    u64 tau() const {
        u64 t = 1;
        for (const auto& f : factors) t *= f.exponent + 1;
        return t;
    }

    u64 phi() const {
        u64 r = n;
        for (const auto& f : factors) r = r / f.prime * (f.prime - 1);
        return r;
    }

    bool squarefree() const {
        return std::all_of(factors.begin(), factors.end(),
                           [](const PrimePower& f) { return f.exponent == 1; });
    }
};

inline u64 mul_mod(u64 a, u64 b, u64 m) {
    return static_cast<u64>(static_cast<u128>(a) * b % m);
}

inline u64 pow_mod(u64 base, u64 exp, u64 m) {
    u64 result = 1 % m;
    base %= m;
    while (exp > 0) {
        if (exp & 1) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return result;
}

/// Plain sieve of Eratosthenes; used for base primes and small tables.
inline std::vector<u64> primes_up_to(u64 limit) {
    std::vector<u64> primes;
    if (limit < 2) return primes;
    std::vector<bool> composite(limit + 1, false);
    for (u64 p = 2; p <= limit; ++p) {
        if (composite[p]) continue;
        primes.push_back(p);
        for (u64 m = p * p; m <= limit; m += p) composite[m] = true;
    }
    return primes;
}

/// Floor of the square root, exact for the whole 64-bit range.
inline u64 isqrt(u64 n) {
    if (n < 2) return n;
    u64 r = static_cast<u64>(__builtin_sqrtl(static_cast<long double>(n)));
    while (static_cast<u128>(r) * r > n) --r;
    while (static_cast<u128>(r + 1) * (r + 1) <= n) ++r;
    return r;
}

namespace detail {

inline constexpr std::array<u64, 12> kSmallPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

// Strong probable-prime test to one base; n odd, n > 2.
inline bool strong_probable_prime(u64 n, u64 base) {
    base %= n;
    if (base == 0) return true;
    u64 d = n - 1;
    unsigned s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    u64 x = pow_mod(base, d, n);
    if (x == 1 || x == n - 1) return true;
    for (unsigned r = 1; r < s; ++r) {
        x = mul_mod(x, x, n);
        if (x == n - 1) return true;
    }
    return false;
}

} // namespace detail

/// Deterministic primality for every 64-bit n. The seven bases below have no
/// common strong pseudoprime below 2^64 (Sinclair's set).
inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : detail::kSmallPrimes) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    if (n < 41 * 41) return true;
    static constexpr std::array<u64, 7> bases{2, 325, 9375, 28178, 450775, 9780504, 1795265022};
    for (u64 a : bases)
        if (!detail::strong_probable_prime(n, a)) return false;
    return true;
}

namespace detail {

// Brent's variant of Pollard rho with a fixed seed schedule; n must be odd and
// composite. Returns a nontrivial divisor.
inline u64 pollard_brent(u64 n) {
    for (u64 c = 1;; ++c) {
        auto f = [&](u64 v) {
            u64 r = mul_mod(v, v, n) + c;
            return r >= n ? r - n : r;
        };
        u64 y = 2, x = 2, g = 1, q = 1, ys = 2;
        const u64 block = 128;
        for (u64 r = 1; g == 1; r <<= 1) {
            x = y;
            for (u64 i = 0; i < r; ++i) y = f(y);
            for (u64 k = 0; k < r && g == 1; k += block) {
                ys = y;
                for (u64 i = 0; i < std::min(block, r - k); ++i) {
                    y = f(y);
                    q = mul_mod(q, x > y ? x - y : y - x, n);
                }
                g = std::gcd(q, n);
            }
        }
        if (g == n) {
            do {
                ys = f(ys);
                g = std::gcd(x > ys ? x - ys : ys - x, n);
            } while (g == 1);
        }
        if (g != n) return g;
    }
}

inline void split_into(u64 n, std::vector<u64>& out) {
    if (n == 1) return;
    if (is_prime(n)) {
        out.push_back(n);
        return;
    }
    u64 d = pollard_brent(n);
    split_into(d, out);
    split_into(n / d, out);
}

inline Factorization collect(u64 n, std::vector<u64>& primes) {
    std::sort(primes.begin(), primes.end());
    Factorization f;
    f.n = n;
    for (u64 p : primes) {
        if (!f.factors.empty() && f.factors.back().prime == p)
            ++f.factors.back().exponent;
        else
            f.factors.push_back({p, 1});
    }
    return f;
}

} // namespace detail

/// Complete factorization of any 64-bit n >= 1 (trial division by small
/// primes, then Pollard-Brent with deterministic primality on the pieces).
inline Factorization factorize(u64 n) {
    if (n == 0) throw DomainError("factorize: n must be >= 1", "n=0");
    std::vector<u64> primes;
    u64 m = n;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull, 41ull,
                  43ull, 47ull}) {
        while (m % p == 0) {
            primes.push_back(p);
            m /= p;
        }
    }
    detail::split_into(m, primes);
    return detail::collect(n, primes);
}

/// Number of distinct prime factors of a single n >= 1.
inline unsigned omega(u64 n) { return factorize(n).omega(); }

} // namespace omegalab
