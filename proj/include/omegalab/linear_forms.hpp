#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "omegalab/compensated.hpp"
#include "omegalab/error.hpp"
#include "omegalab/parallel.hpp"
#include "omegalab/primality.hpp"
#include "omegalab/sieve.hpp"

namespace omegalab {

/// L(n) = a*n + b with a >= 1, b >= 0.
struct LinearForm {
    u64 a = 1;
    u64 b = 0;

    /// a*n + b; throws RangeError if it leaves 64 bits.
    u64 operator()(u64 n) const {
        u128 v = static_cast<u128>(a) * n + b;
        if (v > std::numeric_limits<u64>::max())
            throw RangeError("linear form value overflows 64 bits",
                             "a=" + std::to_string(a) + " b=" + std::to_string(b) + " n=" + std::to_string(n));
        return static_cast<u64>(v);
    }

    friend auto operator<=>(const LinearForm&, const LinearForm&) = default;
};

/// Nonempty set of pairwise distinct forms (compared as literal (a, b) pairs).
class LinearFormSystem {
public:
    explicit LinearFormSystem(std::vector<LinearForm> forms) : forms_(std::move(forms)) {
        if (forms_.empty()) throw DomainError("linear form system must be nonempty");
        for (const auto& f : forms_)
            if (f.a == 0) throw DomainError("linear form coefficient a must be >= 1", "b=" + std::to_string(f.b));
        std::set<LinearForm> seen(forms_.begin(), forms_.end());
        if (seen.size() != forms_.size()) throw DomainError("linear forms must be pairwise distinct");
    }

    const std::vector<LinearForm>& forms() const { return forms_; }
    std::size_t size() const { return forms_.size(); }
    unsigned K() const { return static_cast<unsigned>(forms_.size()); }

private:
    std::vector<LinearForm> forms_;
};

namespace detail {

inline u64 inverse_mod(u64 a, u64 m) {
    __int128 r0 = m, r1 = a % m, s0 = 0, s1 = 1;
    while (r1 != 0) {
        __int128 q = r0 / r1;
        __int128 t = r0 - q * r1;
        r0 = r1;
        r1 = t;
        t = s0 - q * s1;
        s0 = s1;
        s1 = t;
    }
    if (s0 < 0) s0 += m;
    return static_cast<u64>(s0);
}

// Root count for a prime p already known to be prime.
inline u64 roots_mod_prime(const LinearFormSystem& sys, u64 p) {
    std::vector<u64> roots;
    roots.reserve(sys.size());
    for (const auto& f : sys.forms()) {
        const u64 a = f.a % p, b = f.b % p;
        if (a == 0) {
            if (b == 0) return p; // form vanishes identically mod p
            continue;             // never vanishes
        }
        roots.push_back(mul_mod((p - b) % p, inverse_mod(a, p), p));
    }
    std::sort(roots.begin(), roots.end());
    return static_cast<u64>(std::unique(roots.begin(), roots.end()) - roots.begin());
}

inline void add_prime_divisors(u64 n, std::set<u64>& out) {
    if (n == 0) return;
    for (const auto& f : factorize(n).factors) out.insert(f.prime);
}

} // namespace detail

/// omega_L(p): number of residues n mod p with p | prod_k (a_k n + b_k).
inline u64 roots_mod_p(const LinearFormSystem& sys, u64 p) {
    if (!is_prime(p)) throw DomainError("roots_mod_p: modulus must be prime", "p=" + std::to_string(p));
    return detail::roots_mod_prime(sys, p);
}

struct Admissibility {
    bool admissible = true;
    std::optional<u64> witness; // smallest prime with omega_L(p) = p
};

/// A prime p can only have omega_L(p) = p if p <= K (there are at most K
/// roots otherwise) or some form vanishes identically mod p, which needs
/// p | a_k. Those finitely many primes are checked explicitly; prime
/// divisors of the b_k are checked as well.
inline Admissibility is_admissible(const LinearFormSystem& sys) {
    std::set<u64> candidates;
    for (u64 p : primes_up_to(sys.K())) candidates.insert(p);
    for (const auto& f : sys.forms()) {
        detail::add_prime_divisors(f.a, candidates);
        detail::add_prime_divisors(f.b, candidates);
    }
    for (u64 p : candidates)
        if (detail::roots_mod_prime(sys, p) == p) return {false, p};
    return {};
}

/// Smallest truncation prime accepted by singular_series(): at least 2K^2
/// and at least every prime dividing some a_k, b_k or a_i b_j - a_j b_i.
/// Beyond it omega_L(p) = K exactly. Throws DomainError for systems with two
/// proportional forms, whose Euler product diverges.
inline u64 singular_series_threshold(const LinearFormSystem& sys) {
    const u64 K = sys.K();
    std::set<u64> primes;
    const auto& fs = sys.forms();
    for (const auto& f : fs) {
        detail::add_prime_divisors(f.a, primes);
        detail::add_prime_divisors(f.b, primes);
    }
    for (std::size_t i = 0; i < fs.size(); ++i) {
        for (std::size_t j = i + 1; j < fs.size(); ++j) {
            __int128 r = static_cast<__int128>(fs[i].a) * fs[j].b - static_cast<__int128>(fs[j].a) * fs[i].b;
            if (r == 0)
                throw DomainError("proportional linear forms: the singular series diverges",
                                  "forms " + std::to_string(i) + " and " + std::to_string(j));
            if (r < 0) r = -r;
            if (r > static_cast<__int128>(std::numeric_limits<u64>::max()))
                throw RangeError("resultant a_i*b_j - a_j*b_i exceeds 64 bits");
            detail::add_prime_divisors(static_cast<u64>(r), primes);
        }
    }
    u64 threshold = 2 * K * K;
    if (!primes.empty()) threshold = std::max(threshold, *primes.rbegin());
    return threshold;
}

struct SingularSeriesValue {
    long double value = 1;      // exp(log_value)
    long double log_value = 0;  // log of the truncated product
    u64 truncation_prime = 0;   // product taken over p <= truncation_prime
    long double error_bound = 0; // certified bound on |log(true) - log(value)|
    long double tail_bound = 0;  // part of error_bound due to p > truncation_prime
};

/// Certified bound on sum_{p > P} |log((1 - K/p)(1 - 1/p)^{-K})| for P >= 2K.
/// Uses |log local factor| <= 2K(K-1)/p^2 (valid for Kp^{-1} <= 1/2) and
/// sum_{n > P} n^{-2} <= 1/P. Zero for K = 1, where every factor is 1.
inline long double euler_tail_bound(u64 K, u64 P) {
    return 2.0L * static_cast<long double>(K) * static_cast<long double>(K - 1) / static_cast<long double>(P);
}

namespace detail {

// Sum of log local factors over primes in [lo, hi] with per-prime omega given
// by omega_of(p). Chunked over fixed integer ranges so the reduction order
// does not depend on the thread count.
template <typename OmegaOf>
CompensatedSum log_euler_product(u64 lo, u64 hi, u64 K, unsigned threads, OmegaOf&& omega_of,
                                 long double& rounding) {
    CompensatedSum total;
    rounding = 0;
    if (hi < lo) return total;
    constexpr u64 chunk = u64{1} << 20;
    const std::size_t chunks = static_cast<std::size_t>((hi - lo) / chunk + 1);
    std::vector<CompensatedSum> partial(chunks);
    std::vector<long double> partial_rounding(chunks, 0);
    const long double Kl = static_cast<long double>(K);
    constexpr long double u = std::numeric_limits<long double>::epsilon() / 2;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const u64 c_lo = lo + static_cast<u64>(c) * chunk;
        const u64 c_hi = std::min(hi, c_lo + chunk - 1);
        for_each_prime(c_lo, c_hi, [&](u64 p) {
            const u64 w = omega_of(p);
            if (w == K && K == 1) return; // factor is exactly 1
            const long double pl = static_cast<long double>(p);
            const long double l1 = std::log1p(-static_cast<long double>(w) / pl);
            const long double l2 = std::log1p(-1.0L / pl);
            partial[c].add(l1 - Kl * l2);
            // log1p within a few ulps, one multiply, one subtract.
            partial_rounding[c] += 4 * u * (std::fabs(l1) + 2 * Kl * std::fabs(l2));
        });
    });
    for (std::size_t c = 0; c < chunks; ++c) {
        total.add(partial[c]);
        rounding += partial_rounding[c];
    }
    return total;
}

inline SingularSeriesValue finish_singular_series(const CompensatedSum& logs, long double term_rounding, u64 K,
                                                  u64 P) {
    SingularSeriesValue v;
    v.truncation_prime = P;
    v.log_value = logs.value();
    v.value = std::exp(v.log_value);
    v.tail_bound = euler_tail_bound(K, P);
    constexpr long double u = std::numeric_limits<long double>::epsilon() / 2;
    const long double exp_rounding = v.log_value == 0 ? 0 : 2 * u;
    v.error_bound = v.tail_bound + term_rounding + logs.rounding_bound() + exp_rounding;
    return v;
}

} // namespace detail

/// S(L) = prod_p (1 - omega_L(p)/p)(1 - 1/p)^{-K}, truncated at P with a
/// certified bound on the log of the omitted tail and of rounding.
inline SingularSeriesValue singular_series(const LinearFormSystem& sys, u64 truncation_prime,
                                           unsigned threads = 0) {
    if (auto adm = is_admissible(sys); !adm.admissible)
        throw DomainError("singular series of an inadmissible system",
                          "obstructing prime " + std::to_string(*adm.witness));
    const u64 threshold = singular_series_threshold(sys);
    if (truncation_prime < threshold)
        throw PreconditionError("truncation_prime must be at least " + std::to_string(threshold),
                                "required_minimum=" + std::to_string(threshold));
    const u64 K = sys.K();
    long double rounding = 0;
    auto logs = detail::log_euler_product(2, truncation_prime, K, threads,
                                          [&](u64 p) { return p <= threshold ? detail::roots_mod_prime(sys, p) : K; },
                                          rounding);
    return detail::finish_singular_series(logs, rounding, K, truncation_prime);
}

} // namespace omegalab
