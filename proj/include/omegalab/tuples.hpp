#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "omegalab/error.hpp"
#include "omegalab/linear_forms.hpp"
#include "omegalab/parallel.hpp"
#include "omegalab/params.hpp"
#include "omegalab/primality.hpp"
#include "omegalab/quadrature.hpp"

namespace omegalab {

namespace detail {

// Small primes used to presieve form values, plus the bound P they cover:
// a value v <= P^2 with no prime factor <= P (other than itself) is prime.
struct Presieve {
    std::vector<u64> primes;
    u64 bound = 0;

    explicit Presieve(u64 max_value) {
        bound = std::min<u64>(u64{1} << 16, isqrt(max_value) + 1);
        primes = primes_up_to(bound);
    }
};

// alive[i] is cleared unless every form is prime at n = n_lo + i.
inline void prime_tuple_mask(const LinearFormSystem& sys, const Presieve& ps, u64 n_lo, u64 n_hi,
                             std::vector<uint8_t>& alive) {
    const std::size_t len = static_cast<std::size_t>(n_hi - n_lo + 1);
    alive.assign(len, 1);
    // Short ranges only sieve with small primes; deeper presieving would cost
    // more than the primality tests it saves.
    const u64 limit = std::min<u64>(ps.bound, std::max<u64>(256, 4 * static_cast<u64>(len)));
    for (const auto& f : sys.forms()) {
        for (u64 q : ps.primes) {
            if (q > limit) break;
            const u64 a = f.a % q, b = f.b % q;
            u64 first;
            if (a == 0) {
                if (b != 0) continue;
                first = n_lo; // q divides every value
            } else {
                const u64 r = mul_mod((q - b) % q, inverse_mod(a, q), q);
                first = n_lo + (r + q - n_lo % q) % q;
            }
            const u64 step = a == 0 ? 1 : q;
            for (u64 n = first; n <= n_hi; n += step)
                if (f(n) != q) alive[static_cast<std::size_t>(n - n_lo)] = 0;
        }
    }
    for (std::size_t i = 0; i < len; ++i) {
        if (!alive[i]) continue;
        const u64 n = n_lo + i;
        for (const auto& f : sys.forms()) {
            const u64 v = f(n);
            const bool prime = v >= 2 && (v <= limit * limit || is_prime(v));
            if (!prime) {
                alive[i] = 0;
                break;
            }
        }
    }
}

inline u64 max_form_value(const LinearFormSystem& sys, u64 n_max) {
    u64 m = 0;
    for (const auto& f : sys.forms()) m = std::max(m, f(n_max)); // throws RangeError on overflow
    return m;
}

constexpr u64 kTupleSegment = u64{1} << 16;

} // namespace detail

/// Number of 1 <= n <= n_max with every form prime at n.
inline u64 count_prime_tuples(const LinearFormSystem& sys, u64 n_max, unsigned threads = 0) {
    if (n_max == 0) return 0;
    const detail::Presieve ps(detail::max_form_value(sys, n_max));
    const std::size_t segments = static_cast<std::size_t>((n_max - 1) / detail::kTupleSegment + 1);
    std::vector<u64> counts(segments, 0);
    parallel_for(segments, threads, [&](std::size_t s) {
        const u64 lo = 1 + static_cast<u64>(s) * detail::kTupleSegment;
        const u64 hi = std::min(n_max, lo + detail::kTupleSegment - 1);
        std::vector<uint8_t> alive;
        detail::prime_tuple_mask(sys, ps, lo, hi, alive);
        counts[s] = static_cast<u64>(std::count(alive.begin(), alive.end(), 1));
    });
    u64 total = 0;
    for (u64 c : counts) total += c;
    return total;
}

/// integral_2^N dt / (log t)^K, via t = e^u to keep the integrand mild.
inline QuadratureResult<long double> log_power_integral(u64 N, unsigned K) {
    if (N <= 2) return {};
    const long double lo = std::log(2.0L), hi = std::log(static_cast<long double>(N));
    QuadratureOptions opt;
    opt.abs_tol = 0;
    opt.rel_tol = 1e-14L;
    return integrate<long double>(
        [K](long double u) { return std::exp(u) / std::pow(u, static_cast<long double>(K)); }, lo, hi, {}, opt);
}

struct HLComparison {
    u64 n_max = 0;
    unsigned K = 0;
    u64 empirical = 0;
    SingularSeriesValue singular_series;
    long double predicted_crude = 0;    // S * N / (log N)^K, the conjectured asymptotic
    long double predicted_integral = 0; // S * integral_2^N dt/(log t)^K, our refinement
    long double integral_error = 0;     // quadrature error estimate, before scaling by S
    bool ratios_defined = false;        // false for n_max < 3
    long double ratio_crude = 0;        // empirical / predicted_crude
    long double ratio_integral = 0;     // empirical / predicted_integral
};

/// Compares the exact tuple count with the conjectured density. The series is
/// truncated at max(threshold, truncation_prime).
inline HLComparison hl_compare(const LinearFormSystem& sys, u64 n_max, u64 truncation_prime = 1000000,
                               unsigned threads = 0) {
    if (auto adm = is_admissible(sys); !adm.admissible)
        throw DomainError("hl_compare needs an admissible system", "obstructing prime " + std::to_string(*adm.witness));
    HLComparison r;
    r.n_max = n_max;
    r.K = sys.K();
    r.singular_series = singular_series(sys, std::max(truncation_prime, singular_series_threshold(sys)), threads);
    if (n_max < 3) return r; // empirical stays 0: no n in range has log n large enough to normalize by
    r.empirical = count_prime_tuples(sys, n_max, threads);
    const long double N = static_cast<long double>(n_max);
    const long double S = r.singular_series.value;
    r.predicted_crude = S * N / std::pow(std::log(N), static_cast<long double>(r.K));
    const auto integral = log_power_integral(n_max, r.K);
    r.predicted_integral = S * integral.value;
    r.integral_error = integral.error;
    r.ratios_defined = true;
    r.ratio_crude = static_cast<long double>(r.empirical) / r.predicted_crude;
    r.ratio_integral = static_cast<long double>(r.empirical) / r.predicted_integral;
    return r;
}

// ---------------------------------------------------------------------------
// Search for n0 with n0*Q/k + 1 prime (k <= K), omega(n0*Q + k) <= theta2
// (K < k <= L) and omega(n0*Q + K + 1) > theta3.
// ---------------------------------------------------------------------------

struct SearchSpec {
    unsigned K = 0;
    u64 Q = 0;
    unsigned L = 0;
    long double theta2 = 0; // omega ceiling for K < k <= L
    long double theta3 = 0; // omega floor (strict) at k = K + 1
    u64 n_max = 0;
};

struct Thresholds {
    long double theta2 = 0;
    long double theta3 = 0;
};

/// theta2 = (log log x)^2, theta3 = (log log x)/10.
inline Thresholds default_thresholds(const Scale& x) {
    const long double ll = static_cast<long double>(x.loglog_x());
    return {ll * ll, ll / 10};
}

struct PrimeCertificate {
    unsigned k = 0;
    u64 value = 0; // n0*Q/k + 1
};

struct SearchWitness {
    u64 n0 = 0;
    std::vector<PrimeCertificate> prime_certificates; // k = 1..K
    std::map<unsigned, unsigned> omega_table;         // k -> omega(n0*Q + k), K < k <= L
    unsigned omega_K1 = 0;                            // omega(n0*Q + K + 1)
};

struct SearchResult {
    std::optional<SearchWitness> witness; // empty: no n0 <= n_max exists
    u64 n_max = 0;
};

struct SearchOptions {
    unsigned threads = 0;
    u64 chunk = 4096; // n-values per work item; does not affect the result
};

inline void validate(const SearchSpec& spec) {
    if (spec.K == 0) throw PreconditionError("search needs K >= 1");
    if (spec.Q == 0) throw PreconditionError("search needs Q >= 1");
    if (spec.L <= spec.K)
        throw PreconditionError("search needs L > K", "K=" + std::to_string(spec.K) + " L=" + std::to_string(spec.L));
    if (!(spec.theta3 >= 0)) throw PreconditionError("search needs theta3 >= 0");
    for (u64 k = 1; k <= spec.K; ++k)
        if (spec.Q % (k * k) != 0)
            throw PreconditionError("k^2 must divide Q for every k <= K",
                                    "k=" + std::to_string(k) + " Q=" + std::to_string(spec.Q));
    u128 top = static_cast<u128>(spec.n_max) * spec.Q + spec.L;
    if (top > std::numeric_limits<u64>::max()) throw RangeError("n_max * Q + L exceeds 64 bits");
}

namespace detail {

inline std::optional<SearchWitness> examine(const SearchSpec& spec, u64 n) {
    const u64 base = n * spec.Q;
    const unsigned w3 = omega(base + spec.K + 1);
    if (!(static_cast<long double>(w3) > spec.theta3)) return std::nullopt;
    SearchWitness w;
    w.n0 = n;
    w.omega_K1 = w3;
    for (unsigned k = spec.K + 1; k <= spec.L; ++k) {
        const unsigned wk = k == spec.K + 1 ? w3 : omega(base + k);
        if (static_cast<long double>(wk) > spec.theta2) return std::nullopt;
        w.omega_table[k] = wk;
    }
    for (unsigned k = 1; k <= spec.K; ++k) w.prime_certificates.push_back({k, base / k + 1});
    return w;
}

} // namespace detail

/// Smallest n0 in [1, n_max] meeting all three conditions. Work items are
/// scanned in waves and the lowest hit in index order wins, so the answer
/// does not depend on thread count or chunking.
inline SearchResult search_n0(const SearchSpec& spec, const SearchOptions& opt = {}) {
    validate(spec);
    SearchResult result;
    result.n_max = spec.n_max;
    if (spec.n_max == 0) return result;

    // Forms in order of increasing value (k = K first) so the cheapest
    // primality test rejects most candidates.
    std::vector<LinearForm> forms;
    for (u64 k = spec.K; k >= 1; --k) forms.push_back({spec.Q / k, 1});
    const LinearFormSystem sys(forms);
    const detail::Presieve ps(detail::max_form_value(sys, spec.n_max));

    const u64 chunk = std::max<u64>(1, opt.chunk);
    const u64 chunks = (spec.n_max - 1) / chunk + 1;
    const unsigned threads = resolve_threads(opt.threads);
    const u64 wave = u64{threads} * 4;
    for (u64 first = 0; first < chunks; first += wave) {
        const u64 count = std::min(wave, chunks - first);
        std::vector<std::optional<SearchWitness>> hits(static_cast<std::size_t>(count));
        parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
            const u64 lo = 1 + (first + i) * chunk;
            const u64 hi = std::min(spec.n_max, lo + chunk - 1);
            std::vector<uint8_t> alive;
            detail::prime_tuple_mask(sys, ps, lo, hi, alive);
            for (u64 n = lo; n <= hi; ++n) {
                if (!alive[static_cast<std::size_t>(n - lo)]) continue;
                if (auto w = detail::examine(spec, n)) {
                    hits[i] = std::move(w);
                    return;
                }
            }
        });
        for (auto& h : hits)
            if (h) {
                result.witness = std::move(h);
                return result;
            }
    }
    return result;
}

struct WitnessCheck {
    bool valid = true;
    std::vector<std::string> failures;
    // omega(n0*Q + k) = omega(k) + 1 for k <= K, which follows from the
    // primality certificates and k^2 | Q.
    bool additivity_holds = true;
};

/// Re-derives every claim in a witness from scratch with factorize/is_prime.
inline WitnessCheck check_witness(const SearchSpec& spec, const SearchWitness& w) {
    WitnessCheck c;
    auto fail = [&](std::string msg) {
        c.valid = false;
        c.failures.push_back(std::move(msg));
    };
    if (w.n0 < 1 || w.n0 > spec.n_max) fail("n0 outside [1, n_max]");
    if (spec.K == 0 || spec.Q == 0 || spec.L <= spec.K) {
        fail("malformed spec");
        return c;
    }
    const u128 base128 = static_cast<u128>(w.n0) * spec.Q;
    if (base128 + spec.L > std::numeric_limits<u64>::max()) {
        fail("n0*Q + L exceeds 64 bits");
        return c;
    }
    const u64 base = static_cast<u64>(base128);
    if (w.prime_certificates.size() != spec.K) fail("expected K prime certificates");
    for (unsigned k = 1; k <= spec.K; ++k) {
        if (base % k != 0) {
            fail("n0*Q not divisible by k=" + std::to_string(k));
            continue;
        }
        const u64 v = base / k + 1;
        auto it = std::find_if(w.prime_certificates.begin(), w.prime_certificates.end(),
                               [k](const PrimeCertificate& pc) { return pc.k == k; });
        if (it == w.prime_certificates.end() || it->value != v)
            fail("certificate for k=" + std::to_string(k) + " missing or wrong");
        const Factorization fv = factorize(v);
        if (!(fv.factors.size() == 1 && fv.factors[0].exponent == 1))
            fail("n0*Q/" + std::to_string(k) + " + 1 = " + std::to_string(v) + " is not prime");
        if (factorize(base + k).omega() != factorize(k).omega() + 1) c.additivity_holds = false;
    }
    const unsigned w3 = factorize(base + spec.K + 1).omega();
    if (w3 != w.omega_K1) fail("omega_K1 mismatch");
    if (!(static_cast<long double>(w3) > spec.theta3)) fail("omega(n0*Q + K + 1) <= theta3");
    for (unsigned k = spec.K + 1; k <= spec.L; ++k) {
        const unsigned wk = factorize(base + k).omega();
        auto it = w.omega_table.find(k);
        if (it == w.omega_table.end() || it->second != wk) fail("omega table wrong at k=" + std::to_string(k));
        if (static_cast<long double>(wk) > spec.theta2) fail("omega(n0*Q + " + std::to_string(k) + ") > theta2");
    }
    if (w.omega_table.size() != spec.L - spec.K) fail("omega table has entries outside (K, L]");
    return c;
}

} // namespace omegalab
