#pragma once

#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "omegalab/error.hpp"
#include "omegalab/parallel.hpp"
#include "omegalab/primality.hpp"

namespace omegalab {

/// Largest hi accepted by the range sieves. Base primes up to sqrt(hi) are
/// held in memory, so practical use stays far below this.
inline constexpr u64 kMaxSieveHi = u64{1} << 62;

/// Memory budget for materialized sieve tables, in bytes. Read from
/// OMEGALAB_SIEVE_BUDGET_MB (mebibytes); defaults to 1024 MiB.
inline std::size_t sieve_memory_budget() {
    if (const char* env = std::getenv("OMEGALAB_SIEVE_BUDGET_MB")) {
        char* end = nullptr;
        unsigned long long mb = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && mb > 0) return static_cast<std::size_t>(mb) << 20;
    }
    return std::size_t{1024} << 20;
}

struct SieveOptions {
    // Entries per segment. 32768 keeps the per-segment working arrays of the
    // omega/tau/phi kernel inside a typical 512 KiB L2.
    std::size_t block_size = 32768;
    unsigned threads = 0;
    std::size_t memory_budget = sieve_memory_budget();
};

namespace detail {

inline void check_range(u64 lo, u64 hi) {
    if (lo < 1 || lo > hi)
        throw DomainError("sieve range must satisfy 1 <= lo <= hi",
                          "lo=" + std::to_string(lo) + " hi=" + std::to_string(hi));
    if (hi > kMaxSieveHi)
        throw RangeError("sieve hi exceeds supported maximum 2^62", "hi=" + std::to_string(hi));
}

inline void check_budget(u64 bytes, const SieveOptions& opt, const char* what) {
    if (bytes > opt.memory_budget)
        throw ResourceError(std::string(what) + " needs " + std::to_string(bytes) +
                                " bytes, over the sieve memory budget of " +
                                std::to_string(opt.memory_budget) + " bytes (OMEGALAB_SIEVE_BUDGET_MB)",
                            "budget_bytes=" + std::to_string(opt.memory_budget));
}

inline std::vector<std::uint32_t> base_primes_for(u64 hi) {
    auto primes = primes_up_to(isqrt(hi));
    return {primes.begin(), primes.end()};
}

inline std::size_t segment_count(u64 lo, u64 hi, std::size_t block) {
    if (block == 0) throw DomainError("sieve block_size must be positive");
    return static_cast<std::size_t>((hi - lo) / block + 1);
}

inline u64 first_multiple_at_least(u64 start, u64 m) { return (start + m - 1) / m * m; }

} // namespace detail

/// Smallest-prime-factor table over [lo, hi]. Entries are stored as 32-bit
/// values; 0 marks "no prime <= sqrt(hi) divides n", i.e. n is 1 or prime,
/// and spf() resolves it to n itself. Immutable after build.
class FactorSieve {
public:
    static FactorSieve build(u64 lo, u64 hi, const SieveOptions& opt = {}) {
        detail::check_range(lo, hi);
        const u64 count = hi - lo + 1;
        detail::check_budget(count * sizeof(std::uint32_t), opt, "factor sieve table");

        FactorSieve s;
        s.lo_ = lo;
        s.hi_ = hi;
        s.base_ = detail::base_primes_for(hi);
        s.table_.assign(count, 0);

        const std::size_t block = opt.block_size;
        parallel_for(detail::segment_count(lo, hi, block), opt.threads, [&](std::size_t seg) {
            const u64 seg_lo = lo + static_cast<u64>(seg) * block;
            const u64 seg_hi = std::min<u64>(hi, seg_lo + block - 1);
            for (std::uint32_t p : s.base_) {
                const u64 sq = u64{p} * p;
                if (sq > seg_hi) break;
                u64 m = std::max(sq, detail::first_multiple_at_least(seg_lo, p));
                for (; m <= seg_hi; m += p) {
                    auto& slot = s.table_[m - lo];
                    if (slot == 0) slot = p;
                }
            }
        });
        return s;
    }

    u64 lo() const { return lo_; }
    u64 hi() const { return hi_; }
    u64 size() const { return hi_ - lo_ + 1; }
    bool contains(u64 n) const { return n >= lo_ && n <= hi_; }

    std::span<const std::uint32_t> raw() const { return table_; }
    std::span<const std::uint32_t> base_primes() const { return base_; }

    u64 spf(u64 n) const {
        check(n);
        std::uint32_t v = table_[n - lo_];
        return v == 0 ? n : v;
    }

    bool is_prime(u64 n) const {
        check(n);
        return n >= 2 && table_[n - lo_] == 0;
    }

    Factorization factorize(u64 n) const {
        check(n);
        Factorization f;
        f.n = n;
        u64 m = n;
        std::size_t next_base = 0;
        while (m > 1) {
            u64 p;
            if (contains(m)) {
                p = spf(m);
            } else {
                // Cofactor fell below lo: continue by trial division with the
                // base primes above the last prime removed.
                p = m;
                for (; next_base < base_.size(); ++next_base) {
                    u64 q = base_[next_base];
                    if (q * q > m) break;
                    if (m % q == 0) {
                        p = q;
                        break;
                    }
                }
            }
            unsigned e = 0;
            while (m % p == 0) {
                m /= p;
                ++e;
            }
            f.factors.push_back({p, e});
            while (next_base < base_.size() && base_[next_base] <= p) ++next_base;
        }
        return f;
    }

    unsigned omega(u64 n) const { return factorize(n).omega(); }
    u64 tau(u64 n) const { return factorize(n).tau(); }
    u64 phi(u64 n) const { return factorize(n).phi(); }

private:
    void check(u64 n) const {
        if (!contains(n))
            throw DomainError("value outside sieve range", "n=" + std::to_string(n) + " range=[" +
                                                               std::to_string(lo_) + "," +
                                                               std::to_string(hi_) + "]");
    }

    u64 lo_ = 1;
    u64 hi_ = 1;
    std::vector<std::uint32_t> base_;
    std::vector<std::uint32_t> table_;
};

/// Calls visit(p) for every prime p in [lo, hi], in increasing order, using a
/// segmented bitmap so memory stays O(sqrt(hi) + block).
template <typename Visit>
void for_each_prime(u64 lo, u64 hi, Visit&& visit, std::size_t block = std::size_t{1} << 18) {
    if (hi < 2 || lo > hi) return;
    lo = std::max<u64>(lo, 2);
    if (hi > kMaxSieveHi) throw RangeError("prime enumeration beyond 2^62", "hi=" + std::to_string(hi));
    const auto base = primes_up_to(isqrt(hi));
    std::vector<std::uint8_t> composite(block);
    for (u64 seg_lo = lo; seg_lo <= hi; seg_lo += block) {
        const u64 seg_hi = std::min<u64>(hi, seg_lo + block - 1);
        const std::size_t len = seg_hi - seg_lo + 1;
        std::fill(composite.begin(), composite.begin() + len, 0);
        for (u64 p : base) {
            if (p * p > seg_hi) break;
            for (u64 m = std::max(p * p, detail::first_multiple_at_least(seg_lo, p)); m <= seg_hi; m += p)
                composite[m - seg_lo] = 1;
        }
        for (std::size_t i = 0; i < len; ++i)
            if (!composite[i]) visit(seg_lo + i);
        if (seg_hi == hi) break;
    }
}

// ---------------------------------------------------------------------------
// omega / tau / phi over ranges
// ---------------------------------------------------------------------------

enum ArithmeticFields : unsigned {
    kOmega = 1u << 0,
    kTau = 1u << 1,
    kPhi = 1u << 2,
};

namespace detail {

// Fills omega/tau/phi for [seg_lo, seg_lo + len) using the base primes.
// found[i] accumulates the product of prime powers located so far; whatever
// is left over at the end is a single prime above sqrt(seg_hi).
template <unsigned Fields>
void arithmetic_segment(u64 seg_lo, std::size_t len, std::span<const std::uint32_t> base,
                        std::uint8_t* omega, u64* tau, u64* phi, std::vector<u64>& found) {
    const u64 seg_hi = seg_lo + len - 1;
    found.assign(len, 1);
    if constexpr ((Fields & kOmega) != 0) std::fill(omega, omega + len, std::uint8_t{0});
    if constexpr ((Fields & kTau) != 0) std::fill(tau, tau + len, u64{1});
    if constexpr ((Fields & kPhi) != 0) std::fill(phi, phi + len, u64{1});

    for (std::uint32_t p32 : base) {
        const u64 p = p32;
        if (p * p > seg_hi) break;
        u64 pk = p;
        for (unsigned k = 1;; ++k) {
            for (u64 m = first_multiple_at_least(seg_lo, pk); m <= seg_hi; m += pk) {
                const std::size_t i = m - seg_lo;
                found[i] *= p;
                if (k == 1) {
                    if constexpr ((Fields & kOmega) != 0) ++omega[i];
                    if constexpr ((Fields & kTau) != 0) tau[i] *= 2;
                    if constexpr ((Fields & kPhi) != 0) phi[i] *= p - 1;
                } else {
                    if constexpr ((Fields & kTau) != 0) tau[i] = tau[i] / k * (k + 1);
                    if constexpr ((Fields & kPhi) != 0) phi[i] *= p;
                }
            }
            if (pk > seg_hi / p) break;
            pk *= p;
        }
    }
    for (std::size_t i = 0; i < len; ++i) {
        const u64 n = seg_lo + i;
        if (found[i] != n) {
            if constexpr ((Fields & kOmega) != 0) ++omega[i];
            if constexpr ((Fields & kTau) != 0) tau[i] *= 2;
            if constexpr ((Fields & kPhi) != 0) phi[i] *= n / found[i] - 1;
        }
    }
}

} // namespace detail

/// omega(n) for every n in the sieve's range; omega(1) = 0.
inline std::vector<std::uint8_t> omega_range(const FactorSieve& sieve, const SieveOptions& opt = {}) {
    std::vector<std::uint8_t> out(sieve.size());
    const std::size_t block = opt.block_size;
    const auto base = sieve.base_primes();
    parallel_for(detail::segment_count(sieve.lo(), sieve.hi(), block), opt.threads, [&](std::size_t seg) {
        thread_local std::vector<u64> found;
        const u64 seg_lo = sieve.lo() + static_cast<u64>(seg) * block;
        const std::size_t len = static_cast<std::size_t>(std::min<u64>(sieve.hi() - seg_lo + 1, block));
        detail::arithmetic_segment<kOmega>(seg_lo, len, base, out.data() + (seg_lo - sieve.lo()), nullptr,
                                           nullptr, found);
    });
    return out;
}

struct ArithmeticTable {
    u64 lo = 1;
    u64 hi = 1;
    std::vector<std::uint8_t> omega;
    std::vector<u64> tau;
    std::vector<u64> phi;
};

/// omega, tau and phi over [lo, hi], materialized.
inline ArithmeticTable arithmetic_range(u64 lo, u64 hi, const SieveOptions& opt = {}) {
    detail::check_range(lo, hi);
    const u64 count = hi - lo + 1;
    detail::check_budget(count * (1 + 2 * sizeof(u64)), opt, "arithmetic table");
    ArithmeticTable t{lo, hi, std::vector<std::uint8_t>(count), std::vector<u64>(count), std::vector<u64>(count)};
    const auto base = detail::base_primes_for(hi);
    const std::size_t block = opt.block_size;
    parallel_for(detail::segment_count(lo, hi, block), opt.threads, [&](std::size_t seg) {
        thread_local std::vector<u64> found;
        const u64 seg_lo = lo + static_cast<u64>(seg) * block;
        const std::size_t len = static_cast<std::size_t>(std::min<u64>(hi - seg_lo + 1, block));
        const std::size_t off = seg_lo - lo;
        detail::arithmetic_segment<kOmega | kTau | kPhi>(seg_lo, len, base, t.omega.data() + off,
                                                         t.tau.data() + off, t.phi.data() + off, found);
    });
    return t;
}

/// Streams omega over [lo, hi] without materializing it. The visitor is called
/// as visitor(block_lo, std::span<const std::uint8_t>) strictly in increasing
/// block order regardless of the thread count; blocks are computed in waves of
/// `threads` segments.
template <typename Visitor>
void for_each_omega_block(u64 lo, u64 hi, const SieveOptions& opt, Visitor&& visitor) {
    detail::check_range(lo, hi);
    const auto base = detail::base_primes_for(hi);
    const std::size_t block = opt.block_size;
    const std::size_t segments = detail::segment_count(lo, hi, block);
    const unsigned threads = resolve_threads(opt.threads);
    const std::size_t wave = threads * 4;
    detail::check_budget(static_cast<u64>(wave) * block * (1 + sizeof(u64)), opt, "omega stream buffers");

    std::vector<std::vector<std::uint8_t>> buffers(wave, std::vector<std::uint8_t>(block));
    for (std::size_t first = 0; first < segments; first += wave) {
        const std::size_t in_wave = std::min(wave, segments - first);
        parallel_for(in_wave, threads, [&](std::size_t j) {
            thread_local std::vector<u64> found;
            const u64 seg_lo = lo + static_cast<u64>(first + j) * block;
            const std::size_t len = static_cast<std::size_t>(std::min<u64>(hi - seg_lo + 1, block));
            detail::arithmetic_segment<kOmega>(seg_lo, len, base, buffers[j].data(), nullptr, nullptr, found);
        });
        for (std::size_t j = 0; j < in_wave; ++j) {
            const u64 seg_lo = lo + static_cast<u64>(first + j) * block;
            const std::size_t len = static_cast<std::size_t>(std::min<u64>(hi - seg_lo + 1, block));
            visitor(seg_lo, std::span<const std::uint8_t>(buffers[j].data(), len));
        }
    }
}

/// Histogram and order-sensitive digest of omega over a range.
struct OmegaSummary {
    u64 lo = 1;
    u64 hi = 1;
    std::vector<u64> histogram; // histogram[k] = #{n : omega(n) = k}
    u64 total = 0;              // sum of omega(n)
    u64 digest = 0;             // FNV-1a over the omega bytes in order

    friend bool operator==(const OmegaSummary&, const OmegaSummary&) = default;
};

inline OmegaSummary omega_summary(u64 lo, u64 hi, const SieveOptions& opt = {}) {
    OmegaSummary s;
    s.lo = lo;
    s.hi = hi;
    s.histogram.assign(16, 0);
    u64 h = 0xcbf29ce484222325ull;
    for_each_omega_block(lo, hi, opt, [&](u64, std::span<const std::uint8_t> w) {
        for (std::uint8_t v : w) {
            ++s.histogram[v];
            s.total += v;
            h = (h ^ v) * 0x100000001b3ull;
        }
    });
    s.digest = h;
    while (s.histogram.size() > 1 && s.histogram.back() == 0) s.histogram.pop_back();
    return s;
}

} // namespace omegalab
