#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "omegalab/sieve_identities.hpp"
#include "oracles.hpp"

using namespace omegalab;

namespace {

const u64 kFirstEight[] = {2, 3, 5, 7, 11, 13, 17, 19};

// sum over divisors d of m with omega(d) <= V of mu(d), by enumerating d.
std::int64_t brute_brun(u64 m, unsigned V) {
    std::int64_t s = 0;
    for (u64 d = 1; d <= m; ++d) {
        if (m % d != 0) continue;
        auto f = oracle::trial_factor(d);
        bool squarefree = true;
        for (auto [p, e] : f) squarefree = squarefree && e == 1;
        if (!squarefree || f.size() > V) continue;
        s += f.size() % 2 == 0 ? 1 : -1;
    }
    return s;
}

Rational q(long num, long den) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

PrimeInterval interval(long double lo, long double hi, std::set<u64> ex = {}) { return {lo, hi, std::move(ex)}; }

} // namespace

TEST_CASE("brun_truncated_divisor_sum examples", "[sieve_identities]") {
    CHECK(brun_truncated_divisor_sum(1, 0) == 1);
    CHECK(brun_truncated_divisor_sum(1, 5) == 1);
    CHECK(brun_truncated_divisor_sum(30, 2) == 1);
    CHECK(brun_truncated_divisor_sum(6, 1) == -1);
    CHECK(brun_truncated_divisor_sum(30, 3) == 0);
    CHECK_THROWS_AS(brun_truncated_divisor_sum(12, 1), DomainError);
    CHECK_THROWS_AS(brun_truncated_divisor_sum(0, 1), DomainError);
}

TEST_CASE("brun sums agree with divisor enumeration", "[sieve_identities][oracle]") {
    for (u64 m = 1; m <= 3000; ++m) {
        bool squarefree = true;
        for (auto [p, e] : oracle::trial_factor(m)) squarefree = squarefree && e == 1;
        if (!squarefree) continue;
        for (unsigned V = 0; V <= 6; ++V) REQUIRE(brun_truncated_divisor_sum(m, V) == brute_brun(m, V));
    }
}

TEST_CASE("Brun parity sandwich over the first eight primes", "[sieve_identities][property]") {
    for (unsigned mask = 0; mask < 256; ++mask) {
        u64 m = 1;
        for (unsigned i = 0; i < 8; ++i)
            if (mask >> i & 1) m *= kFirstEight[i];
        const std::int64_t indicator = m == 1 ? 1 : 0;
        for (unsigned V = 0; V <= 8; ++V) {
            const auto s = brun_truncated_divisor_sum(m, V);
            if (V % 2 == 0)
                REQUIRE(s >= indicator);
            else
                REQUIRE(s <= indicator);
        }
    }
}

TEST_CASE("PrimeInterval", "[sieve_identities]") {
    CHECK(interval(4, 10).primes() == std::vector<u64>{5, 7});
    CHECK(interval(4.5L, 11.9L).primes() == std::vector<u64>{5, 7, 11});
    CHECK(interval(5, 7).primes() == std::vector<u64>{7}); // lo excluded, hi included
    CHECK(interval(4, 10, {5}).primes() == std::vector<u64>{7});
    CHECK(interval(-3, 2).primes() == std::vector<u64>{2});
    CHECK_THROWS_AS(interval(10, 4).primes(), DomainError);
}

TEST_CASE("complete_sieve_product examples", "[sieve_identities]") {
    auto empty = complete_sieve_product(2, interval(24, 28));
    CHECK(empty.prime_count == 0);
    CHECK(empty.product == 1);
    CHECK(*empty.divisor_sum == 1);
    CHECK(empty.equal);

    auto two = complete_sieve_product(2, interval(4, 10));
    CHECK(two.product == q(1, 3));
    CHECK(*two.divisor_sum == q(1, 3));
    CHECK(two.equal);

    auto ex = complete_sieve_product(2, interval(4, 10, {5}));
    CHECK(ex.product == q(2, 3));
    CHECK(ex.equal);

    CHECK_THROWS_AS(complete_sieve_product(2, interval(2, 10)), DomainError);      // p = 3 = K + 1
    CHECK_THROWS_AS(complete_sieve_product(4, interval(1, 10)), PreconditionError); // p = 2 < K + 1

    auto big = complete_sieve_product(3, interval(10, 1000));
    CHECK_FALSE(big.divisor_sum);
    CHECK(big.product > 0);
}

TEST_CASE("complete_sieve_product identity on random instances", "[sieve_identities][property]") {
    std::mt19937_64 rng(29);
    int checked = 0;
    while (checked < 200) {
        const unsigned K = 1 + rng() % 6;
        const long double lo = K + 1 + static_cast<long double>(rng() % 40);
        const long double hi = lo + 1 + static_cast<long double>(rng() % 60);
        std::set<u64> ex;
        for (u64 p : primes_up_to(static_cast<u64>(hi)))
            if (rng() % 4 == 0) ex.insert(p);
        PrimeInterval I{lo, hi, ex};
        if (I.primes().size() > kBruteForcePrimes) continue;
        auto r = complete_sieve_product(K, I);
        REQUIRE(r.divisor_sum);
        REQUIRE(r.equal);
        // Product side against a plain loop.
        Rational prod = 1;
        for (u64 p : I.primes()) prod *= q(static_cast<long>(p - 1 - K), static_cast<long>(p - 1));
        REQUIRE(prod == r.product);
        ++checked;
    }
}

TEST_CASE("truncation_error_bound examples", "[sieve_identities]") {
    auto b = truncation_error_bound(2, interval(4, 10), 1);
    REQUIRE(b.bound_exact);
    CHECK(*b.bound_exact == q(25, 72));
    CHECK(*b.true_dropped == q(1, 6));
    CHECK(b.dominates);

    auto none = truncation_error_bound(2, interval(4, 10), 2);
    CHECK(*none.true_dropped == 0);
    CHECK(none.bound >= 0);

    // Decreasing in V once (V+1) exceeds the prime sum.
    auto wide = truncation_error_bound(3, interval(10, 200), 0);
    const long double s = wide.bound; // V = 0: the prime sum itself
    long double prev = std::numeric_limits<long double>::infinity();
    for (unsigned V = static_cast<unsigned>(std::ceil(s)); V < 30; ++V) {
        const long double cur = truncation_error_bound(3, interval(10, 200), V).bound;
        REQUIRE(cur < prev);
        prev = cur;
    }
}

TEST_CASE("truncation bound dominates the dropped mass", "[sieve_identities][property]") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const unsigned K = 1 + rng() % 5;
        const long double lo = K + 1 + static_cast<long double>(rng() % 30);
        PrimeInterval I{lo, lo + 1 + static_cast<long double>(rng() % 50), {}};
        if (I.primes().size() > kBruteForcePrimes) continue;
        for (unsigned V = 0; V <= I.primes().size() + 1; ++V) {
            auto b = truncation_error_bound(K, I, V);
            REQUIRE(b.true_dropped);
            REQUIRE(b.dominates);
        }
    }
}

TEST_CASE("lambda_omega_mean examples", "[sieve_identities]") {
    CHECK(*lambda_omega_mean(Rational(1), 1000).exact == 1000);
    CHECK(lambda_omega_mean(1.0L, 1000).value == 1000);
    for (long num : {1, 2, 3, 7}) {
        const Rational lam = q(num, 10);
        CHECK(*lambda_omega_mean(lam, 6).exact == 1 + 4 * lam + lam * lam);
    }
    auto m = lambda_omega_mean(0.3L, 6);
    CHECK(std::fabs(m.value - (1 + 4 * 0.3L + 0.09L)) <= m.error_bound + 1e-18L);
    CHECK_FALSE(lambda_omega_mean(0.5L, 1).ratio_defined);
    CHECK_THROWS_AS(lambda_omega_mean(0.0L, 10), DomainError);
    CHECK_THROWS_AS(lambda_omega_mean(Rational(3, 2), 10), DomainError);
}

TEST_CASE("rational means are exact and order-independent", "[sieve_identities][property]") {
    const Rational lam = q(1, 10);
    const u64 N = 20000;
    auto m = lambda_omega_mean(lam, N);
    // Per-n sum in decreasing n order with trial-division omega.
    Rational direct = 0;
    for (u64 n = N; n >= 1; --n) {
        Rational p = 1;
        for (unsigned i = 0; i < oracle::trial_omega(n); ++i) p *= lam;
        direct += p;
    }
    CHECK(direct == *m.exact);
    auto fl = lambda_omega_mean(0.1L, N);
    CHECK(std::fabs(fl.value - static_cast<long double>(m.exact->get_d())) <= fl.error_bound + m.error_bound);
    CHECK(lambda_omega_mean(lam, N, 1).exact == lambda_omega_mean(lam, N, 4).exact);
}

TEST_CASE("lambda-trick dominance", "[sieve_identities][property]") {
    for (unsigned n = 1; n <= 10000; ++n) {
        const unsigned w = oracle::trial_omega(n);
        for (long double lambda : {0.1L, 0.5L})
            for (long double theta : {1.0L, 2.0L, 3.0L, 4.0L}) REQUIRE(lambda_trick_bound_holds(w, theta, lambda));
    }
}

TEST_CASE("mean of lambda^omega tracks (log n)^(lambda - 1)", "[sieve_identities]") {
    auto a = lambda_omega_mean(0.1L, 1000000);
    auto b = lambda_omega_mean(0.1L, 10000000);
    const long double observed = (b.value / 1e7L) / (a.value / 1e6L);
    const long double predicted = std::pow(std::log(1e7L) / std::log(1e6L), 0.1L - 1);
    CHECK(std::fabs(observed / predicted - 1) < 0.05L);
}
