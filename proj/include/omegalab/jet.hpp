#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace omegalab {

/// Truncated Taylor expansion c[0] + c[1] h + ... + c[N] h^N of a function
/// around a point. Arithmetic on jets composes expansions exactly up to
/// order N, which gives derivatives of closed forms without finite
/// differences: f^{(j)}(x) = j! * c[j].
template <std::size_t N, typename T = long double>
struct Jet {
    std::array<T, N + 1> c{};

    static Jet constant(T v) {
        Jet j;
        j.c[0] = v;
        return j;
    }
    /// The identity expansion x + h.
    static Jet variable(T x) {
        Jet j;
        j.c[0] = x;
        if constexpr (N >= 1) j.c[1] = 1;
        return j;
    }

    T value() const { return c[0]; }

    /// f^{(k)} at the expansion point.
    T derivative(std::size_t k) const {
        T f = 1;
        for (std::size_t i = 2; i <= k; ++i) f *= static_cast<T>(i);
        return c[k] * f;
    }

    Jet& operator+=(const Jet& o) {
        for (std::size_t i = 0; i <= N; ++i) c[i] += o.c[i];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (std::size_t i = 0; i <= N; ++i) c[i] -= o.c[i];
        return *this;
    }
    Jet& operator*=(T s) {
        for (auto& v : c) v *= s;
        return *this;
    }
    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, T s) { return a *= s; }
    friend Jet operator*(T s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, T s) {
        a.c[0] += s;
        return a;
    }
    friend Jet operator+(T s, Jet a) { return a + s; }
    friend Jet operator-(T s, const Jet& a) {
        Jet r = a * T(-1);
        r.c[0] += s;
        return r;
    }
    friend Jet operator-(Jet a, T s) {
        a.c[0] -= s;
        return a;
    }
    Jet operator-() const { return *this * T(-1); }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        for (std::size_t i = 0; i <= N; ++i)
            for (std::size_t j = 0; i + j <= N; ++j) r.c[i + j] += a.c[i] * b.c[j];
        return r;
    }

    /// 1/a; requires a.c[0] != 0.
    friend Jet reciprocal(const Jet& a) {
        Jet r;
        r.c[0] = 1 / a.c[0];
        for (std::size_t k = 1; k <= N; ++k) {
            T s = 0;
            for (std::size_t i = 1; i <= k; ++i) s += a.c[i] * r.c[k - i];
            r.c[k] = -s / a.c[0];
        }
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

    friend Jet exp(const Jet& a) {
        Jet r;
        r.c[0] = std::exp(a.c[0]);
        for (std::size_t k = 1; k <= N; ++k) {
            T s = 0;
            for (std::size_t i = 1; i <= k; ++i) s += static_cast<T>(i) * a.c[i] * r.c[k - i];
            r.c[k] = s / static_cast<T>(k);
        }
        return r;
    }
};

} // namespace omegalab
