#pragma once

#include <cmath>
#include <limits>

namespace omegalab {

/// Neumaier (improved Kahan) summation in extended precision. Also tracks
/// sum |x_i| so callers can bound the accumulated rounding error.
class CompensatedSum {
public:
    void add(long double x) {
        const long double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        abs_ += std::fabs(x);
        ++count_;
    }

    void add(const CompensatedSum& other) {
        add(other.sum_);
        add(other.comp_);
        abs_ += other.abs_;
        count_ += other.count_;
    }

    long double value() const { return sum_ + comp_; }
    long double abs_total() const { return abs_; }
    unsigned long long count() const { return count_; }

    /// Bound on |value() - exact sum of the added terms|:
    /// 2u * sum|x_i| + n u^2 sum|x_i|, with u the unit roundoff. The first
    /// term dominates and is the usual Neumaier bound.
    long double rounding_bound() const {
        constexpr long double u = std::numeric_limits<long double>::epsilon() / 2;
        const long double n = static_cast<long double>(count_);
        return (2 * u + n * u * u) * abs_;
    }

private:
    long double sum_ = 0;
    long double comp_ = 0;
    long double abs_ = 0;
    unsigned long long count_ = 0;
};

} // namespace omegalab
