#ifndef ISTL_INTERVAL_HPP
#define ISTL_INTERVAL_HPP

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "istl/errors.hpp"

namespace istl {

// Closed real interval [lo, hi]. Endpoints are plain doubles computed in the
// default rounding mode: there is no outward rounding, so results are exact
// only up to floating-point error. Infinite endpoints are allowed; NaN is not.
class interval {
public:
    constexpr interval() noexcept = default;

    // Degenerate interval [v, v].
    explicit interval(double v) : interval(v, v) {}

    interval(double lo, double hi) : lo_(lo), hi_(hi) {
        if (std::isnan(lo) || std::isnan(hi)) {
            throw construction_error("interval endpoint is NaN");
        }
        if (lo > hi) {
            throw construction_error("interval lower endpoint " + std::to_string(lo) +
                                     " exceeds upper endpoint " + std::to_string(hi));
        }
    }

    // Skips validation; callers guarantee lo <= hi and no NaN. Used on hot
    // paths whose endpoints come from already-valid intervals.
    static constexpr interval from_ordered(double lo, double hi) noexcept {
        interval r;
        r.lo_ = lo;
        r.hi_ = hi;
        return r;
    }

    [[nodiscard]] constexpr double lo() const noexcept { return lo_; }
    [[nodiscard]] constexpr double hi() const noexcept { return hi_; }

    [[nodiscard]] constexpr double width() const noexcept { return hi_ - lo_; }
    [[nodiscard]] constexpr double midpoint() const noexcept { return 0.5 * (lo_ + hi_); }
    [[nodiscard]] constexpr bool degenerate() const noexcept { return lo_ == hi_; }

    [[nodiscard]] constexpr bool contains(double x) const noexcept { return lo_ <= x && x <= hi_; }
    [[nodiscard]] constexpr bool subset_of(const interval& other) const noexcept {
        return other.lo_ <= lo_ && hi_ <= other.hi_;
    }

    friend constexpr bool operator==(const interval&, const interval&) noexcept = default;

private:
    double lo_ = 0.0;
    double hi_ = 0.0;
};

using interval_vector = std::vector<interval>;

inline interval make_interval(double lo, double hi) { return interval(lo, hi); }

[[nodiscard]] constexpr bool contains(const interval& a, double x) noexcept { return a.contains(x); }
[[nodiscard]] constexpr bool subset(const interval& a, const interval& b) noexcept {
    return a.subset_of(b);
}
[[nodiscard]] constexpr double width(const interval& a) noexcept { return a.width(); }
[[nodiscard]] constexpr double midpoint(const interval& a) noexcept { return a.midpoint(); }

namespace detail {

inline double checked_sum(double a, double b) {
    const double s = a + b;
    if (std::isnan(s)) {
        throw indeterminate_form("interval sum of opposite infinities");
    }
    return s;
}

inline double checked_product(double a, double b) {
    if ((std::isinf(a) && b == 0.0) || (std::isinf(b) && a == 0.0)) {
        throw indeterminate_form("interval product produced an infinity-times-zero corner");
    }
    return a * b;
}

} // namespace detail

inline interval operator-(const interval& a) { return interval::from_ordered(-a.hi(), -a.lo()); }

inline interval operator+(const interval& a, const interval& b) {
    return interval(detail::checked_sum(a.lo(), b.lo()), detail::checked_sum(a.hi(), b.hi()));
}

inline interval operator-(const interval& a, const interval& b) { return a + (-b); }

inline interval operator+(const interval& a, double b) { return a + interval(b); }
inline interval operator-(const interval& a, double b) { return a - interval(b); }

// Minimal inclusion of scalar multiplication: hull of the four corner products.
inline interval operator*(const interval& a, const interval& b) {
    const double p1 = detail::checked_product(a.lo(), b.lo());
    const double p2 = detail::checked_product(a.lo(), b.hi());
    const double p3 = detail::checked_product(a.hi(), b.lo());
    const double p4 = detail::checked_product(a.hi(), b.hi());
    return interval(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

inline interval scale(const interval& a, double c) {
    const double l = detail::checked_product(a.lo(), c);
    const double h = detail::checked_product(a.hi(), c);
    return c < 0.0 ? interval(h, l) : interval(l, h);
}

inline interval operator*(const interval& a, double c) { return scale(a, c); }
inline interval operator*(double c, const interval& a) { return scale(a, c); }

inline interval add(const interval& a, const interval& b) { return a + b; }
inline interval sub(const interval& a, const interval& b) { return a - b; }
inline interval neg(const interval& a) { return -a; }
inline interval mul(const interval& a, const interval& b) { return a * b; }

// [min]([a],[b]) = [min(lo), min(hi)], folded left over the arguments.
inline interval min_inc(std::span<const interval> args) {
    if (args.empty()) {
        throw empty_argument("min_inc requires at least one interval");
    }
    double lo = args.front().lo();
    double hi = args.front().hi();
    for (const auto& a : args.subspan(1)) {
        lo = std::min(lo, a.lo());
        hi = std::min(hi, a.hi());
    }
    return interval::from_ordered(lo, hi);
}

// [max]([a],[b]) = [max(lo), max(hi)], folded left over the arguments.
inline interval max_inc(std::span<const interval> args) {
    if (args.empty()) {
        throw empty_argument("max_inc requires at least one interval");
    }
    double lo = args.front().lo();
    double hi = args.front().hi();
    for (const auto& a : args.subspan(1)) {
        lo = std::max(lo, a.lo());
        hi = std::max(hi, a.hi());
    }
    return interval::from_ordered(lo, hi);
}

inline interval min_inc(std::initializer_list<interval> args) {
    return min_inc(std::span<const interval>(args.begin(), args.size()));
}
inline interval max_inc(std::initializer_list<interval> args) {
    return max_inc(std::span<const interval>(args.begin(), args.size()));
}

inline interval min_inc(const interval& a, const interval& b) {
    return interval::from_ordered(std::min(a.lo(), b.lo()), std::min(a.hi(), b.hi()));
}
inline interval max_inc(const interval& a, const interval& b) {
    return interval::from_ordered(std::max(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

inline interval square(const interval& a) {
    const double l2 = a.lo() * a.lo();
    const double h2 = a.hi() * a.hi();
    const double upper = std::max(l2, h2);
    if (a.lo() <= 0.0 && 0.0 <= a.hi()) {
        return interval(0.0, upper);
    }
    return interval(std::min(l2, h2), upper);
}

inline interval abs(const interval& a) {
    if (a.lo() >= 0.0) {
        return a;
    }
    if (a.hi() <= 0.0) {
        return -a;
    }
    return interval(0.0, std::max(-a.lo(), a.hi()));
}

// Lower endpoints in [-sqrt_clamp_tolerance, 0) are treated as 0.
inline constexpr double sqrt_clamp_tolerance = 1e-12;

inline interval sqrt(const interval& a) {
    if (a.lo() < -sqrt_clamp_tolerance) {
        throw domain_error("sqrt of an interval with negative part [" + std::to_string(a.lo()) +
                           ", " + std::to_string(a.hi()) + "]");
    }
    const double lo = std::max(a.lo(), 0.0);
    const double hi = std::max(a.hi(), 0.0);
    return interval(std::sqrt(lo), std::sqrt(hi));
}

inline std::ostream& operator<<(std::ostream& os, const interval& a) {
    return os << '[' << a.lo() << ", " << a.hi() << ']';
}

} // namespace istl

#endif
