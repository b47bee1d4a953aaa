#ifndef ISTL_SLIDING_WINDOW_HPP
#define ISTL_SLIDING_WINDOW_HPP

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace istl {

// Monotone-wedge sliding window extremum (Lemire). out[i] is the extremum of
// in[i + offset .. i + offset + width - 1] for i in [0, count). Each input
// element enters and leaves the wedge once, so the cost is O(count + width).
// Better(a, b) returns true when a strictly beats b. Ties keep the earliest
// element, which matches a left fold with std::min / std::max bit for bit
// (signed zeros included).
template <class Better>
std::vector<double> sliding_extremum(std::span<const double> in, std::size_t offset,
                                     std::size_t width, std::size_t count, Better better) {
    std::vector<double> out(count);
    if (count == 0) {
        return out;
    }
    std::deque<std::size_t> wedge;
    const std::size_t first = offset;
    const std::size_t last = offset + count - 1 + width - 1;  // inclusive
    std::size_t next = first;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t lo = offset + i;
        const std::size_t hi = lo + width - 1;
        for (; next <= hi && next <= last; ++next) {
            while (!wedge.empty() && better(in[next], in[wedge.back()])) {
                wedge.pop_back();
            }
            wedge.push_back(next);
        }
        while (wedge.front() < lo) {
            wedge.pop_front();
        }
        out[i] = in[wedge.front()];
    }
    return out;
}

inline std::vector<double> sliding_min(std::span<const double> in, std::size_t offset,
                                       std::size_t width, std::size_t count) {
    return sliding_extremum(in, offset, width, count, std::less<double>{});
}

inline std::vector<double> sliding_max(std::span<const double> in, std::size_t offset,
                                       std::size_t width, std::size_t count) {
    return sliding_extremum(in, offset, width, count, std::greater<double>{});
}

} // namespace istl

#endif
