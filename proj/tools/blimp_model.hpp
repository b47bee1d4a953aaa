// Synthetic stand-in for a miniature blimp flight: a damped point mass in 3D
// tracking four way-points in the xy-plane with a PD controller, plus a
// seeded gust disturbance. Sampled at dt = 0.2 s.
#ifndef ISTL_TOOLS_BLIMP_MODEL_HPP
#define ISTL_TOOLS_BLIMP_MODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "istl/trace.hpp"

namespace blimp {

struct params {
    double dt = 0.2;
    double kp = 1.5;
    double kd = 0.35;
    double max_accel = 3.0;
    double gust = 0.35;   // std of the per-step acceleration disturbance
    double dwell = 12.0;  // seconds spent on each way-point
    double altitude = 1.0;
};

inline istl::trace simulate(std::size_t samples, std::uint64_t seed, const params& p = {}) {
    static constexpr std::array<std::array<double, 2>, 4> waypoints{
        {{0.0, 1.51}, {1.51, 0.0}, {0.0, -1.51}, {-1.51, 0.0}}};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gust(0.0, p.gust);

    std::array<double, 3> pos{0.0, 0.0, p.altitude};
    std::array<double, 3> vel{0.0, 0.0, 0.0};
    std::vector<std::vector<double>> rows;
    rows.reserve(samples);
    const auto per_waypoint = static_cast<std::size_t>(std::lround(p.dwell / p.dt));
    for (std::size_t k = 0; k < samples; ++k) {
        rows.push_back({pos[0], pos[1], pos[2], vel[0], vel[1], vel[2]});
        const auto& wp = waypoints[(k / per_waypoint) % waypoints.size()];
        const std::array<double, 3> target{wp[0], wp[1], p.altitude};
        for (std::size_t i = 0; i < 3; ++i) {
            double a = p.kp * (target[i] - pos[i]) - p.kd * vel[i];
            a = std::clamp(a, -p.max_accel, p.max_accel) + (i < 2 ? gust(rng) : 0.2 * gust(rng));
            vel[i] += p.dt * a;
            pos[i] += p.dt * vel[i];
        }
    }
    return istl::trace({"x", "y", "z", "vx", "vy", "vz"}, std::move(rows));
}

} // namespace blimp

#endif
