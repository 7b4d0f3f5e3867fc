#include "starm/wave.hpp"

#include <cmath>
#include <stdexcept>

namespace starm {

namespace {

double pulse(double x, double center, double width) {
    const double z = (x - center) / width;
    return std::exp(-z * z);
}

}  // namespace

std::vector<double> equispaced_speeds(double lo, double hi, Index count) {
    if (count < 1) throw std::invalid_argument("equispaced_speeds: empty range");
    std::vector<double> speeds(static_cast<std::size_t>(count));
    if (count == 1) {
        speeds[0] = lo;
        return speeds;
    }
    for (Index i = 0; i < count; ++i)
        speeds[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return speeds;
}

WaveResult wave_snapshots(const WaveConfig& config) {
    if (config.n_space < 3 || config.n_time < 2 || config.speeds.empty())
        throw std::invalid_argument("wave_snapshots: invalid configuration");
    if (config.cfl_safety <= 0.0 || config.cfl_safety > 1.0)
        throw std::invalid_argument("wave_snapshots: cfl_safety must be in (0, 1]");

    const Index n = config.n_space;
    const double dx = 1.0 / static_cast<double>(n - 1);
    const double snap_dt =
        config.t_final / static_cast<double>(config.n_time - 1);

    WaveResult result;
    result.snapshots =
        Tensor3d(n, config.n_time, static_cast<Index>(config.speeds.size()));
    result.dt_used.reserve(config.speeds.size());

    std::vector<double> prev(static_cast<std::size_t>(n));
    std::vector<double> curr(static_cast<std::size_t>(n));
    std::vector<double> next(static_cast<std::size_t>(n));

    for (std::size_t s = 0; s < config.speeds.size(); ++s) {
        const double c = config.speeds[s];
        if (c <= 0.0)
            throw std::invalid_argument("wave_snapshots: speeds must be positive");

        // Subdivide the snapshot interval until the stability bound holds.
        const double dt_limit = config.cfl_safety * dx / c;
        const auto substeps =
            static_cast<Index>(std::ceil(snap_dt / dt_limit - 1e-12));
        const double dt = snap_dt / static_cast<double>(std::max<Index>(substeps, 1));
        result.dt_used.push_back(dt);
        const double lambda2 = (c * dt / dx) * (c * dt / dx);

        for (Index j = 0; j < n; ++j)
            curr[static_cast<std::size_t>(j)] =
                pulse(static_cast<double>(j) * dx, config.pulse_center,
                      config.pulse_width);
        curr.front() = 0.0;
        curr.back() = 0.0;

        // First step from zero initial velocity: a half-weighted update.
        prev = curr;
        auto slice = result.snapshots.slice(static_cast<Index>(s));
        for (Index j = 0; j < n; ++j) slice(j, 0) = curr[static_cast<std::size_t>(j)];

        bool first_step = true;
        for (Index snap = 1; snap < config.n_time; ++snap) {
            for (Index step = 0; step < std::max<Index>(substeps, 1); ++step) {
                next.front() = 0.0;
                next.back() = 0.0;
                for (Index j = 1; j + 1 < n; ++j) {
                    const auto ju = static_cast<std::size_t>(j);
                    const double lap =
                        curr[ju + 1] - 2.0 * curr[ju] + curr[ju - 1];
                    if (first_step)
                        next[ju] = curr[ju] + 0.5 * lambda2 * lap;
                    else
                        next[ju] = 2.0 * curr[ju] - prev[ju] + lambda2 * lap;
                }
                first_step = false;
                std::swap(prev, curr);
                std::swap(curr, next);
            }
            for (Index j = 0; j < n; ++j)
                slice(j, snap) = curr[static_cast<std::size_t>(j)];
        }
    }
    return result;
}

}  // namespace starm
