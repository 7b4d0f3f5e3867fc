#pragma once

// Snapshot generator for a parametric 1-D wave equation u_tt = c^2 u_xx on
// [0, 1] with fixed ends and a smooth pulse initial condition. One frontal
// slice per wave speed: space x time snapshots on a shared time grid.

#include <vector>

#include "starm/tensor3.hpp"

namespace starm {

struct WaveConfig {
    Index n_space = 64;           // grid nodes, boundaries included
    Index n_time = 31;            // snapshot count, t = 0 included
    std::vector<double> speeds;   // one slice per speed
    double t_final = 2.0;
    double cfl_safety = 0.9;      // fraction of the stability limit
    double pulse_center = 0.4;
    double pulse_width = 0.1;
};

struct WaveResult {
    Tensor3d snapshots;           // n_space x n_time x n_speeds
    std::vector<double> dt_used;  // internal step per speed after adjustment
};

WaveResult wave_snapshots(const WaveConfig& config);

std::vector<double> equispaced_speeds(double lo, double hi, Index count);

}  // namespace starm
