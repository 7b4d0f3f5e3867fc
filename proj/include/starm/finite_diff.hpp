#pragma once

// Central finite-difference checks for analytic gradients, over random
// Euclidean directions or random geodesics on the orthogonal group.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>

#include "starm/tensor3.hpp"
#include "starm/transform.hpp"

namespace starm {

enum class FdMode { Euclidean, Geodesic };

struct FdOptions {
    int directions = 10;
    std::uint64_t seed = 1;
    double step = 0.0;  // 0 selects 1e-6 * (1 + |x|_F)
};

namespace detail {

// Directional mismatch relative to the larger of the two directional values
// and the gradient scale; a near-orthogonal random direction must not turn
// finite-difference noise into a spurious failure.
inline double fd_relative_error(double analytic, double numeric, double gscale,
                                double fscale) {
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), gscale});
    if (denom < 1e-12 * fscale) return std::abs(analytic - numeric);
    return std::abs(analytic - numeric) / denom;
}

}  // namespace detail

inline double finite_diff_check(
    const std::function<double(const Eigen::MatrixXd&)>& f,
    const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad,
    FdMode mode = FdMode::Euclidean, FdOptions opts = {}) {
    const double h = opts.step > 0.0 ? opts.step : 1e-6 * (1.0 + x.norm());
    const double scale = 1.0 + std::abs(f(x));
    detail::GaussianSampler gauss(opts.seed);

    double worst = 0.0;
    for (int trial = 0; trial < opts.directions; ++trial) {
        Eigen::MatrixXd dir(x.rows(), x.cols());
        for (Index j = 0; j < x.cols(); ++j)
            for (Index i = 0; i < x.rows(); ++i) dir(i, j) = gauss();

        double analytic, numeric, gscale;
        if (mode == FdMode::Geodesic) {
            Eigen::MatrixXd omega = 0.5 * (dir - dir.transpose().eval());
            omega /= std::max(omega.norm(), 1e-300);
            analytic = grad.cwiseProduct(x * omega).sum();
            gscale = (x * omega).norm() * grad.norm();
            Eigen::MatrixXd step_fw = (h * omega).exp();
            numeric = (f(x * step_fw) - f(x * step_fw.transpose())) / (2.0 * h);
        } else {
            dir /= std::max(dir.norm(), 1e-300);
            analytic = grad.cwiseProduct(dir).sum();
            gscale = grad.norm();
            numeric = (f(x + h * dir) - f(x - h * dir)) / (2.0 * h);
        }
        worst = std::max(worst,
                         detail::fd_relative_error(analytic, numeric, gscale, scale));
    }
    return worst;
}

inline double finite_diff_check(const std::function<double(const Tensor3d&)>& f,
                                const Tensor3d& x, const Tensor3d& grad,
                                FdOptions opts = {}) {
    const double h =
        opts.step > 0.0 ? opts.step : 1e-6 * (1.0 + frobenius_norm(x));
    const double scale = 1.0 + std::abs(f(x));
    detail::GaussianSampler gauss(opts.seed);

    double worst = 0.0;
    for (int trial = 0; trial < opts.directions; ++trial) {
        Tensor3d dir(x.n1(), x.n2(), x.n3());
        for (Index i = 0; i < dir.size(); ++i) dir.storage()[i] = gauss();
        dir *= 1.0 / std::max(frobenius_norm(dir), 1e-300);

        const double analytic = inner(grad, dir);
        Tensor3d forward = x;
        forward += h * dir;
        Tensor3d backward = x;
        backward -= h * dir;
        const double numeric = (f(forward) - f(backward)) / (2.0 * h);
        worst = std::max(worst, detail::fd_relative_error(analytic, numeric,
                                                          frobenius_norm(grad),
                                                          scale));
    }
    return worst;
}

}  // namespace starm
