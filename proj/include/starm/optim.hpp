#pragma once

// Gradient descent on the orthogonal group for the two reduced objectives.
// The inner representation is always eliminated through its closed-form
// optimum (slicewise least squares or truncated factorization), so the outer
// iteration only moves the transform. An alternating-descent baseline on the
// full objective is provided for comparison.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <chrono>
#include <cstdint>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "starm/autodiff.hpp"
#include "starm/products.hpp"
#include "starm/tensor3.hpp"
#include "starm/transform.hpp"
#include "starm/tsvdm.hpp"

namespace starm {

struct Objective {
    enum class Kind { Regression, LowRank };

    Kind kind = Kind::Regression;
    Tensor3d A;
    Tensor3d B;        // observations; regression only
    Index k = 0;       // truncation; low-rank only
    double lambda = 0; // ridge weight; regression only

    static Objective regression(Tensor3d a, Tensor3d b, double lambda = 0.0) {
        if (a.n1() != b.n1() || a.n3() != b.n3())
            throw std::invalid_argument("Objective: A and B dimensions conflict");
        if (lambda < 0.0)
            throw std::invalid_argument("Objective: lambda must be nonnegative");
        Objective obj;
        obj.kind = Kind::Regression;
        obj.A = std::move(a);
        obj.B = std::move(b);
        obj.lambda = lambda;
        return obj;
    }

    static Objective low_rank(Tensor3d a, Index k) {
        if (k < 1 || k > std::min(a.n1(), a.n2()))
            throw std::invalid_argument("Objective: k out of range");
        Objective obj;
        obj.kind = Kind::LowRank;
        obj.A = std::move(a);
        obj.k = k;
        return obj;
    }
};

enum class StepRule { Fixed, Backtracking };
enum class StopNorm { Riemannian, Euclidean };

struct OptimConfig {
    int max_iters = 1000;
    double grad_tol = 1e-10;
    StepRule step_rule = StepRule::Backtracking;
    double alpha0 = 1.0;  // fixed step size, or the line-search start
    double shrink = 0.5;
    double armijo_c = 1e-4;
    int max_backtracks = 50;
    StopNorm stop_norm = StopNorm::Riemannian;
    std::uint64_t seed = 0;  // recorded by the harness; the solver is deterministic
    int log_every = 1;
    // Called once per recorded iterate with the current transform.
    std::function<void(int, const Eigen::MatrixXd&)> observer;
};

struct OptimRecord {
    int iter = 0;
    double objective = 0;
    double riem_grad_norm = 0;
    double eucl_grad_norm = 0;
    double step = 0;  // step accepted when leaving this iterate
    double elapsed_s = 0;
};

struct OptimTrace {
    std::vector<OptimRecord> records;
    Eigen::MatrixXd m;  // final transform
    Tensor3d x;         // final representation X(M) (or X for the baseline)
    bool converged = false;
    bool line_search_failed = false;
};

// Projection of a Euclidean gradient onto the tangent space at m: m * skew
// part of m^T g.
inline Eigen::MatrixXd riemannian_gradient(const Eigen::MatrixXd& m,
                                           const Eigen::MatrixXd& g) {
    Eigen::MatrixXd mtg = m.transpose() * g;
    return m * (0.5 * (mtg - mtg.transpose()).eval());
}

// Exponential retraction m * exp(omega) for skew omega. Slightly asymmetric
// inputs are projected onto their skew part; gross asymmetry is reported.
inline Eigen::MatrixXd retract(const Eigen::MatrixXd& m,
                               const Eigen::MatrixXd& omega) {
    if (m.rows() != omega.rows() || m.cols() != omega.cols())
        throw std::invalid_argument("retract: shape mismatch");
    Eigen::MatrixXd skew = 0.5 * (omega - omega.transpose().eval());
    const double asym = (omega - skew).norm();
    if (asym > 1e-12 * (1.0 + omega.norm()))
        std::cerr << "retract: input asymmetry " << asym
                  << " exceeds tolerance; using the skew part\n";
    return m * skew.exp();
}

namespace detail {

struct Forward {
    double value = 0;
    Tensor3d x;
    Tensor3d residual;  // regression: A*X - B
    GradContextd ctx;   // low-rank: cached factorization
};

inline Forward forward_eval(const Objective& obj, const Eigen::MatrixXd& m_mat) {
    Transformd m(m_mat, TransformKind::Learned);
    Forward fwd;
    if (obj.kind == Objective::Kind::Regression) {
        fwd.x = solve_normal_equations(obj.A, obj.B, m, obj.lambda);
        fwd.residual = starm_product(obj.A, fwd.x, m) - obj.B;
        const double rnorm = frobenius_norm(fwd.residual);
        fwd.value = 0.5 * rnorm * rnorm;
        if (obj.lambda > 0.0) {
            const double xnorm = frobenius_norm(fwd.x);
            fwd.value += 0.5 * obj.lambda * xnorm * xnorm;
        }
    } else {
        fwd.ctx = make_grad_context(obj.A, m, obj.k);
        Tensor3d approx_hat(obj.A.n1(), obj.A.n2(), obj.A.n3());
        for (Index i = 0; i < obj.A.n3(); ++i) {
            const auto& s = fwd.ctx.slices[static_cast<std::size_t>(i)];
            approx_hat.slice(i).noalias() = s.U.leftCols(obj.k) *
                                            s.sigma.head(obj.k).asDiagonal() *
                                            s.V.leftCols(obj.k).transpose();
        }
        fwd.x = mode3_product(approx_hat, Eigen::MatrixXd(m_mat.transpose()));
        fwd.residual = obj.A - fwd.x;
        const double rnorm = frobenius_norm(fwd.residual);
        fwd.value = 0.5 * rnorm * rnorm;
    }
    return fwd;
}

inline Eigen::MatrixXd gradient_eval(const Objective& obj,
                                     const Eigen::MatrixXd& m_mat,
                                     const Forward& fwd) {
    if (obj.kind == Objective::Kind::Regression) {
        Transformd m(m_mat, TransformKind::Learned);
        Tensor3d approx = fwd.residual + obj.B;  // A*X
        Tensor3d rx = starm_product(fwd.residual, starm_transpose(fwd.x), m);
        Eigen::MatrixXd g =
            m_mat * (approx.flat().transpose() * fwd.residual.flat() +
                     rx.flat().transpose() * obj.A.flat());
        // The ridge term couples through the inner optimum: the model-side
        // cotangent A^T * R equals -lambda * X there.
        if (obj.lambda > 0.0)
            g.noalias() -=
                obj.lambda * m_mat * (fwd.x.flat().transpose() * fwd.x.flat());
        return g;
    }
    Transformd m(m_mat, TransformKind::Learned);
    Tensor3d r = -1.0 * fwd.residual;  // -(A - A_k)
    return tsvdm_grad_wrt_M(r, obj.A, m, obj.k, fwd.ctx);
}

inline Eigen::MatrixXd polar_orthogonalize(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

inline void check_config(const OptimConfig& cfg) {
    if (cfg.alpha0 <= 0.0 || cfg.shrink <= 0.0 || cfg.shrink >= 1.0 ||
        cfg.armijo_c <= 0.0 || cfg.armijo_c >= 1.0 || cfg.max_iters < 0)
        throw std::invalid_argument("OptimConfig: invalid parameters");
}

}  // namespace detail

// Reduced objective value and the eliminated representation X(M).
inline std::pair<double, Tensor3d> reduced_objective(const Objective& obj,
                                                     const Transformd& m) {
    auto fwd = detail::forward_eval(obj, m.matrix());
    return {fwd.value, std::move(fwd.x)};
}

// Euclidean gradient of the reduced objective at m, given the inner optimum
// x previously computed for this m.
inline Eigen::MatrixXd euclidean_gradient(const Objective& obj,
                                          const Transformd& m,
                                          const Tensor3d& x) {
    detail::Forward fwd;
    fwd.x = x;
    if (obj.kind == Objective::Kind::Regression) {
        fwd.residual = starm_product(obj.A, x, m) - obj.B;
    } else {
        fwd.ctx = make_grad_context(obj.A, m, obj.k);
        fwd.residual = obj.A - x;
    }
    return detail::gradient_eval(obj, m.matrix(), fwd);
}

inline OptimTrace optimize(const Objective& obj, const Transformd& m0,
                           const OptimConfig& cfg) {
    detail::check_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    };

    OptimTrace trace;
    Eigen::MatrixXd m = m0.matrix();
    detail::Forward fwd = detail::forward_eval(obj, m);

    for (int iter = 0;; ++iter) {
        Eigen::MatrixXd g = detail::gradient_eval(obj, m, fwd);
        Eigen::MatrixXd mtg = m.transpose() * g;
        Eigen::MatrixXd omega = 0.5 * (mtg - mtg.transpose().eval());
        const double riem_norm = omega.norm();
        const double eucl_norm = g.norm();

        trace.records.push_back(
            {iter, fwd.value, riem_norm, eucl_norm, 0.0, elapsed()});
        if (cfg.observer) cfg.observer(iter, m);

        const double stop_value =
            cfg.stop_norm == StopNorm::Riemannian ? riem_norm : eucl_norm;
        if (stop_value <= cfg.grad_tol) {
            trace.converged = true;
            break;
        }
        if (iter >= cfg.max_iters) break;

        double alpha = cfg.alpha0;
        if (cfg.step_rule == StepRule::Fixed) {
            m = m * (-alpha * omega).exp();
            fwd = detail::forward_eval(obj, m);
        } else {
            bool accepted = false;
            for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
                Eigen::MatrixXd m_trial = m * (-alpha * omega).exp();
                detail::Forward trial = detail::forward_eval(obj, m_trial);
                if (trial.value <=
                    fwd.value - cfg.armijo_c * alpha * riem_norm * riem_norm) {
                    m = std::move(m_trial);
                    fwd = std::move(trial);
                    accepted = true;
                    break;
                }
                alpha *= cfg.shrink;
            }
            if (!accepted) {
                trace.line_search_failed = true;
                break;
            }
        }
        trace.records.back().step = alpha;

        if (orthogonality_residual(Eigen::MatrixXd(m)) > 1e-12)
            m = detail::polar_orthogonalize(m);
    }

    trace.m = std::move(m);
    trace.x = std::move(fwd.x);
    return trace;
}

// Alternating descent on the full objective: a gradient step in the
// representation, then one in the transform, each with its own line search.
// Regression objectives only. The recorded gradient norms combine both
// blocks so traces are comparable with optimize().
inline OptimTrace alternating_descent(const Objective& obj, const Transformd& m0,
                                      const Tensor3d& x0,
                                      const OptimConfig& cfg) {
    if (obj.kind != Objective::Kind::Regression)
        throw std::invalid_argument("alternating_descent: regression only");
    detail::check_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    };

    Eigen::MatrixXd m_mat = m0.matrix();
    Tensor3d x = x0;

    auto full_value = [&obj](const Eigen::MatrixXd& m, const Tensor3d& z) {
        Transformd t(m, TransformKind::Learned);
        const double rnorm =
            frobenius_norm(starm_product(obj.A, z, t) - obj.B);
        double value = 0.5 * rnorm * rnorm;
        if (obj.lambda > 0.0) {
            const double znorm = frobenius_norm(z);
            value += 0.5 * obj.lambda * znorm * znorm;
        }
        return value;
    };

    OptimTrace trace;
    double value = full_value(m_mat, x);

    for (int iter = 0;; ++iter) {
        Transformd m(m_mat, TransformKind::Learned);
        Tensor3d residual = starm_product(obj.A, x, m) - obj.B;
        Tensor3d gx = starm_product(starm_transpose(obj.A), residual, m);
        if (obj.lambda > 0.0) gx += obj.lambda * x;
        // The ridge term has no direct M dependence, so gm needs no extra piece.
        auto gm = grad_starm(residual, obj.A, x, m).dM;
        Eigen::MatrixXd mtg = m_mat.transpose() * gm;
        Eigen::MatrixXd omega = 0.5 * (mtg - mtg.transpose().eval());
        const double gx_norm = frobenius_norm(gx);
        const double riem_combined =
            std::sqrt(omega.squaredNorm() + gx_norm * gx_norm);
        const double eucl_combined =
            std::sqrt(gm.squaredNorm() + gx_norm * gx_norm);

        trace.records.push_back(
            {iter, value, riem_combined, eucl_combined, 0.0, elapsed()});

        const double stop_value =
            cfg.stop_norm == StopNorm::Riemannian ? riem_combined : eucl_combined;
        if (stop_value <= cfg.grad_tol) {
            trace.converged = true;
            break;
        }
        if (iter >= cfg.max_iters) break;

        // Representation step. A block whose gradient sits at rounding level
        // cannot support a measurable decrease and is left alone.
        const double block_floor = 1e-13 * (1.0 + std::abs(value));
        double beta = cfg.alpha0;
        bool accepted = cfg.step_rule == StepRule::Fixed || gx_norm <= block_floor;
        if (cfg.step_rule == StepRule::Fixed) {
            x -= beta * gx;
        } else if (!accepted) {
            for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
                Tensor3d x_trial = x - beta * gx;
                const double trial = full_value(m_mat, x_trial);
                if (trial <= value - cfg.armijo_c * beta * gx_norm * gx_norm) {
                    x = std::move(x_trial);
                    value = trial;
                    accepted = true;
                    break;
                }
                beta *= cfg.shrink;
            }
        }
        if (!accepted) {
            trace.line_search_failed = true;
            break;
        }

        // Transform step at the updated representation.
        residual = starm_product(obj.A, x, m) - obj.B;
        gm = grad_starm(residual, obj.A, x, m).dM;
        mtg = m_mat.transpose() * gm;
        omega = 0.5 * (mtg - mtg.transpose().eval());
        const double omega_norm = omega.norm();

        double alpha = cfg.alpha0;
        accepted = cfg.step_rule == StepRule::Fixed || omega_norm <= block_floor;
        if (cfg.step_rule == StepRule::Fixed) {
            m_mat = m_mat * (-alpha * omega).exp();
            value = full_value(m_mat, x);
        } else if (!accepted) {
            for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
                Eigen::MatrixXd m_trial = m_mat * (-alpha * omega).exp();
                const double trial = full_value(m_trial, x);
                if (trial <= value - cfg.armijo_c * alpha * omega_norm * omega_norm) {
                    m_mat = std::move(m_trial);
                    value = trial;
                    accepted = true;
                    break;
                }
                alpha *= cfg.shrink;
            }
        }
        if (!accepted) {
            trace.line_search_failed = true;
            break;
        }
        trace.records.back().step = alpha;

        if (orthogonality_residual(Eigen::MatrixXd(m_mat)) > 1e-12)
            m_mat = detail::polar_orthogonalize(m_mat);
    }

    trace.m = std::move(m_mat);
    trace.x = std::move(x);
    return trace;
}

}  // namespace starm
