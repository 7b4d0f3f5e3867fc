#pragma once

// Tubal SVD under an orthogonal transform: factorization, truncation, rank
// notions, pseudoinverse, operator norm, and the slicewise least-squares
// solver. Everything reduces to matrix SVDs of the transform-domain slices.

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "starm/products.hpp"
#include "starm/tensor3.hpp"
#include "starm/transform.hpp"

namespace starm {

// Relative threshold (against the largest transform-domain singular value)
// below which singular values count as zero.
inline constexpr double kRankTol = 1e-10;

template <typename Scalar>
struct TsvdmFactors {
    Tensor3<Scalar> U;  // n1 x n1 x n3, orthogonal under the product
    Tensor3<Scalar> S;  // n1 x n2 x n3, f-diagonal with ordered singular tubes
    Tensor3<Scalar> V;  // n2 x n2 x n3, orthogonal under the product
    Transform<Scalar> M;
};

using TsvdmFactorsd = TsvdmFactors<double>;

namespace detail {

// Full SVD of one transform-domain slice.
template <typename Scalar>
struct SliceSvd {
    MatrixX<Scalar> U;       // n1 x n1
    MatrixX<Scalar> V;       // n2 x n2
    VectorX<Scalar> sigma;   // min(n1, n2), nonincreasing
};

// Deterministic sign gauge: the largest-magnitude entry of each left singular
// vector is made nonnegative; paired right vectors flip with them. Columns
// beyond the economic rank have no partner and are fixed independently.
template <typename Scalar>
void fix_svd_signs(MatrixX<Scalar>& u, MatrixX<Scalar>& v, Index r) {
    for (Index j = 0; j < r; ++j) {
        Index imax = 0;
        u.col(j).cwiseAbs().maxCoeff(&imax);
        if (u(imax, j) < Scalar(0)) {
            u.col(j) = -u.col(j);
            v.col(j) = -v.col(j);
        }
    }
    for (Index j = r; j < u.cols(); ++j) {
        Index imax = 0;
        u.col(j).cwiseAbs().maxCoeff(&imax);
        if (u(imax, j) < Scalar(0)) u.col(j) = -u.col(j);
    }
    for (Index j = r; j < v.cols(); ++j) {
        Index imax = 0;
        v.col(j).cwiseAbs().maxCoeff(&imax);
        if (v(imax, j) < Scalar(0)) v.col(j) = -v.col(j);
    }
}

template <typename Scalar>
std::vector<SliceSvd<Scalar>> facewise_svd(const Tensor3<Scalar>& a_hat) {
    const Index r = std::min(a_hat.n1(), a_hat.n2());
    std::vector<SliceSvd<Scalar>> slices(static_cast<std::size_t>(a_hat.n3()));
    for (Index k = 0; k < a_hat.n3(); ++k) {
        Eigen::JacobiSVD<MatrixX<Scalar>> svd(
            a_hat.slice(k), Eigen::ComputeFullU | Eigen::ComputeFullV);
        auto& out = slices[static_cast<std::size_t>(k)];
        out.U = svd.matrixU();
        out.V = svd.matrixV();
        out.sigma = svd.singularValues();
        fix_svd_signs(out.U, out.V, r);
    }
    return slices;
}

template <typename Scalar>
Scalar max_singular_value(const std::vector<SliceSvd<Scalar>>& slices) {
    Scalar sigma_max = Scalar(0);
    for (const auto& s : slices)
        if (s.sigma.size() > 0) sigma_max = std::max(sigma_max, s.sigma[0]);
    return sigma_max;
}

}  // namespace detail

template <typename Scalar>
TsvdmFactors<Scalar> tsvdm(const Tensor3<Scalar>& a, const Transform<Scalar>& m) {
    if (a.n3() != m.size())
        throw std::invalid_argument("tsvdm: transform size mismatch");
    const Index n1 = a.n1(), n2 = a.n2(), n3 = a.n3();
    const Index r = std::min(n1, n2);

    Tensor3<Scalar> a_hat = mode3_product(a, m.matrix());
    auto slices = detail::facewise_svd(a_hat);

    Tensor3<Scalar> u_hat(n1, n1, n3);
    Tensor3<Scalar> s_hat = Tensor3<Scalar>::Zero(n1, n2, n3);
    Tensor3<Scalar> v_hat(n2, n2, n3);
    for (Index k = 0; k < n3; ++k) {
        const auto& s = slices[static_cast<std::size_t>(k)];
        u_hat.slice(k) = s.U;
        v_hat.slice(k) = s.V;
        s_hat.slice(k).diagonal().head(r) = s.sigma;
    }

    const MatrixX<Scalar> mt = m.matrix().transpose();
    return TsvdmFactors<Scalar>{mode3_product(u_hat, mt), mode3_product(s_hat, mt),
                                mode3_product(v_hat, mt), m};
}

// First k singular triplets: U(:,0:k,:), S(0:k,0:k,:), V(:,0:k,:).
template <typename Scalar>
TsvdmFactors<Scalar> truncate(const TsvdmFactors<Scalar>& f, Index k) {
    if (k < 1 || k > std::min(f.S.n1(), f.S.n2()))
        throw std::out_of_range("truncate: k out of range");
    return TsvdmFactors<Scalar>{sub_block(f.U, 0, f.U.n1(), 0, k),
                                sub_block(f.S, 0, k, 0, k),
                                sub_block(f.V, 0, f.V.n1(), 0, k), f.M};
}

template <typename Scalar>
Tensor3<Scalar> low_rank_approx(const Tensor3<Scalar>& a,
                                const Transform<Scalar>& m, Index k) {
    if (k < 1 || k > std::min(a.n1(), a.n2()))
        throw std::out_of_range("low_rank_approx: k out of range");
    Tensor3<Scalar> a_hat = mode3_product(a, m.matrix());
    auto slices = detail::facewise_svd(a_hat);
    Tensor3<Scalar> approx_hat(a.n1(), a.n2(), a.n3());
    for (Index i = 0; i < a.n3(); ++i) {
        const auto& s = slices[static_cast<std::size_t>(i)];
        approx_hat.slice(i).noalias() = s.U.leftCols(k) *
                                        s.sigma.head(k).asDiagonal() *
                                        s.V.leftCols(k).transpose();
    }
    return mode3_product(approx_hat, m.matrix().transpose());
}

// Number of singular tubes with norm above the relative threshold.
template <typename Scalar>
Index t_rank(const Tensor3<Scalar>& a, const Transform<Scalar>& m) {
    Tensor3<Scalar> a_hat = mode3_product(a, m.matrix());
    auto slices = detail::facewise_svd(a_hat);
    const Scalar sigma_max = detail::max_singular_value(slices);
    const Index r = std::min(a.n1(), a.n2());
    Index rank = 0;
    for (Index i = 0; i < r; ++i) {
        Scalar tube_sq = Scalar(0);
        for (const auto& s : slices) tube_sq += s.sigma[i] * s.sigma[i];
        if (std::sqrt(tube_sq) > Scalar(kRankTol) * sigma_max) ++rank;
    }
    return rank;
}

// Sum over slices of the transform-domain matrix ranks.
template <typename Scalar>
Index implicit_rank(const Tensor3<Scalar>& a, const Transform<Scalar>& m) {
    Tensor3<Scalar> a_hat = mode3_product(a, m.matrix());
    auto slices = detail::facewise_svd(a_hat);
    const Scalar threshold =
        Scalar(kRankTol) * detail::max_singular_value(slices);
    Index total = 0;
    for (const auto& s : slices)
        total += (s.sigma.array() > threshold).count();
    return total;
}

// V * S^+ * U^T with the slicewise Moore-Penrose inverse taken in the
// transform domain.
template <typename Scalar>
Tensor3<Scalar> pseudoinverse(const Tensor3<Scalar>& a,
                              const Transform<Scalar>& m) {
    Tensor3<Scalar> a_hat = mode3_product(a, m.matrix());
    auto slices = detail::facewise_svd(a_hat);
    const Scalar threshold =
        Scalar(kRankTol) * detail::max_singular_value(slices);
    Tensor3<Scalar> pinv_hat(a.n2(), a.n1(), a.n3());
    for (Index i = 0; i < a.n3(); ++i) {
        const auto& s = slices[static_cast<std::size_t>(i)];
        VectorX<Scalar> inv = s.sigma.unaryExpr([threshold](Scalar x) {
            return x > threshold ? Scalar(1) / x : Scalar(0);
        });
        const Index r = s.sigma.size();
        pinv_hat.slice(i).noalias() = s.V.leftCols(r) * inv.asDiagonal() *
                                      s.U.leftCols(r).transpose();
    }
    return mode3_product(pinv_hat, m.matrix().transpose());
}

// Largest singular value across all transform-domain slices.
template <typename Scalar>
Scalar operator_norm(const Tensor3<Scalar>& a, const Transform<Scalar>& m) {
    Tensor3<Scalar> a_hat = mode3_product(a, m.matrix());
    Scalar sigma_max = Scalar(0);
    for (Index k = 0; k < a.n3(); ++k) {
        Eigen::JacobiSVD<MatrixX<Scalar>> svd(a_hat.slice(k));
        if (svd.singularValues().size() > 0)
            sigma_max = std::max(sigma_max, svd.singularValues()[0]);
    }
    return sigma_max;
}

// Slicewise least-squares solution of A * X = B in the transform domain.
// With lambda == 0 rank-deficient slices get the minimum-norm solution;
// with lambda > 0 the ridge-regularized system is solved instead.
template <typename Scalar>
Tensor3<Scalar> solve_normal_equations(const Tensor3<Scalar>& a,
                                       const Tensor3<Scalar>& b,
                                       const Transform<Scalar>& m,
                                       Scalar lambda = Scalar(0)) {
    if (a.n1() != b.n1() || a.n3() != b.n3() || a.n3() != m.size())
        throw std::invalid_argument("solve_normal_equations: dimension mismatch");
    const Index p = a.n2();
    Tensor3<Scalar> a_hat = mode3_product(a, m.matrix());
    Tensor3<Scalar> b_hat = mode3_product(b, m.matrix());
    Tensor3<Scalar> x_hat(p, b.n2(), a.n3());
    for (Index i = 0; i < a.n3(); ++i) {
        if (lambda > Scalar(0)) {
            MatrixX<Scalar> gram = a_hat.slice(i).transpose() * a_hat.slice(i);
            gram.diagonal().array() += lambda;
            x_hat.slice(i) = Eigen::LDLT<MatrixX<Scalar>>(gram).solve(
                a_hat.slice(i).transpose() * b_hat.slice(i));
        } else {
            Eigen::JacobiSVD<MatrixX<Scalar>> svd(
                a_hat.slice(i), Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Scalar threshold = svd.singularValues().size() > 0
                                         ? Scalar(kRankTol) * svd.singularValues()[0]
                                         : Scalar(0);
            VectorX<Scalar> inv =
                svd.singularValues().unaryExpr([threshold](Scalar x) {
                    return x > threshold ? Scalar(1) / x : Scalar(0);
                });
            x_hat.slice(i).noalias() =
                svd.matrixV() * inv.asDiagonal() *
                (svd.matrixU().transpose() * b_hat.slice(i));
        }
    }
    return mode3_product(x_hat, m.matrix().transpose());
}

}  // namespace starm
