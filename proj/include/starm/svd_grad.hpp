#pragma once

// Reverse-mode derivative of the matrix SVD. Cotangents of the factors are
// pulled back to a cotangent of the matrix, with safeguards where the
// derivative is ill-defined: near-equal singular values zero the affected
// mixing entries (and raise a flag), and inverse singular values below the
// rank threshold contribute nothing.

#include <Eigen/Dense>

#include <cmath>

#include "starm/tensor3.hpp"
#include "starm/tsvdm.hpp"

namespace starm {

// Relative squared-gap threshold below which singular-value pairs count as
// degenerate.
inline constexpr double kGapTol = 1e-8;

template <typename Scalar>
struct SvdGrad {
    MatrixX<Scalar> dA;
    bool degenerate = false;
};

// u: n1 x q with q >= r, v: n2 x q' with q' >= r, sigma: r nonincreasing.
// du, dv, dsigma are cotangents of the corresponding factors; columns past r
// are ignored (they carry no signal for min(n1,n2)-truncated uses).
template <typename Scalar>
SvdGrad<Scalar> svd_grad(const MatrixX<Scalar>& du, const VectorX<Scalar>& dsigma,
                         const MatrixX<Scalar>& dv, const MatrixX<Scalar>& u,
                         const VectorX<Scalar>& sigma, const MatrixX<Scalar>& v) {
    const Index r = sigma.size();
    if (du.cols() < r || dv.cols() < r || dsigma.size() != r || u.cols() < r ||
        v.cols() < r || du.rows() != u.rows() || dv.rows() != v.rows())
        throw std::invalid_argument("svd_grad: factor shape mismatch");

    SvdGrad<Scalar> result;
    const auto ue = u.leftCols(r);
    const auto ve = v.leftCols(r);
    const auto due = du.leftCols(r);
    const auto dve = dv.leftCols(r);

    const Scalar sigma_max = r > 0 ? sigma.maxCoeff() : Scalar(0);
    if (sigma_max == Scalar(0)) {
        result.dA = ue * dsigma.asDiagonal() * ve.transpose();
        result.degenerate = r > 1;
        return result;
    }

    const Scalar gap_tol = Scalar(kGapTol) * sigma_max * sigma_max;
    const Scalar sigma_tol = Scalar(kRankTol) * sigma_max;

    MatrixX<Scalar> f(r, r);
    for (Index i = 0; i < r; ++i) {
        f(i, i) = Scalar(0);
        for (Index j = 0; j < r; ++j) {
            if (i == j) continue;
            const Scalar gap = sigma[j] * sigma[j] - sigma[i] * sigma[i];
            if (std::abs(gap) < gap_tol) {
                f(i, j) = Scalar(0);
                if (std::max(sigma[i], sigma[j]) > sigma_tol)
                    result.degenerate = true;
            } else {
                f(i, j) = Scalar(1) / gap;
            }
        }
    }

    VectorX<Scalar> sigma_inv = sigma.unaryExpr([sigma_tol](Scalar x) {
        return x > sigma_tol ? Scalar(1) / x : Scalar(0);
    });

    MatrixX<Scalar> utdu = ue.transpose() * due;
    MatrixX<Scalar> vtdv = ve.transpose() * dve;
    MatrixX<Scalar> fu = f.cwiseProduct(utdu - utdu.transpose());
    MatrixX<Scalar> fv = f.cwiseProduct(vtdv - vtdv.transpose());

    // Left-factor terms, with the projector expanded to avoid an n1 x n1
    // intermediate.
    MatrixX<Scalar> left = ue * (fu * sigma.asDiagonal());
    left.noalias() += (due - ue * utdu) * sigma_inv.asDiagonal();
    result.dA.noalias() = left * ve.transpose();

    result.dA.noalias() += ue * dsigma.asDiagonal() * ve.transpose();

    MatrixX<Scalar> right = sigma.asDiagonal() * fv * ve.transpose();
    right.noalias() +=
        sigma_inv.asDiagonal() * (dve.transpose() - vtdv.transpose() * ve.transpose());
    result.dA.noalias() += ue * right;

    return result;
}

}  // namespace starm
