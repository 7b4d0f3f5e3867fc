#pragma once

// Reverse-mode pullbacks of the tensor operations: mode-3 product, the
// transform-parameterized product, and the truncated facewise SVD chain that
// differentiates a low-rank reconstruction with respect to the transform.

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "starm/products.hpp"
#include "starm/svd_grad.hpp"
#include "starm/tensor3.hpp"
#include "starm/transform.hpp"
#include "starm/tsvdm.hpp"

namespace starm {

// Pullback of b = a x3 m onto the tensor argument.
template <typename Scalar>
Tensor3<Scalar> grad_mode3_wrt_tensor(const Tensor3<Scalar>& db,
                                      const MatrixX<Scalar>& m) {
    if (m.rows() != db.n3())
        throw std::invalid_argument("grad_mode3_wrt_tensor: shape mismatch");
    return mode3_product(db, MatrixX<Scalar>(m.transpose()));
}

// Pullback of b = a x3 m onto the matrix argument.
template <typename Scalar>
MatrixX<Scalar> grad_mode3_wrt_matrix(const Tensor3<Scalar>& db,
                                      const Tensor3<Scalar>& a) {
    if (db.n1() != a.n1() || db.n2() != a.n2())
        throw std::invalid_argument("grad_mode3_wrt_matrix: shape mismatch");
    return db.flat().transpose() * a.flat();
}

template <typename Scalar>
struct StarmGrad {
    Tensor3<Scalar> dA;
    Tensor3<Scalar> dB;
    MatrixX<Scalar> dM;
};

// Pullback of c = a * b under the transform onto all three arguments.
template <typename Scalar>
StarmGrad<Scalar> grad_starm(const Tensor3<Scalar>& dc, const Tensor3<Scalar>& a,
                             const Tensor3<Scalar>& b, const Transform<Scalar>& m) {
    if (dc.n1() != a.n1() || dc.n2() != b.n2() || a.n2() != b.n1() ||
        a.n3() != b.n3() || dc.n3() != a.n3())
        throw std::invalid_argument("grad_starm: shape mismatch");
    StarmGrad<Scalar> g;
    g.dA = starm_product(dc, starm_transpose(b), m);
    g.dB = starm_product(starm_transpose(a), dc, m);
    Tensor3<Scalar> c = starm_product(a, b, m);
    g.dM = m.matrix() * (c.flat().transpose() * dc.flat() +
                         g.dA.flat().transpose() * a.flat() +
                         g.dB.flat().transpose() * b.flat());
    return g;
}

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t bytes,
                           std::uint64_t hash = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        hash ^= p[i];
        hash *= 1099511628211ull;
    }
    return hash;
}

template <typename Scalar>
std::uint64_t forward_hash(const Tensor3<Scalar>& a, const MatrixX<Scalar>& m,
                           Index k) {
    const Index dims[4] = {a.n1(), a.n2(), a.n3(), k};
    std::uint64_t h = fnv1a(dims, sizeof(dims));
    h = fnv1a(a.data(), sizeof(Scalar) * static_cast<std::size_t>(a.size()), h);
    h = fnv1a(m.data(), sizeof(Scalar) * static_cast<std::size_t>(m.size()), h);
    return h;
}

}  // namespace detail

// Cached forward pass of the truncated factorization; the backward pass
// refuses to run against anything else.
template <typename Scalar>
struct GradContext {
    Index n1 = 0, n2 = 0, n3 = 0;
    Index k = 0;
    std::vector<detail::SliceSvd<Scalar>> slices;  // transform-domain factors
    std::vector<uint8_t> degenerate;               // per-slice spectrum flag
    std::uint64_t content_hash = 0;
};

using GradContextd = GradContext<double>;

template <typename Scalar>
GradContext<Scalar> make_grad_context(const Tensor3<Scalar>& a,
                                      const Transform<Scalar>& m, Index k) {
    if (a.n3() != m.size())
        throw std::invalid_argument("make_grad_context: transform size mismatch");
    if (k < 1 || k > std::min(a.n1(), a.n2()))
        throw std::out_of_range("make_grad_context: k out of range");

    GradContext<Scalar> ctx;
    ctx.n1 = a.n1();
    ctx.n2 = a.n2();
    ctx.n3 = a.n3();
    ctx.k = k;
    Tensor3<Scalar> a_hat = mode3_product(a, m.matrix());
    ctx.slices = detail::facewise_svd(a_hat);
    ctx.content_hash = detail::forward_hash(a, m.matrix(), k);

    const Scalar sigma_max = detail::max_singular_value(ctx.slices);
    const Scalar gap_tol = Scalar(kGapTol) * sigma_max * sigma_max;
    const Scalar sigma_tol = Scalar(kRankTol) * sigma_max;
    ctx.degenerate.resize(ctx.slices.size(), 0);
    for (std::size_t s = 0; s < ctx.slices.size(); ++s) {
        const auto& sigma = ctx.slices[s].sigma;
        for (Index i = 0; i + 1 < sigma.size(); ++i) {
            const Scalar gap = sigma[i] * sigma[i] - sigma[i + 1] * sigma[i + 1];
            if (gap < gap_tol && sigma[i] > sigma_tol) {
                ctx.degenerate[s] = 1;
                break;
            }
        }
    }
    return ctx;
}

// Euclidean gradient of m -> <r, a_k(m)> where a_k is the reconstruction
// from the k leading singular triplets. Runs the factorization chain in
// reverse: pull the cotangent into the transform domain, pad the truncated
// factor cotangents, push through the slicewise SVD, and collect the two
// mode-3 contributions.
template <typename Scalar>
MatrixX<Scalar> tsvdm_grad_wrt_M(const Tensor3<Scalar>& r, const Tensor3<Scalar>& a,
                                 const Transform<Scalar>& m, Index k,
                                 const GradContext<Scalar>& ctx) {
    if (r.n1() != a.n1() || r.n2() != a.n2() || r.n3() != a.n3())
        throw std::invalid_argument("tsvdm_grad_wrt_M: cotangent shape mismatch");
    if (ctx.n1 != a.n1() || ctx.n2 != a.n2() || ctx.n3 != a.n3() || ctx.k != k ||
        ctx.content_hash != detail::forward_hash(a, m.matrix(), k))
        throw std::invalid_argument(
            "tsvdm_grad_wrt_M: context does not match the forward inputs");

    const Index n1 = a.n1(), n2 = a.n2(), n3 = a.n3();
    const Index rank = std::min(n1, n2);

    Tensor3<Scalar> r_hat = mode3_product(r, m.matrix());
    Tensor3<Scalar> approx_hat(n1, n2, n3);
    Tensor3<Scalar> da_hat(n1, n2, n3);

    for (Index i = 0; i < n3; ++i) {
        const auto& s = ctx.slices[static_cast<std::size_t>(i)];
        const auto uk = s.U.leftCols(k);
        const auto vk = s.V.leftCols(k);
        const auto sk = s.sigma.head(k);
        approx_hat.slice(i).noalias() = uk * sk.asDiagonal() * vk.transpose();

        // Cotangents of the truncated factors, zero-padded back to the full
        // economic width.
        const auto g = r_hat.slice(i);
        MatrixX<Scalar> du = MatrixX<Scalar>::Zero(n1, rank);
        MatrixX<Scalar> dv = MatrixX<Scalar>::Zero(n2, rank);
        VectorX<Scalar> dsigma = VectorX<Scalar>::Zero(rank);
        du.leftCols(k).noalias() = g * vk * sk.asDiagonal();
        dv.leftCols(k).noalias() = g.transpose() * uk * sk.asDiagonal();
        dsigma.head(k) = (uk.transpose() * g * vk).diagonal();

        da_hat.slice(i) = svd_grad(du, dsigma, dv, s.U, s.sigma, s.V).dA;
    }

    MatrixX<Scalar> grad = approx_hat.flat().transpose() * r.flat();
    grad.noalias() += da_hat.flat().transpose() * a.flat();
    return grad;
}

}  // namespace starm
