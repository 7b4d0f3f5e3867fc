#pragma once

// The transform-parameterized tensor-tensor product and its tubal and
// structured-matrix forms. All products move operands into the transform
// domain, multiply facewise, and return through the transpose.

#include <Eigen/Dense>

#include <stdexcept>

#include "starm/tensor3.hpp"
#include "starm/transform.hpp"

namespace starm {

// Identity tube e = 1 x3 M^-1, the unit of tubal multiplication.
template <typename Scalar>
Tube<Scalar> identity_tube(const Transform<Scalar>& m) {
    return m.matrix().transpose() * VectorX<Scalar>::Ones(m.size());
}

// f-diagonal tensor with identity tubes on the diagonal; the two-sided unit
// of the tensor-tensor product.
template <typename Scalar>
Tensor3<Scalar> identity_tensor(Index dim, const Transform<Scalar>& m) {
    if (dim < 1) throw std::invalid_argument("identity_tensor: dim must be >= 1");
    Tube<Scalar> e = identity_tube(m);
    Tensor3<Scalar> t = Tensor3<Scalar>::Zero(dim, dim, m.size());
    for (Index k = 0; k < m.size(); ++k)
        t.slice(k).diagonal().setConstant(e[k]);
    return t;
}

template <typename Scalar>
Tube<Scalar> tubal_product(const Tube<Scalar>& a, const Tube<Scalar>& b,
                           const Transform<Scalar>& m) {
    if (a.size() != m.size() || b.size() != m.size())
        throw std::invalid_argument("tubal_product: length mismatch");
    Tube<Scalar> product_hat = (m.matrix() * a).cwiseProduct(m.matrix() * b);
    return m.matrix().transpose() * product_hat;
}

template <typename Scalar>
Tensor3<Scalar> starm_product(const Tensor3<Scalar>& a, const Tensor3<Scalar>& b,
                              const Transform<Scalar>& m) {
    if (a.n2() != b.n1() || a.n3() != b.n3() || a.n3() != m.size())
        throw std::invalid_argument("starm_product: dimension mismatch");
    Tensor3<Scalar> a_hat = mode3_product(a, m.matrix());
    Tensor3<Scalar> b_hat = mode3_product(b, m.matrix());
    return mode3_product(facewise_product(a_hat, b_hat), m.matrix().transpose());
}

// Structured matrix of tubal multiplication: r_matrix(a) * vec(b) equals
// vec(a * b) for every tube b.
template <typename Scalar>
MatrixX<Scalar> r_matrix(const Tube<Scalar>& a, const Transform<Scalar>& m) {
    if (a.size() != m.size())
        throw std::invalid_argument("r_matrix: length mismatch");
    return m.matrix().transpose() *
           (m.matrix() * a).asDiagonal() * m.matrix();
}

// Diagnostic overload for a general invertible matrix; uses an explicit
// inverse and is not part of the optimizer path.
template <typename Scalar>
MatrixX<Scalar> r_matrix(const Tube<Scalar>& a, const MatrixX<Scalar>& m) {
    if (a.size() != m.rows() || m.rows() != m.cols())
        throw std::invalid_argument("r_matrix: shape mismatch");
    MatrixX<Scalar> scaled = (m * a).asDiagonal() * m;
    return m.partialPivLu().solve(scaled);
}

}  // namespace starm
