#pragma once

// Dense order-3 tensor over a real scalar type.
//
// Storage is slice-major: frontal slices A(:,:,k) are contiguous and each
// slice is column-major, so facewise kernels (GEMM, SVD) run on contiguous
// memory. Indexing is 0-based throughout; the tube (i,j) occupies column
// j*n1 + i of the mode-3 unfolding.

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <utility>

namespace starm {

using Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// A tube is a 1x1xn3 fiber; we store it as a plain column vector.
template <typename Scalar>
using Tube = VectorX<Scalar>;

template <typename Scalar>
class Tensor3 {
public:
    using MatrixType = MatrixX<Scalar>;
    using SliceMap = Eigen::Map<MatrixType>;
    using ConstSliceMap = Eigen::Map<const MatrixType>;

    Tensor3() = default;

    // Entries are left uninitialized, as with Eigen matrices.
    Tensor3(Index n1, Index n2, Index n3) : n1_(n1), n2_(n2), n3_(n3) {
        if (n1 < 0 || n2 < 0 || n3 < 0)
            throw std::invalid_argument("Tensor3: negative dimension");
        data_.resize(n1 * n2 * n3);
    }

    static Tensor3 Zero(Index n1, Index n2, Index n3) {
        Tensor3 t(n1, n2, n3);
        t.data_.setZero();
        return t;
    }

    static Tensor3 Constant(Index n1, Index n2, Index n3, Scalar value) {
        Tensor3 t(n1, n2, n3);
        t.data_.setConstant(value);
        return t;
    }

    Index n1() const { return n1_; }
    Index n2() const { return n2_; }
    Index n3() const { return n3_; }
    Index size() const { return data_.size(); }

    Scalar operator()(Index i, Index j, Index k) const {
        return data_[offset(i, j, k)];
    }
    Scalar& operator()(Index i, Index j, Index k) {
        return data_[offset(i, j, k)];
    }

    // Frontal slice A(:,:,k) as an n1 x n2 matrix view.
    SliceMap slice(Index k) {
        return SliceMap(data_.data() + k * n1_ * n2_, n1_, n2_);
    }
    ConstSliceMap slice(Index k) const {
        return ConstSliceMap(data_.data() + k * n1_ * n2_, n1_, n2_);
    }

    // The (i,j) tube as a strided n3-vector view.
    auto tube(Index i, Index j) const {
        return Eigen::Map<const VectorX<Scalar>, 0, Eigen::InnerStride<>>(
            data_.data() + j * n1_ + i, n3_, Eigen::InnerStride<>(n1_ * n2_));
    }
    void set_tube(Index i, Index j, const Tube<Scalar>& t) {
        for (Index k = 0; k < n3_; ++k) data_[offset(i, j, k)] = t[k];
    }

    // (n1*n2) x n3 view; column k holds frontal slice k in column-major order.
    // Its transpose is the mode-3 unfolding.
    Eigen::Map<MatrixType> flat() {
        return Eigen::Map<MatrixType>(data_.data(), n1_ * n2_, n3_);
    }
    Eigen::Map<const MatrixType> flat() const {
        return Eigen::Map<const MatrixType>(data_.data(), n1_ * n2_, n3_);
    }

    const Scalar* data() const { return data_.data(); }
    Scalar* data() { return data_.data(); }

    VectorX<Scalar>& storage() { return data_; }
    const VectorX<Scalar>& storage() const { return data_; }

    bool same_dims(const Tensor3& other) const {
        return n1_ == other.n1_ && n2_ == other.n2_ && n3_ == other.n3_;
    }

    Tensor3& operator+=(const Tensor3& other) {
        require_same_dims(other);
        data_ += other.data_;
        return *this;
    }
    Tensor3& operator-=(const Tensor3& other) {
        require_same_dims(other);
        data_ -= other.data_;
        return *this;
    }
    Tensor3& operator*=(Scalar s) {
        data_ *= s;
        return *this;
    }

private:
    Index offset(Index i, Index j, Index k) const {
        return k * n1_ * n2_ + j * n1_ + i;
    }
    void require_same_dims(const Tensor3& other) const {
        if (!same_dims(other))
            throw std::invalid_argument("Tensor3: dimension mismatch");
    }

    Index n1_ = 0, n2_ = 0, n3_ = 0;
    VectorX<Scalar> data_;
};

using Tensor3d = Tensor3<double>;

template <typename Scalar>
Tensor3<Scalar> operator+(Tensor3<Scalar> a, const Tensor3<Scalar>& b) {
    a += b;
    return a;
}

template <typename Scalar>
Tensor3<Scalar> operator-(Tensor3<Scalar> a, const Tensor3<Scalar>& b) {
    a -= b;
    return a;
}

template <typename Scalar>
Tensor3<Scalar> operator-(Tensor3<Scalar> a) {
    a *= Scalar(-1);
    return a;
}

template <typename Scalar>
Tensor3<Scalar> operator*(Scalar s, Tensor3<Scalar> a) {
    a *= s;
    return a;
}

template <typename Scalar>
Tensor3<Scalar> operator*(Tensor3<Scalar> a, Scalar s) {
    a *= s;
    return a;
}

template <typename Scalar>
Scalar inner(const Tensor3<Scalar>& a, const Tensor3<Scalar>& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("inner: dimension mismatch");
    return a.storage().dot(b.storage());
}

// sqrt of the sum of squared entries; equals the root of the summed squared
// slice norms.
template <typename Scalar>
Scalar frobenius_norm(const Tensor3<Scalar>& a) {
    return a.storage().norm();
}

// Mode-3 unfolding: n3 x (n1*n2) matrix whose column j*n1 + i is the (i,j)
// tube.
template <typename Scalar>
MatrixX<Scalar> mode3_unfold(const Tensor3<Scalar>& a) {
    return a.flat().transpose();
}

// Inverse of mode3_unfold for the given dimensions.
template <typename Derived>
Tensor3<typename Derived::Scalar> mode3_fold(const Eigen::MatrixBase<Derived>& x,
                                             Index n1, Index n2, Index n3) {
    if (x.rows() != n3 || x.cols() != n1 * n2)
        throw std::invalid_argument("mode3_fold: shape mismatch");
    Tensor3<typename Derived::Scalar> t(n1, n2, n3);
    t.flat() = x.transpose();
    return t;
}

// Applies m (p x n3) along every tube: fold3(m * unfold3(a)).
template <typename Scalar, typename Derived>
Tensor3<Scalar> mode3_product(const Tensor3<Scalar>& a,
                              const Eigen::MatrixBase<Derived>& m) {
    if (m.cols() != a.n3())
        throw std::invalid_argument("mode3_product: dimension mismatch");
    Tensor3<Scalar> result(a.n1(), a.n2(), m.rows());
    result.flat().noalias() = a.flat() * m.transpose();
    return result;
}

// Slicewise matrix product: result(:,:,k) = a(:,:,k) * b(:,:,k).
template <typename Scalar>
Tensor3<Scalar> facewise_product(const Tensor3<Scalar>& a,
                                 const Tensor3<Scalar>& b) {
    if (a.n2() != b.n1() || a.n3() != b.n3())
        throw std::invalid_argument("facewise_product: dimension mismatch");
    Tensor3<Scalar> result(a.n1(), b.n2(), a.n3());
    for (Index k = 0; k < a.n3(); ++k)
        result.slice(k).noalias() = a.slice(k) * b.slice(k);
    return result;
}

// Transposes every frontal slice.
template <typename Scalar>
Tensor3<Scalar> starm_transpose(const Tensor3<Scalar>& a) {
    Tensor3<Scalar> result(a.n2(), a.n1(), a.n3());
    for (Index k = 0; k < a.n3(); ++k)
        result.slice(k) = a.slice(k).transpose();
    return result;
}

// Per-slice block A(i0:i0+rows, j0:j0+cols, :).
template <typename Scalar>
Tensor3<Scalar> sub_block(const Tensor3<Scalar>& a, Index i0, Index rows,
                          Index j0, Index cols) {
    if (i0 < 0 || j0 < 0 || i0 + rows > a.n1() || j0 + cols > a.n2())
        throw std::out_of_range("sub_block: block out of range");
    Tensor3<Scalar> result(rows, cols, a.n3());
    for (Index k = 0; k < a.n3(); ++k)
        result.slice(k) = a.slice(k).block(i0, j0, rows, cols);
    return result;
}

template <typename Scalar>
bool is_f_diagonal(const Tensor3<Scalar>& a, Scalar tol = Scalar(0)) {
    for (Index k = 0; k < a.n3(); ++k)
        for (Index j = 0; j < a.n2(); ++j)
            for (Index i = 0; i < a.n1(); ++i)
                if (i != j && std::abs(a(i, j, k)) > tol) return false;
    return true;
}

template <typename Scalar>
Tensor3<Scalar> tube_to_tensor(const Tube<Scalar>& t) {
    Tensor3<Scalar> a(1, 1, t.size());
    for (Index k = 0; k < t.size(); ++k) a(0, 0, k) = t[k];
    return a;
}

template <typename Scalar>
Tube<Scalar> tensor_to_tube(const Tensor3<Scalar>& a) {
    if (a.n1() != 1 || a.n2() != 1)
        throw std::invalid_argument("tensor_to_tube: expected a 1x1xn3 tensor");
    Tube<Scalar> t(a.n3());
    for (Index k = 0; k < a.n3(); ++k) t[k] = a(0, 0, k);
    return t;
}

}  // namespace starm
