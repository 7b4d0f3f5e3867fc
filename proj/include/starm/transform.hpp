#pragma once

// Orthogonal transformation matrices that parameterize the tensor-tensor
// product. The inverse is always realized as the transpose, so every
// constructor enforces orthogonality up to a fixed residual.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "starm/tensor3.hpp"

namespace starm {

enum class TransformKind {
    Identity,
    Dct,
    RandomOrthogonal,
    DataDependent,
    Permutation,
    Learned,
    Custom,
};

inline constexpr double kOrthogonalityTol = 1e-10;

template <typename Scalar>
Scalar orthogonality_residual(const MatrixX<Scalar>& m) {
    if (m.rows() != m.cols()) return std::numeric_limits<Scalar>::infinity();
    MatrixX<Scalar> gram = m.transpose() * m;
    gram.diagonal().array() -= Scalar(1);
    return gram.norm();
}

template <typename Scalar>
bool validate(const MatrixX<Scalar>& m) {
    return m.rows() == m.cols() &&
           orthogonality_residual(m) <= Scalar(kOrthogonalityTol);
}

template <typename Scalar>
class Transform {
public:
    Transform() = default;

    explicit Transform(MatrixX<Scalar> m, TransformKind kind = TransformKind::Custom)
        : m_(std::move(m)), kind_(kind) {
        if (!validate(m_))
            throw std::invalid_argument("Transform: matrix is not orthogonal");
    }

    const MatrixX<Scalar>& matrix() const { return m_; }
    TransformKind kind() const { return kind_; }
    Index size() const { return m_.rows(); }

private:
    MatrixX<Scalar> m_;
    TransformKind kind_ = TransformKind::Custom;
};

using Transformd = Transform<double>;

namespace detail {

// Deterministic standard normals: Box-Muller over mt19937_64 draws, so the
// stream does not depend on the standard library's distribution internals.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        have_spare_ = true;
        return r * std::cos(angle);
    }

private:
    double uniform() {
        // 53-bit mantissa draw in (0, 1].
        return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

template <typename Scalar>
MatrixX<Scalar> gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
    GaussianSampler gauss(seed);
    MatrixX<Scalar> g(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) g(i, j) = Scalar(gauss());
    return g;
}

// Flips column signs so the largest-magnitude entry of each column is
// nonnegative; makes factorizations reproducible across platforms.
template <typename Scalar>
void fix_column_signs(MatrixX<Scalar>& m) {
    for (Index j = 0; j < m.cols(); ++j) {
        Index imax = 0;
        m.col(j).cwiseAbs().maxCoeff(&imax);
        if (m(imax, j) < Scalar(0)) m.col(j) = -m.col(j);
    }
}

}  // namespace detail

template <typename Scalar = double>
Transform<Scalar> make_identity(Index n3) {
    if (n3 < 1) throw std::invalid_argument("make_identity: n3 must be >= 1");
    return Transform<Scalar>(MatrixX<Scalar>::Identity(n3, n3),
                             TransformKind::Identity);
}

// Orthonormal DCT-II matrix: entry (i, j) = c_i cos(pi i (2j+1) / (2 n3))
// with c_0 = sqrt(1/n3) and c_i = sqrt(2/n3) otherwise.
template <typename Scalar = double>
Transform<Scalar> make_dct(Index n3) {
    if (n3 < 1) throw std::invalid_argument("make_dct: n3 must be >= 1");
    MatrixX<Scalar> m(n3, n3);
    const Scalar c0 = std::sqrt(Scalar(1) / Scalar(n3));
    const Scalar ci = std::sqrt(Scalar(2) / Scalar(n3));
    for (Index i = 0; i < n3; ++i) {
        const Scalar scale = (i == 0) ? c0 : ci;
        for (Index j = 0; j < n3; ++j)
            m(i, j) = scale * std::cos(std::numbers::pi_v<Scalar> * Scalar(i) *
                                       Scalar(2 * j + 1) / Scalar(2 * n3));
    }
    return Transform<Scalar>(std::move(m), TransformKind::Dct);
}

// Orthogonal factor of a seeded Gaussian matrix, with the R diagonal sign
// fixed so the result is deterministic for a given seed.
template <typename Scalar = double>
Transform<Scalar> make_random_orthogonal(Index n3, std::uint64_t seed) {
    if (n3 < 1)
        throw std::invalid_argument("make_random_orthogonal: n3 must be >= 1");
    MatrixX<Scalar> g = detail::gaussian_matrix<Scalar>(n3, n3, seed);
    Eigen::HouseholderQR<MatrixX<Scalar>> qr(g);
    MatrixX<Scalar> q = qr.householderQ();
    MatrixX<Scalar> r = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Index j = 0; j < n3; ++j)
        if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
    return Transform<Scalar>(std::move(q), TransformKind::RandomOrthogonal);
}

// Transposed left singular matrix of the mode-3 unfolding. Rank-deficient
// unfoldings are completed to a full orthogonal basis by the full SVD.
template <typename Scalar>
Transform<Scalar> make_data_dependent(const Tensor3<Scalar>& a) {
    if (frobenius_norm(a) == Scalar(0))
        throw std::invalid_argument("make_data_dependent: tensor is zero");
    MatrixX<Scalar> unfolded = mode3_unfold(a);
    Eigen::JacobiSVD<MatrixX<Scalar>> svd(unfolded, Eigen::ComputeFullU);
    MatrixX<Scalar> z = svd.matrixU();
    detail::fix_column_signs(z);
    return Transform<Scalar>(z.transpose(), TransformKind::DataDependent);
}

template <typename Scalar = double>
Transform<Scalar> make_permutation(const std::vector<Index>& perm) {
    const Index n3 = static_cast<Index>(perm.size());
    if (n3 < 1)
        throw std::invalid_argument("make_permutation: empty permutation");
    MatrixX<Scalar> m = MatrixX<Scalar>::Zero(n3, n3);
    std::vector<bool> seen(perm.size(), false);
    for (Index i = 0; i < n3; ++i) {
        Index j = perm[static_cast<std::size_t>(i)];
        if (j < 0 || j >= n3 || seen[static_cast<std::size_t>(j)])
            throw std::invalid_argument("make_permutation: not a permutation");
        seen[static_cast<std::size_t>(j)] = true;
        m(i, j) = Scalar(1);
    }
    return Transform<Scalar>(std::move(m), TransformKind::Permutation);
}

}  // namespace starm
