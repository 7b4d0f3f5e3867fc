#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "starm/tsvdm.hpp"
#include "test_helpers.hpp"

using starm::Index;
using starm::Tensor3d;
using starm::Transformd;
using test_helpers::Rng;
using test_helpers::random_tensor;

namespace {

// Transform-domain singular values computed independently of the library
// factorization path.
std::vector<Eigen::VectorXd> slice_spectra(const Tensor3d& a, const Transformd& m) {
    Tensor3d a_hat = starm::mode3_product(a, m.matrix());
    std::vector<Eigen::VectorXd> out;
    for (Index k = 0; k < a.n3(); ++k) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_hat.slice(k));
        out.push_back(svd.singularValues());
    }
    return out;
}

double low_rank_error(const Tensor3d& a, const Transformd& m, Index k) {
    return starm::frobenius_norm(a - starm::low_rank_approx(a, m, k));
}

}  // namespace

TEST_CASE("tsvdm factorization") {
    Rng rng(201);

    SUBCASE("identity tensor factors trivially") {
        auto m = starm::make_dct(3);
        Tensor3d eye = starm::identity_tensor(4, m);
        auto f = starm::tsvdm(eye, m);
        CHECK(starm::frobenius_norm(f.S - eye) <= 1e-12);
        Tensor3d rec = starm::starm_product(
            starm::starm_product(f.U, f.S, m), starm::starm_transpose(f.V), m);
        CHECK(starm::frobenius_norm(rec - eye) <= 1e-12);
    }

    SUBCASE("n3 = 1 is the matrix SVD") {
        auto m = starm::make_identity(1);
        Tensor3d a = random_tensor(4, 3, 1, rng);
        auto f = starm::tsvdm(a, m);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.slice(0));
        Eigen::VectorXd sigma = f.S.slice(0).diagonal();
        CHECK((sigma - svd.singularValues()).norm() <= 1e-12);
        CHECK((f.U.slice(0) * f.S.slice(0) * f.V.slice(0).transpose() - a.slice(0))
                  .norm() <= 1e-12);
    }

    SUBCASE("random tensor invariants and reconstruction") {
        auto m = starm::make_random_orthogonal(5, 303);
        Tensor3d a = random_tensor(4, 3, 5, rng);
        auto f = starm::tsvdm(a, m);

        // Reconstruction through independent slicewise multiplication.
        Tensor3d u_hat = starm::mode3_product(f.U, m.matrix());
        Tensor3d s_hat = starm::mode3_product(f.S, m.matrix());
        Tensor3d v_hat = starm::mode3_product(f.V, m.matrix());
        Tensor3d a_hat = starm::mode3_product(a, m.matrix());
        for (Index k = 0; k < 5; ++k) {
            Eigen::MatrixXd rec =
                u_hat.slice(k) * s_hat.slice(k) * v_hat.slice(k).transpose();
            CHECK((rec - a_hat.slice(k)).norm() <=
                  1e-10 * starm::frobenius_norm(a));
        }

        // Orthogonality under the product.
        Tensor3d utu = starm::starm_product(starm::starm_transpose(f.U), f.U, m);
        Tensor3d vtv = starm::starm_product(starm::starm_transpose(f.V), f.V, m);
        CHECK(starm::frobenius_norm(utu - starm::identity_tensor(4, m)) <= 1e-9);
        CHECK(starm::frobenius_norm(vtv - starm::identity_tensor(3, m)) <= 1e-9);

        CHECK(starm::is_f_diagonal(f.S, 1e-12 * starm::frobenius_norm(f.S)));

        // Singular tubes ordered, transform-domain diagonals nonneg/nonincreasing.
        for (Index i = 0; i + 1 < 3; ++i)
            CHECK(f.S.tube(i, i).norm() >= f.S.tube(i + 1, i + 1).norm());
        for (Index k = 0; k < 5; ++k) {
            Eigen::VectorXd d = s_hat.slice(k).diagonal();
            for (Index i = 0; i < d.size(); ++i) {
                CHECK(d[i] >= -1e-12);
                if (i + 1 < d.size()) CHECK(d[i] >= d[i + 1] - 1e-12);
            }
        }
    }
}

TEST_CASE("truncation and the error identity") {
    Rng rng(207);
    auto m = starm::make_random_orthogonal(3, 33);

    SUBCASE("full k reproduces the tensor") {
        Tensor3d a = random_tensor(5, 4, 3, rng);
        CHECK(low_rank_error(a, m, 4) <= 1e-10 * starm::frobenius_norm(a));
    }

    SUBCASE("rank-1 transform-domain slices are recovered at k = 1") {
        std::vector<Eigen::VectorXd> spectra;
        for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(3);
            v[0] = 2.0 + k;
            spectra.push_back(v);
        }
        Tensor3d a = test_helpers::tensor_with_spectra(spectra, 4, 3, m, rng);
        CHECK(low_rank_error(a, m, 1) <= 1e-10 * starm::frobenius_norm(a));
        CHECK(starm::t_rank(a, m) == 1);
    }

    SUBCASE("discarded singular values account for the error") {
        Tensor3d a = random_tensor(5, 4, 3, rng);
        auto spectra = slice_spectra(a, m);
        for (Index k = 1; k <= 4; ++k) {
            double discarded = 0.0;
            for (const auto& s : spectra)
                for (Index j = k; j < s.size(); ++j) discarded += s[j] * s[j];
            const double err = low_rank_error(a, m, k);
            CHECK(err * err == doctest::Approx(discarded).epsilon(1e-9));
        }
    }

    SUBCASE("error is nonincreasing in k") {
        Tensor3d a = random_tensor(6, 5, 4, rng);
        auto m4 = starm::make_random_orthogonal(4, 44);
        double prev = starm::frobenius_norm(a);
        for (Index k = 1; k <= 5; ++k) {
            double err = low_rank_error(a, m4, k);
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
    }

    SUBCASE("truncate returns the leading factor blocks") {
        Tensor3d a = random_tensor(4, 3, 2, rng);
        auto m2 = starm::make_dct(2);
        auto f = starm::tsvdm(a, m2);
        auto fk = starm::truncate(f, 2);
        CHECK(fk.U.n2() == 2);
        CHECK(fk.S.n1() == 2);
        CHECK(fk.V.n2() == 2);
        Tensor3d rec = starm::starm_product(starm::starm_product(fk.U, fk.S, m2),
                                            starm::starm_transpose(fk.V), m2);
        CHECK(starm::frobenius_norm(rec - starm::low_rank_approx(a, m2, 2)) <=
              1e-10);
        CHECK_THROWS_AS((void)starm::truncate(f, 0), const std::out_of_range&);
        CHECK_THROWS_AS((void)starm::truncate(f, 4), const std::out_of_range&);
    }

    SUBCASE("truncated approximation beats random low-rank competitors") {
        Tensor3d a = random_tensor(4, 4, 3, rng);
        const Index k = 2;
        const double best = low_rank_error(a, m, k);
        for (int trial = 0; trial < 100; ++trial) {
            Tensor3d p_hat = random_tensor(4, k, 3, rng);
            Tensor3d q_hat = random_tensor(k, 4, 3, rng);
            Tensor3d y = starm::mode3_product(
                starm::facewise_product(p_hat, q_hat), m.matrix().transpose());
            CHECK(best <= starm::frobenius_norm(a - y) + 1e-12);
        }
    }
}

TEST_CASE("rank counters") {
    Rng rng(211);
    auto m = starm::make_dct(3);

    SUBCASE("zero tensor") {
        Tensor3d z = Tensor3d::Zero(3, 4, 3);
        CHECK(starm::t_rank(z, m) == 0);
        CHECK(starm::implicit_rank(z, m) == 0);
    }

    SUBCASE("identity tensor") {
        Tensor3d eye = starm::identity_tensor(4, m);
        CHECK(starm::t_rank(eye, m) == 4);
        CHECK(starm::implicit_rank(eye, m) == 4 * 3);
    }

    SUBCASE("a zero transform-domain slice drops from the implicit rank") {
        Tensor3d a_hat = random_tensor(4, 3, 3, rng);
        a_hat.slice(0).setZero();
        Tensor3d a = starm::mode3_product(a_hat, m.matrix().transpose());
        CHECK(starm::implicit_rank(a, m) == 2 * 3);
    }
}

TEST_CASE("pseudoinverse") {
    Rng rng(213);

    SUBCASE("inverse case") {
        auto m = starm::make_random_orthogonal(2, 5);
        Tensor3d a = random_tensor(3, 3, 2, rng);
        Tensor3d pinv = starm::pseudoinverse(a, m);
        Tensor3d eye = starm::identity_tensor(3, m);
        CHECK(starm::frobenius_norm(starm::starm_product(pinv, a, m) - eye) <=
              1e-9);
    }

    SUBCASE("zero maps to zero") {
        auto m = starm::make_identity(2);
        Tensor3d z = Tensor3d::Zero(2, 3, 2);
        CHECK(starm::frobenius_norm(starm::pseudoinverse(z, m)) == 0.0);
    }

    SUBCASE("Penrose identities and the slicewise oracle") {
        auto m = starm::make_random_orthogonal(2, 6);
        Tensor3d a = random_tensor(4, 3, 2, rng);
        Tensor3d pinv = starm::pseudoinverse(a, m);

        // Slicewise oracle in the transform domain.
        Tensor3d a_hat = starm::mode3_product(a, m.matrix());
        Tensor3d pinv_hat = starm::mode3_product(pinv, m.matrix());
        for (Index k = 0; k < 2; ++k) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(
                a_hat.slice(k), Eigen::ComputeThinU | Eigen::ComputeThinV);
            Eigen::VectorXd inv = svd.singularValues();
            for (Index i = 0; i < inv.size(); ++i)
                inv[i] = inv[i] > 1e-12 ? 1.0 / inv[i] : 0.0;
            Eigen::MatrixXd expected =
                svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
            CHECK((pinv_hat.slice(k) - expected).norm() <= 1e-10);
        }

        const double scale = 1e-9 * starm::frobenius_norm(a);
        Tensor3d apa = starm::starm_product(starm::starm_product(a, pinv, m), a, m);
        Tensor3d pap =
            starm::starm_product(starm::starm_product(pinv, a, m), pinv, m);
        Tensor3d ap = starm::starm_product(a, pinv, m);
        Tensor3d pa = starm::starm_product(pinv, a, m);
        CHECK(starm::frobenius_norm(apa - a) <= scale);
        CHECK(starm::frobenius_norm(pap - pinv) <= scale);
        CHECK(starm::frobenius_norm(ap - starm::starm_transpose(ap)) <= scale);
        CHECK(starm::frobenius_norm(pa - starm::starm_transpose(pa)) <= scale);
    }
}

TEST_CASE("operator norm") {
    SUBCASE("identity tensor under the identity transform") {
        auto m = starm::make_identity(3);
        CHECK(starm::operator_norm(starm::identity_tensor(2, m), m) ==
              doctest::Approx(1.0).epsilon(1e-14));
    }

    SUBCASE("bounded by the Frobenius norm") {
        Rng rng(217);
        auto m = starm::make_random_orthogonal(4, 7);
        Tensor3d a = random_tensor(3, 5, 4, rng);
        CHECK(starm::operator_norm(a, m) <= starm::frobenius_norm(a) + 1e-12);
    }

    SUBCASE("diagonal family with a rotation transform") {
        // Slices diag(1,1) and diag(1,0); the transform-domain singular
        // values are {|c-s|, c} and {c+s, s}, so the pseudoinverse norm is
        // 1/min(s, |c-s|) away from the degenerate angle c = s.
        Tensor3d a = Tensor3d::Zero(2, 2, 2);
        a.slice(0).setIdentity();
        a(0, 0, 1) = 1.0;
        const double pi = std::numbers::pi;
        for (double theta : {0.2, 0.3, pi / 6, pi / 4, pi / 3}) {
            const double c = std::cos(theta), s = std::sin(theta);
            Eigen::MatrixXd rot(2, 2);
            rot << c, -s, s, c;
            Transformd m(rot, starm::TransformKind::Custom);
            Tensor3d pinv = starm::pseudoinverse(a, m);
            double expected;
            if (std::abs(c - s) < 1e-12)
                expected = 1.0 / s;  // the zero singular value drops out
            else
                expected = 1.0 / std::min(s, std::abs(c - s));
            CHECK(starm::operator_norm(pinv, m) ==
                  doctest::Approx(expected).epsilon(1e-10));
        }
    }

    SUBCASE("isotropic slices give a constant pseudoinverse norm") {
        Tensor3d a(2, 2, 2);
        a.slice(0) << 1, 1, -1, 1;
        a.slice(1) << 1, -1, 1, 1;
        for (int trial = 0; trial < 10; ++trial) {
            auto m = starm::make_random_orthogonal(2, 1000 + trial);
            Tensor3d pinv = starm::pseudoinverse(a, m);
            CHECK(starm::operator_norm(pinv, m) ==
                  doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
        }
    }
}

TEST_CASE("solve_normal_equations") {
    Rng rng(223);

    SUBCASE("identity model returns the data") {
        auto m = starm::make_dct(3);
        Tensor3d eye = starm::identity_tensor(4, m);
        Tensor3d b = random_tensor(4, 2, 3, rng);
        Tensor3d x = starm::solve_normal_equations(eye, b, m);
        CHECK(starm::frobenius_norm(x - b) <= 1e-10);
    }

    SUBCASE("recovers the planted solution of a consistent system") {
        auto m = starm::make_random_orthogonal(4, 9);
        Tensor3d a = random_tensor(10, 3, 4, rng);
        Tensor3d x0 = random_tensor(3, 2, 4, rng);
        Tensor3d b = starm::starm_product(a, x0, m);
        Tensor3d x = starm::solve_normal_equations(a, b, m);
        CHECK(starm::frobenius_norm(x - x0) <= 1e-8);
    }

    SUBCASE("residual is orthogonal to the model") {
        auto m = starm::make_random_orthogonal(4, 10);
        Tensor3d a = random_tensor(20, 3, 4, rng);
        Tensor3d b = random_tensor(20, 5, 4, rng);
        Tensor3d x = starm::solve_normal_equations(a, b, m);
        Tensor3d residual = starm::starm_product(a, x, m) - b;
        Tensor3d normal =
            starm::starm_product(starm::starm_transpose(a), residual, m);
        CHECK(starm::frobenius_norm(normal) <=
              1e-8 * starm::frobenius_norm(a) * starm::frobenius_norm(b));
    }

    SUBCASE("ridge solution satisfies the regularized normal equations") {
        auto m = starm::make_dct(2);
        const double lambda = 1e-2;
        Tensor3d a = random_tensor(8, 3, 2, rng);
        Tensor3d b = random_tensor(8, 1, 2, rng);
        Tensor3d x = starm::solve_normal_equations(a, b, m, lambda);
        Tensor3d a_hat = starm::mode3_product(a, m.matrix());
        Tensor3d b_hat = starm::mode3_product(b, m.matrix());
        Tensor3d x_hat = starm::mode3_product(x, m.matrix());
        for (Index k = 0; k < 2; ++k) {
            Eigen::MatrixXd gram = a_hat.slice(k).transpose() * a_hat.slice(k) +
                                   lambda * Eigen::MatrixXd::Identity(3, 3);
            Eigen::MatrixXd rhs = a_hat.slice(k).transpose() * b_hat.slice(k);
            CHECK((gram * x_hat.slice(k) - rhs).norm() <= 1e-10);
        }
    }

    SUBCASE("rank-deficient slices get the minimum-norm solution") {
        auto m = starm::make_identity(2);
        Tensor3d a = Tensor3d::Zero(3, 2, 2);
        // Second column zero in every slice: only the first row of X is pinned.
        a(0, 0, 0) = 1.0;
        a(1, 0, 0) = 1.0;
        a(0, 0, 1) = 2.0;
        Tensor3d b = random_tensor(3, 1, 2, rng);
        Tensor3d x = starm::solve_normal_equations(a, b, m);
        for (Index k = 0; k < 2; ++k) CHECK(x(1, 0, k) == 0.0);
    }
}

TEST_CASE("objective invariance under transform symmetries") {
    Rng rng(227);
    const Index n3 = 3;
    auto m = starm::make_random_orthogonal(n3, 12);
    auto p = starm::make_permutation({1, 2, 0});
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n3, n3);
    d(1, 1) = -1.0;

    SUBCASE("low-rank objective: permutation and global negation") {
        Tensor3d a = random_tensor(5, 4, n3, rng);
        Transformd pm(Eigen::MatrixXd(p.matrix() * m.matrix()));
        Transformd nm(Eigen::MatrixXd(-m.matrix()));
        for (Index k = 1; k <= 4; ++k) {
            const double base = low_rank_error(a, m, k);
            CHECK(low_rank_error(a, pm, k) == doctest::Approx(base).epsilon(1e-10));
            CHECK(low_rank_error(a, nm, k) == doctest::Approx(base).epsilon(1e-10));
        }
    }

    SUBCASE("regression objective: row permutation and row negation") {
        Tensor3d a = random_tensor(12, 3, n3, rng);
        Tensor3d b = random_tensor(12, 2, n3, rng);
        auto objective = [&](const Transformd& t) {
            Tensor3d x = starm::solve_normal_equations(a, b, t);
            Tensor3d r = starm::starm_product(a, x, t) - b;
            double nrm = starm::frobenius_norm(r);
            return 0.5 * nrm * nrm;
        };
        const double base = objective(m);
        Transformd pm(Eigen::MatrixXd(p.matrix() * m.matrix()));
        Transformd dm(Eigen::MatrixXd(d * m.matrix()));
        CHECK(objective(pm) == doctest::Approx(base).epsilon(1e-9));
        CHECK(objective(dm) == doctest::Approx(base).epsilon(1e-9));
    }
}
