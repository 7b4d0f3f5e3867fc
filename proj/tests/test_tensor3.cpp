#include <doctest.h>

#include <Eigen/Dense>

#include "starm/tensor3.hpp"
#include "test_helpers.hpp"

using starm::Index;
using starm::Tensor3d;
using test_helpers::Rng;
using test_helpers::random_tensor;

TEST_CASE("storage layout and invariants") {
    Tensor3d a(2, 3, 4);
    CHECK(a.size() == 2 * 3 * 4);

    Rng rng(11);
    a = random_tensor(2, 3, 4, rng);

    // Frobenius norm squared equals the sum over slices.
    double slice_sum = 0.0;
    for (Index k = 0; k < 4; ++k) slice_sum += a.slice(k).squaredNorm();
    CHECK(starm::frobenius_norm(a) * starm::frobenius_norm(a) ==
          doctest::Approx(slice_sum).epsilon(1e-14));

    // slice() aliases the element accessor.
    a(1, 2, 3) = 42.0;
    CHECK(a.slice(3)(1, 2) == 42.0);
    CHECK(a.tube(1, 2)[3] == 42.0);
}

TEST_CASE("mode3_unfold") {
    SUBCASE("single tube") {
        Tensor3d a(1, 1, 3);
        a(0, 0, 0) = 1;
        a(0, 0, 1) = 2;
        a(0, 0, 2) = 3;
        Eigen::MatrixXd u = starm::mode3_unfold(a);
        REQUIRE(u.rows() == 3);
        REQUIRE(u.cols() == 1);
        CHECK(u(0, 0) == 1);
        CHECK(u(1, 0) == 2);
        CHECK(u(2, 0) == 3);
    }

    SUBCASE("2x2x1 column enumeration") {
        // Tube (i,j) lands in column j*n1 + i.
        Tensor3d a(2, 2, 1);
        a.slice(0) << 1, 3, 2, 4;
        Eigen::MatrixXd u = starm::mode3_unfold(a);
        REQUIRE(u.rows() == 1);
        REQUIRE(u.cols() == 4);
        Eigen::RowVectorXd expected(4);
        expected << 1, 2, 3, 4;
        CHECK((u.row(0) - expected).norm() == 0.0);
    }

    SUBCASE("fold round trip") {
        Rng rng(7);
        Tensor3d a = random_tensor(3, 4, 5, rng);
        Tensor3d back = starm::mode3_fold(starm::mode3_unfold(a), 3, 4, 5);
        CHECK((back.storage() - a.storage()).norm() == 0.0);
    }
}

TEST_CASE("mode3_fold") {
    SUBCASE("tube") {
        Eigen::MatrixXd x(3, 1);
        x << 1, 2, 3;
        Tensor3d t = starm::mode3_fold(x, 1, 1, 3);
        CHECK(t(0, 0, 0) == 1);
        CHECK(t(0, 0, 1) == 2);
        CHECK(t(0, 0, 2) == 3);
    }

    SUBCASE("unfold then fold is bitwise identity") {
        Rng rng(13);
        Tensor3d a = random_tensor(2, 3, 4, rng);
        Tensor3d b = starm::mode3_fold(starm::mode3_unfold(a), 2, 3, 4);
        for (Index i = 0; i < a.size(); ++i)
            CHECK(a.storage()[i] == b.storage()[i]);
    }

    SUBCASE("placement by index arithmetic") {
        Rng rng(17);
        Eigen::MatrixXd x = test_helpers::random_matrix(2, 4, rng);
        Tensor3d t = starm::mode3_fold(x, 2, 2, 2);
        for (Index i = 0; i < 2; ++i)
            for (Index j = 0; j < 2; ++j)
                for (Index k = 0; k < 2; ++k)
                    CHECK(t(i, j, k) == x(k, j * 2 + i));
    }

    SUBCASE("shape mismatch throws") {
        Eigen::MatrixXd x(3, 2);
        CHECK_THROWS_AS(starm::mode3_fold(x, 1, 1, 2),
                        const std::invalid_argument&);
    }
}

TEST_CASE("mode3_product") {
    SUBCASE("identity leaves tensor unchanged") {
        Rng rng(19);
        Tensor3d a = random_tensor(2, 3, 4, rng);
        Tensor3d b = starm::mode3_product(a, Eigen::MatrixXd::Identity(4, 4));
        CHECK((a.storage() - b.storage()).norm() == 0.0);
    }

    SUBCASE("2x2 rotation of a tube") {
        Tensor3d a(1, 1, 2);
        a(0, 0, 0) = 1;
        a(0, 0, 1) = 1;
        Eigen::MatrixXd m(2, 2);
        const double s = 1.0 / std::sqrt(2.0);
        m << s, s, s, -s;
        Tensor3d b = starm::mode3_product(a, m);
        CHECK(b(0, 0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
        CHECK(b(0, 0, 1) == doctest::Approx(0.0).epsilon(1e-15));
    }

    SUBCASE("orthogonal invariance of the norm") {
        Rng rng(23);
        Tensor3d a = random_tensor(3, 2, 4, rng);
        auto q = starm::make_random_orthogonal(4, 99);
        Tensor3d b = starm::mode3_product(a, q.matrix());
        CHECK(starm::frobenius_norm(b) ==
              doctest::Approx(starm::frobenius_norm(a)).epsilon(1e-12));
    }

    SUBCASE("dimension mismatch throws") {
        Tensor3d a(2, 2, 3);
        CHECK_THROWS_AS(starm::mode3_product(a, Eigen::MatrixXd::Identity(2, 2)),
                        const std::invalid_argument&);
    }
}

TEST_CASE("facewise_product") {
    SUBCASE("identity slices") {
        Tensor3d a(2, 2, 3), b(2, 2, 3);
        for (Index k = 0; k < 3; ++k) {
            a.slice(k).setIdentity();
            b.slice(k).setIdentity();
        }
        Tensor3d c = starm::facewise_product(a, b);
        for (Index k = 0; k < 3; ++k)
            CHECK((c.slice(k) - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
    }

    SUBCASE("n3 = 1 reduces to a matrix product") {
        Rng rng(29);
        Tensor3d a = random_tensor(3, 2, 1, rng);
        Tensor3d b = random_tensor(2, 4, 1, rng);
        Tensor3d c = starm::facewise_product(a, b);
        Eigen::MatrixXd expected = a.slice(0) * b.slice(0);
        CHECK((c.slice(0) - expected).norm() <= 1e-14);
    }

    SUBCASE("slices multiply independently") {
        Rng rng(31);
        Tensor3d a = random_tensor(2, 3, 4, rng);
        Tensor3d b = random_tensor(3, 2, 4, rng);
        Tensor3d c = starm::facewise_product(a, b);
        for (Index k = 0; k < 4; ++k) {
            Eigen::MatrixXd expected = a.slice(k) * b.slice(k);
            CHECK((c.slice(k) - expected).norm() <= 1e-14);
        }
    }

    SUBCASE("inner dimension mismatch throws") {
        Tensor3d a(2, 3, 4), b(2, 2, 4);
        CHECK_THROWS_AS(starm::facewise_product(a, b),
                        const std::invalid_argument&);
    }
}

TEST_CASE("starm_transpose") {
    Rng rng(37);

    SUBCASE("n3 = 1 is the matrix transpose") {
        Tensor3d a = random_tensor(3, 2, 1, rng);
        Tensor3d t = starm::starm_transpose(a);
        CHECK((t.slice(0) - a.slice(0).transpose()).norm() == 0.0);
    }

    SUBCASE("double transpose is the identity") {
        Tensor3d a = random_tensor(3, 4, 2, rng);
        Tensor3d t = starm::starm_transpose(starm::starm_transpose(a));
        CHECK((t.storage() - a.storage()).norm() == 0.0);
    }
}

TEST_CASE("frobenius_norm") {
    CHECK(starm::frobenius_norm(Tensor3d::Zero(2, 3, 4)) == 0.0);

    Tensor3d t(1, 1, 2);
    t(0, 0, 0) = 3;
    t(0, 0, 1) = 4;
    CHECK(starm::frobenius_norm(t) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("tube round trip") {
    Rng rng(41);
    Eigen::VectorXd v = test_helpers::random_vector(5, rng);
    Tensor3d t = starm::tube_to_tensor<double>(v);
    CHECK((starm::tensor_to_tube(t) - v).norm() == 0.0);
}

TEST_CASE("is_f_diagonal") {
    Tensor3d d = Tensor3d::Zero(3, 3, 2);
    d(0, 0, 0) = 1;
    d(1, 1, 1) = 2;
    CHECK(starm::is_f_diagonal(d));
    d(0, 1, 0) = 0.5;
    CHECK(!starm::is_f_diagonal(d));
}
