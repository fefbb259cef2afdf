#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nck/matcore.hpp"
#include "test_util.hpp"

using namespace nck;
using nck::test::random_hermitian;
using nck::test::random_matrix;

TEST(HermEig, IdentityHasUnitEigenvalues) {
    const auto e = herm_eig(Matrix::Identity(2, 2));
    EXPECT_DOUBLE_EQ(e.eigenvalues(0), 1.0);
    EXPECT_DOUBLE_EQ(e.eigenvalues(1), 1.0);
}

TEST(HermEig, DiagonalSortedAscending) {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 3.0;
    h(1, 1) = -1.0;
    const auto e = herm_eig(h);
    EXPECT_DOUBLE_EQ(e.eigenvalues(0), -1.0);
    EXPECT_DOUBLE_EQ(e.eigenvalues(1), 3.0);
}

TEST(HermEig, ReconstructionAndUnitarity) {
    std::mt19937_64 rng(1);
    for (Eigen::Index n : {1, 3, 8, 17}) {
        const Matrix h = random_hermitian(n, rng);
        const auto e = herm_eig(h);
        const Matrix u = e.eigenvectors;
        const Matrix rec = u * e.eigenvalues.cast<cplx>().asDiagonal() * u.adjoint();
        EXPECT_LE(op_norm(rec - h), 1e-10 * (1.0 + op_norm(h)));
        EXPECT_LE(op_norm(u.adjoint() * u - Matrix::Identity(n, n)), 1e-10);
        for (Eigen::Index k = 1; k < n; ++k) EXPECT_LE(e.eigenvalues(k - 1), e.eigenvalues(k));
    }
}

TEST(HermEig, Errors) {
    EXPECT_THROW(herm_eig(Matrix::Zero(2, 3)), Error);
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = std::nan("");
    try {
        herm_eig(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFinite);
    }
    Matrix skew = Matrix::Zero(2, 2);
    skew(0, 1) = 1.0;
    try {
        herm_eig(skew);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonHermitian);
    }
    try {
        herm_eig(Matrix::Zero(2, 3));
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonSquare);
    }
}

TEST(MatFunc, IdentityMapReproducesInput) {
    std::mt19937_64 rng(2);
    for (Eigen::Index n : {2, 9, 33, 64}) {
        const Matrix h = random_hermitian(n, rng);
        EXPECT_LE(max_abs(mat_func(h, [](double t) { return t; }) - h), 1e-10 * (1.0 + op_norm(h)));
    }
}

TEST(MatFunc, SqrtOfDiagonal) {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 4.0;
    h(1, 1) = 9.0;
    const Matrix r = mat_func(h, [](double t) { return std::sqrt(t); });
    EXPECT_NEAR(r(0, 0).real(), 2.0, 1e-14);
    EXPECT_NEAR(r(1, 1).real(), 3.0, 1e-14);
    EXPECT_EQ(std::abs(r(0, 1)), 0.0);
}

TEST(MatFunc, ClippingOfDiagonal) {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 3.0;
    h(1, 1) = -0.5;
    const Matrix r = mat_func(h, [](double t) { return fc_truncate(t, 1.0); });
    EXPECT_NEAR(r(0, 0).real(), 1.0, 1e-15);
    EXPECT_NEAR(r(1, 1).real(), -0.5, 1e-15);
}

TEST(Truncation, ScalarMap) {
    EXPECT_DOUBLE_EQ(fc_truncate(0.3, 1.0), 0.3);
    EXPECT_DOUBLE_EQ(gc_residual(0.3, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(fc_truncate(5.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(gc_residual(5.0, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(fc_truncate(-5.0, 1.0), -1.0);
    try {
        fc_truncate(1.0, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonPositiveC);
    }
    EXPECT_THROW(truncate_offdiag(Matrix::Identity(2, 2), -1.0), Error);
}

TEST(Truncation, QuadraticResidualBoundOnGrid) {
    for (double c : {0.5, 1.0, 3.0})
        for (int k = -20000; k <= 20000; ++k) {
            const double t = k * 0.005;
            EXPECT_LE(std::abs(gc_residual(t, c)), t * t / (4.0 * c) + 1e-12) << "t=" << t << " C=" << c;
        }
}

TEST(Truncation, OffDiagonalSmallCases) {
    EXPECT_EQ(max_abs(truncate_offdiag(Matrix::Zero(3, 3), 1.0)), 0.0);
    Matrix y(1, 1);
    y(0, 0) = 0.5;
    EXPECT_NEAR(std::abs(truncate_offdiag(y, 1.0)(0, 0) - 0.5), 0.0, 1e-15);
    y(0, 0) = 3.0;
    EXPECT_NEAR(std::abs(truncate_offdiag(y, 1.0)(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(Truncation, DilationSpectrumIsSymmetric) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        const Matrix y = random_matrix(3 + t % 4, 3 + t % 4, rng);
        const auto e = herm_eig(hermitian_dilation(y));
        const auto m = e.eigenvalues.size();
        for (Eigen::Index k = 0; k < m; ++k) EXPECT_NEAR(e.eigenvalues(k), -e.eigenvalues(m - 1 - k), 1e-9);
    }
}

TEST(Truncation, NormContractAndPsdBounds) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 30; ++t) {
        const Eigen::Index n = 1 + t % 6;
        const Matrix y = random_matrix(n, n, rng, 0.2 + 0.3 * (t % 5));
        const double c = 0.5 + 0.1 * (t % 7);
        const Matrix z = truncate_offdiag(y, c);
        EXPECT_LE(op_norm(z), c + 1e-9);
        const Matrix r = y - z;
        const Matrix yy = y.adjoint() * y, yyr = y * y.adjoint();
        EXPECT_TRUE(psd_ge((yy * yy) / (16 * c * c), r.adjoint() * r));
        EXPECT_TRUE(psd_ge((yyr * yyr) / (16 * c * c), r * r.adjoint()));
    }
}

TEST(Norms, SmallCases) {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = -2.0;
    EXPECT_NEAR(trace_norm(d), 3.0, 1e-14);
    Matrix e12 = Matrix::Zero(2, 2);
    e12(0, 1) = 1.0;
    EXPECT_NEAR(op_norm(e12), 1.0, 1e-15);
    EXPECT_TRUE(psd_ge(2.0 * Matrix::Identity(2, 2), Matrix::Identity(2, 2)));
    EXPECT_FALSE(psd_ge(Matrix::Identity(2, 2), 2.0 * Matrix::Identity(2, 2)));
}

TEST(Norms, AgreeWithSingularValues) {
    std::mt19937_64 rng(5);
    const Matrix m = random_matrix(5, 3, rng);
    const RealVector s = singular_values(m);
    EXPECT_NEAR(op_norm(m), s(0), 1e-12);
    EXPECT_NEAR(trace_norm(m), s.sum(), 1e-12);
}

TEST(Norms, PsdErrors) {
    Matrix skew = Matrix::Zero(2, 2);
    skew(0, 1) = 1.0;
    try {
        psd_ge(skew, Matrix::Zero(2, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonHermitian);
    }
    Matrix inf = Matrix::Identity(2, 2);
    inf(0, 0) = INFINITY;
    try {
        op_norm(inf);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFinite);
    }
}
