#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nck/opnorms.hpp"
#include "test_util.hpp"

using namespace nck;
using nck::test::random_tuple;
using nck::test::random_weights;
using nck::test::scalar;
using nck::test::unit;

TEST(MatrixTuple, ShapeValidation) {
    try {
        MatrixTuple({Matrix::Zero(2, 2), Matrix::Zero(3, 3)});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
        ASSERT_TRUE(e.index().has_value());
        EXPECT_EQ(*e.index(), 1u);
    }
    EXPECT_THROW(MatrixTuple::zeros(2, 2) += MatrixTuple::zeros(3, 2), Error);
}

TEST(MatrixTuple, Arithmetic) {
    std::mt19937_64 rng(10);
    const auto a = random_tuple(3, 2, rng), b = random_tuple(3, 2, rng);
    const MatrixTuple s = a + b;
    EXPECT_LE((s - b).max_abs_diff(a), 1e-14);
    EXPECT_LE((2.0 * a).max_abs_diff(a + a), 1e-14);
    EXPECT_EQ(MatrixTuple::zeros(2, 3).max_abs_entry(), 0.0);
}

TEST(TripleNorm, SmallCases) {
    EXPECT_NEAR(triple_norm(MatrixTuple({scalar(1.0)})), 1.0, 1e-15);
    EXPECT_NEAR(triple_norm(MatrixTuple({scalar(1.0), scalar(1.0)})), std::sqrt(2.0), 1e-15);
    // {e_{i1}}: column Gram d·e_11, row Gram the identity.
    for (Eigen::Index d = 1; d <= 5; ++d) {
        std::vector<Matrix> v;
        for (Eigen::Index i = 0; i < d; ++i) v.push_back(unit(d, i, 0));
        EXPECT_NEAR(triple_norm(MatrixTuple(v)), std::sqrt(double(d)), 1e-13);
    }
    EXPECT_EQ(triple_norm(MatrixTuple::zeros(3, 2)), 0.0);
}

TEST(TripleNorm, UnitaryInvarianceAndHomogeneity) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 20; ++t) {
        const auto x = random_tuple(1 + t % 4, 1 + t % 3, rng);
        const Eigen::Index n = x.n();
        Eigen::HouseholderQR<Matrix> qr(test::random_matrix(n, n, rng));
        const Matrix u = qr.householderQ();
        std::vector<Matrix> rot;
        for (const auto& m : x) rot.push_back(u * m * u.adjoint());
        const double v = triple_norm(x);
        EXPECT_NEAR(triple_norm(MatrixTuple(rot)), v, 1e-10 * v);
        EXPECT_NEAR(triple_norm(cplx(0.0, -3.0) * x), 3.0 * v, 1e-10 * v);
    }
}

TEST(TripleNorm, TriangleInequality) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 30; ++t) {
        const auto a = random_tuple(3, 2, rng), b = random_tuple(3, 2, rng);
        EXPECT_LE(triple_norm(a + b), triple_norm(a) + triple_norm(b) + 1e-12);
    }
}

TEST(WeightedNorm, HalfWeightsScaleByRootHalf) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 10; ++t) {
        const auto x = random_tuple(3, 3, rng);
        EXPECT_NEAR(weighted_triple_norm(x, WeightedSpace::uniform(3, 0.5)), triple_norm(x) / std::numbers::sqrt2,
                    1e-12 * triple_norm(x));
    }
}

TEST(WeightedNorm, Validation) {
    EXPECT_THROW(WeightedSpace({0.5, 1.2}), Error);
    EXPECT_THROW(WeightedSpace({std::nan("")}), Error);
    EXPECT_THROW(weighted_triple_norm(MatrixTuple::zeros(2, 2), WeightedSpace::uniform(3, 0.5)), Error);
}

TEST(DualNorm, ScalarAndTraceNorm) {
    const auto r = dual_norm(MatrixTuple({scalar(1.0)}));
    EXPECT_NEAR(r.value, 1.0, 1e-8);
    EXPECT_TRUE(r.converged);
    std::mt19937_64 rng(14);
    for (int t = 0; t < 10; ++t) {
        const auto x = random_tuple(1, 1 + t % 4, rng);
        EXPECT_NEAR(dual_norm(x).value, trace_norm(x[0]), 1e-8 * (1.0 + trace_norm(x[0])));
    }
}

TEST(DualNorm, KnownValues) {
    EXPECT_NEAR(dual_norm(MatrixTuple({scalar(1.0), scalar(1.0)})).value, std::sqrt(2.0), 1e-6);
    for (Eigen::Index d = 2; d <= 4; ++d) {
        std::vector<Matrix> v;
        for (Eigen::Index i = 0; i < d; ++i) v.push_back(unit(d, i, 0));
        EXPECT_NEAR(dual_norm(MatrixTuple(v)).value, std::sqrt(double(d)), 1e-6);
    }
    const auto half = dual_norm(MatrixTuple({scalar(1.0)}), WeightedSpace({0.5}));
    EXPECT_NEAR(half.value, std::numbers::sqrt2, 1e-6);
}

TEST(DualNorm, GapCertificateAndDecomposition) {
    std::mt19937_64 rng(15);
    for (int t = 0; t < 40; ++t) {
        const auto x = random_tuple(1 + t % 4, 1 + (t / 4) % 4, rng);
        const auto r = dual_norm(x);
        EXPECT_TRUE(r.converged);
        EXPECT_LE(r.gap, 1e-5);
        EXPECT_LE(r.certificate, r.value + 1e-9);
        EXPECT_NEAR(r.value - r.certificate, r.gap, 1e-12);
        EXPECT_LE((r.y + r.z).max_abs_diff(x), 1e-9 * (1.0 + x.max_abs_entry()));
        EXPECT_NEAR(decomposition_cost(r.y, r.z, nullptr), r.value, 1e-9 * (1.0 + r.value));
        // The witness lies in the primal unit ball.
        EXPECT_LE(triple_norm(r.witness), 1.0 + 1e-9);
    }
}

TEST(DualNorm, WeightedGapAndHalfScaling) {
    std::mt19937_64 rng(16);
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 1 + t % 4;
        const auto x = random_tuple(d, 1 + t % 3, rng);
        const WeightedSpace w(random_weights(d, rng));
        const auto r = dual_norm(x, w);
        EXPECT_LE(r.gap, 1e-5);
        EXPECT_LE(weighted_triple_norm(r.witness, w), 1.0 + 1e-9);
        const double u = dual_norm(x).value;
        EXPECT_NEAR(dual_norm(x, WeightedSpace::uniform(d, 0.5)).value, std::numbers::sqrt2 * u, 1e-5 * u);
    }
}

TEST(DualNorm, PairingBoundedByNorms) {
    // |<x, b>| ≤ |||x|||* · |||b||| for any b.
    std::mt19937_64 rng(17);
    for (int t = 0; t < 20; ++t) {
        const auto x = random_tuple(3, 2, rng), b = random_tuple(3, 2, rng);
        EXPECT_LE(std::abs(pairing(x, b)), dual_norm(x).value * triple_norm(b) * (1.0 + 1e-5));
    }
}

TEST(DualNorm, DegenerateWeightAndZero) {
    try {
        dual_norm(MatrixTuple({scalar(1.0)}), WeightedSpace({1.0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateWeight);
    }
    EXPECT_EQ(dual_norm(MatrixTuple::zeros(2, 2)).value, 0.0);
    try {
        pairing_certificate(MatrixTuple({scalar(1.0)}), MatrixTuple({scalar(0.0)}), nullptr);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroWitness);
    }
}
