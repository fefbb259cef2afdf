#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nck/probspace.hpp"
#include "test_util.hpp"

using namespace nck;
using nck::test::random_tuple;
using nck::test::scalar;

TEST(Spaces, RademacherLayout) {
    const auto s = rademacher_space(3);
    EXPECT_EQ(s.atoms(), 8u);
    EXPECT_TRUE(s.is_exact());
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s.value(i, 0), cplx(1.0, 0.0));
    EXPECT_EQ(s.value(2, 1), cplx(-1.0, 0.0));
    EXPECT_EQ(s.value(0, 1), cplx(1.0, 0.0));
    EXPECT_EQ(s.value(0, 4), cplx(-1.0, 0.0));
    EXPECT_DOUBLE_EQ(s.weight(5), 0.125);
}

TEST(Spaces, SteinhaussLayout) {
    const auto s = steinhauss_space(2);
    EXPECT_EQ(s.atoms(), 25u);
    const cplx w = std::polar(1.0, 2.0 * std::numbers::pi / 5.0);
    EXPECT_NEAR(std::abs(s.value(1, 1) - w), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s.value(0, 1) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s.value(0, 5) - w), 0.0, 1e-15);
}

TEST(Spaces, OrthonormalFamilies) {
    for (const auto& s : {rademacher_space(4), steinhauss_space(3), lacunary_space(4)}) {
        for (std::size_t i = 0; i < s.d(); ++i)
            for (std::size_t j = 0; j < s.d(); ++j) {
                cplx e(0.0, 0.0), mean(0.0, 0.0);
                for (std::size_t w = 0; w < s.atoms(); ++w) {
                    e += s.weight(w) * s.value(i, w) * std::conj(s.value(j, w));
                    mean += s.weight(w) * s.value(i, w);
                }
                EXPECT_NEAR(std::abs(e - (i == j ? 1.0 : 0.0)), 0.0, 1e-13) << to_string(s.kind());
                EXPECT_NEAR(std::abs(mean), 0.0, 1e-13);
            }
    }
}

TEST(Spaces, Caps) {
    try {
        rademacher_space(max_rademacher_d() + 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DTooLarge);
    }
    try {
        steinhauss_space(9);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SpaceTooLarge);
    }
    EXPECT_THROW(lacunary_space(18), Error);
    EXPECT_THROW(gaussian_space(2, 3, 1), Error);
    EXPECT_NO_THROW(gaussian_space(2, 3, 1, true));
}

TEST(Spaces, WeightValidation) {
    Matrix fam = Matrix::Ones(1, 2);
    EXPECT_THROW(DiscreteProbabilitySpace(SpaceKind::Rademacher, {0.5, 0.6}, fam), Error);
    EXPECT_THROW(DiscreteProbabilitySpace(SpaceKind::Rademacher, {1.5, -0.5}, fam), Error);
    EXPECT_THROW(DiscreteProbabilitySpace(SpaceKind::Rademacher, {1.0}, fam), Error);
}

TEST(Spaces, GaussianIsSeeded) {
    const auto a = gaussian_space(3, 1000, 42), b = gaussian_space(3, 1000, 42), c = gaussian_space(3, 1000, 43);
    EXPECT_EQ(a.family(), b.family());
    EXPECT_NE(a.family(), c.family());
    EXPECT_FALSE(a.is_exact());
}

TEST(Moments, ScalarFourthMoments) {
    const MatrixTuple y({scalar(1.0), scalar(1.0)});
    // Brute force over {±1}²: E(r_1 + r_2)^4 = (16 + 0 + 0 + 16)/4.
    EXPECT_NEAR(fourth_moment_column(y, SpaceKind::Rademacher)(0, 0).real(), 8.0, 1e-14);
    EXPECT_NEAR(fourth_moment_column(y, SpaceKind::GaussianMC)(0, 0).real(), 8.0, 1e-14);
    // E|ξ_1 + ξ_2|^4 = 4 + 4·E(Re ξ_1 conj ξ_2)² = 6 on the circle.
    EXPECT_NEAR(fourth_moment_column(y, SpaceKind::Steinhauss)(0, 0).real(), 6.0, 1e-14);
    EXPECT_NEAR(fourth_moment_row(y, SpaceKind::Lacunary)(0, 0).real(), 6.0, 1e-14);
}

TEST(Moments, IdentitiesOnExactSpaces) {
    std::mt19937_64 rng(20);
    for (int t = 0; t < 8; ++t) {
        const std::size_t d = 1 + t % 4;
        const auto y = random_tuple(d, 1 + t % 3, rng);
        for (const auto& s : {rademacher_space(d), steinhauss_space(d), lacunary_space(d)}) {
            const auto rep = moment_identity_check(y, s);
            EXPECT_TRUE(rep.passed()) << to_string(s.kind()) << " " << (rep.first_failure() ? rep.first_failure()->name : "");
            EXPECT_EQ(rep.entries.size(), 6u);
        }
    }
}

TEST(Moments, IdentitiesOnGaussianSamples) {
    std::mt19937_64 rng(21);
    const auto y = random_tuple(3, 2, rng);
    const auto rep = moment_identity_check(y, gaussian_space(3, 50000, 7));
    EXPECT_TRUE(rep.passed()) << (rep.first_failure() ? rep.first_failure()->name : "");
}

TEST(Moments, RademacherFactorThreeBound) {
    const auto rep = moment_identity_check(MatrixTuple({scalar(1.0), scalar(1.0)}), rademacher_space(2));
    ASSERT_TRUE(rep.passed());
    EXPECT_EQ(rep.entries.back().name, "moments.bound.row.factor3");
}

TEST(GammaRatio, FrozenValues) {
    // Frozen from mpmath gamma(d + 1/2)/gamma(d) at 30 digits.
    EXPECT_NEAR(gamma_ratio(1), 0.8862269254527578, 1e-14);
    EXPECT_NEAR(gamma_ratio(2), 1.3293403881791377, 1e-14);
    EXPECT_NEAR(gamma_ratio(4), 1.9386213994279085, 1e-13);
    EXPECT_NEAR(gamma_ratio(5), 2.180949074356399, 1e-13);
    EXPECT_NEAR(gamma_ratio(10), 3.1230114333906194, 1e-13);
    EXPECT_NEAR(gamma_ratio(16) / 4.0, 0.9922191984572403, 1e-13);
    EXPECT_NEAR(gamma_ratio(1e4) / 100.0, 0.99998750, 1e-8);
    EXPECT_THROW(gamma_ratio(0.0), Error);
}

TEST(GammaRatio, BelowSquareRootAndIncreasingRatio) {
    double prev = 0.0;
    for (int d = 1; d <= 200; ++d) {
        const double r = gamma_ratio(d) / std::sqrt(double(d));
        EXPECT_LT(r, 1.0);
        EXPECT_GT(r, prev);
        prev = r;
    }
}

TEST(Lone, ExactMeanOfScalarRademacher) {
    // E|r_1 + r_2| = (2 + 0 + 0 + 2)/4.
    const auto e = l1_s1_norm(MatrixTuple({scalar(1.0), scalar(1.0)}), rademacher_space(2));
    EXPECT_NEAR(e.mean, 1.0, 1e-15);
    EXPECT_EQ(e.std_err, 0.0);
    EXPECT_THROW(l1_s1_norm(MatrixTuple({scalar(1.0)}), rademacher_space(2)), Error);
}

TEST(ConditionalExpectation, RecoversCoefficients) {
    std::mt19937_64 rng(22);
    for (const auto& s : {rademacher_space(3), steinhauss_space(3), lacunary_space(3)}) {
        const auto y = random_tuple(3, 2, rng);
        EXPECT_LE(conditional_expectation(random_sum(y, s)).max_abs_diff(y), 1e-13);
    }
}

TEST(RandomElementTest, ArithmeticAndSupNorm) {
    const auto s = rademacher_space(2);
    auto x = RandomElement::constant(s, 2.0 * Matrix::Identity(2, 2));
    x += RandomElement::zero(s, 2);
    x *= cplx(0.0, 1.0);
    EXPECT_NEAR(sup_norm(x), 2.0, 1e-15);
    const auto other = rademacher_space(2);
    EXPECT_THROW(x += RandomElement::zero(other, 2), Error);
    EXPECT_LE(conditional_expectation(x).max_abs_entry(), 1e-15);
}
