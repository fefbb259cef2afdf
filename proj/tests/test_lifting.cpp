#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nck/lifting.hpp"
#include "test_util.hpp"

using namespace nck;
using nck::test::random_matrix;
using nck::test::random_tuple;
using nck::test::random_weights;
using nck::test::scalar;

TEST(LiftConfigTest, Presets) {
    EXPECT_NEAR(LiftConfig::preset(SpaceKind::Rademacher).constant(), std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(LiftConfig::preset(SpaceKind::Steinhauss).constant(), std::numbers::sqrt2, 1e-15);
    EXPECT_NEAR(LiftConfig::car().constant(), std::numbers::sqrt2, 1e-15);
    LiftConfig bad;
    bad.C = 0.0;
    EXPECT_THROW(bad.validate(), Error);
    bad = LiftConfig{};
    bad.delta = 1.0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(LiftCommutative, ZeroTuple) {
    const auto s = rademacher_space(2);
    const auto rep = lift(MatrixTuple::zeros(2, 2), CommutativeSetting(s), LiftConfig::preset(s.kind()));
    EXPECT_EQ(rep.iterations, 0u);
    EXPECT_EQ(rep.ratio, 0.0);
}

TEST(LiftCommutative, ExactFamiliesMeetTheirConstants) {
    std::mt19937_64 rng(40);
    for (int t = 0; t < 9; ++t) {
        const std::size_t d = 1 + t % 5;
        const auto x = random_tuple(d, 1 + t % 3, rng);
        for (const auto& s : {rademacher_space(d), steinhauss_space(d), lacunary_space(d)}) {
            const auto cfg = LiftConfig::preset(s.kind());
            const auto rep = lift(x, CommutativeSetting(s), cfg);
            EXPECT_LE(rep.ratio, cfg.constant() * (1.0 + 1e-6)) << to_string(s.kind());
            EXPECT_LE(rep.reconstruction_error, 1e-8 * (1.0 + x.max_abs_entry()));
            for (std::size_t k = 1; k < rep.residual_history.size(); ++k)
                EXPECT_LE(rep.residual_history[k], 0.5 * rep.residual_history[k - 1] * (1.0 + 1e-9));
        }
    }
}

TEST(LiftCommutative, SampledSpaceNeedsExperimentalMode) {
    const auto s = gaussian_space(2, 1000, 3);
    try {
        CommutativeSetting setting(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
    EXPECT_NO_THROW(CommutativeSetting(s, true));
}

TEST(LiftCommutative, TinyGaussianSampleStalls) {
    // Four samples are far from orthonormal, so the first step cannot contract.
    const auto s = gaussian_space(2, 4, 1, true);
    const MatrixTuple x({Matrix::Identity(2, 2), Matrix::Zero(2, 2)});
    try {
        lift(x, CommutativeSetting(s, true), LiftConfig::preset(SpaceKind::GaussianMC));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StalledIteration);
        ASSERT_TRUE(e.index().has_value());
        EXPECT_EQ(*e.index(), 0u);
    }
}

TEST(LiftCar, HalfWeightScalar) {
    const CarSystem sys{WeightedSpace({0.5})};
    const auto rep = lift(MatrixTuple({scalar(1.0)}), CarSetting(sys), LiftConfig::car());
    EXPECT_NEAR(rep.target_norm, 1.0 / std::numbers::sqrt2, 1e-15);
    EXPECT_LE(rep.ratio, std::numbers::sqrt2 * (1.0 + 1e-6));
    EXPECT_LE(rep.reconstruction_error, 1e-9);
    const auto b = quotient_norm_bracket(MatrixTuple({scalar(1.0)}), CarSetting(sys), LiftConfig::car());
    EXPECT_TRUE(b.passed);
    EXPECT_LE(b.lower, b.upper + 1e-12);
}

TEST(LiftCar, RandomTuples) {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 6; ++t) {
        const std::size_t d = 1 + t % 4;
        const CarSystem sys{WeightedSpace(random_weights(d, rng))};
        const auto x = random_tuple(d, 1 + t % 2, rng);
        const auto rep = lift(x, CarSetting(sys), LiftConfig::car());
        EXPECT_LE(rep.ratio, std::numbers::sqrt2 * (1.0 + 1e-6));
        EXPECT_LE(rep.reconstruction_error, 1e-8 * (1.0 + x.max_abs_entry()));
        EXPECT_EQ(rep.step_norms.size(), rep.iterations);
    }
}

TEST(LiftCar, StepNormsBoundedByLevel) {
    std::mt19937_64 rng(42);
    const CarSystem sys{WeightedSpace({0.3, 0.6})};
    const auto x = random_tuple(2, 2, rng);
    const auto cfg = LiftConfig::car();
    const auto rep = lift(x, CarSetting(sys), cfg);
    for (std::size_t k = 0; k < rep.step_norms.size(); ++k)
        EXPECT_LE(rep.step_norms[k], cfg.C * rep.residual_history[k] * (1.0 + 1e-9));
}

TEST(Corrector, OneStepContractsNormalizedInputs) {
    std::mt19937_64 rng(43);
    const auto s = rademacher_space(3);
    const double c = LiftConfig::preset(SpaceKind::Rademacher).C;
    for (int t = 0; t < 10; ++t) {
        auto y = random_tuple(3, 2, rng);
        y *= cplx(1.0 / triple_norm(y), 0.0);
        const auto step = corrector_commutative(y, s, c);
        EXPECT_LE(sup_norm(step.Z), c + 1e-9);
        EXPECT_LE(triple_norm(y - step.z), 0.5 + 1e-9);
    }
}

TEST(TruncationBound, CommutativeAndCarElements) {
    std::mt19937_64 rng(44);
    const auto s = rademacher_space(3);
    const CarSystem sys{WeightedSpace({0.2, 0.5, 0.9})};
    for (int t = 0; t < 6; ++t) {
        const auto y = random_tuple(3, 2, rng, 0.3 + 0.4 * t);
        const auto big = random_sum(y, s);
        for (std::size_t w = 0; w < big.atoms(); ++w) EXPECT_TRUE(truncation_bound_check(big[w], 0.7).passed());
        EXPECT_TRUE(truncation_bound_check(car_element(y, sys), 0.7).passed());
    }
    EXPECT_TRUE(truncation_bound_check(random_matrix(5, 5, rng, 10.0), 0.1).passed());
}
