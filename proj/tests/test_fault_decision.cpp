#include <gtest/gtest.h>

#include <random>

#include "loe/fault_decision.hpp"
#include "oracles.hpp"

using namespace loe;

TEST(FailureProbability, Examples)
{
    EXPECT_EQ(failure_probability(0.25, 0.04, 0.25), 0.5);
    EXPECT_NEAR(failure_probability(0.1, 0.01, 0.25), 0.9331927987311419, 1e-12);
    EXPECT_LT(failure_probability(1.0, 0.01, 0.25), 1e-12);
    EXPECT_EQ(failure_probability(0.2, 0.0, 0.25), 1.0);
    EXPECT_EQ(failure_probability(0.3, 0.0, 0.25), 0.0);
    EXPECT_EQ(failure_probability(0.25, 0.0, 0.25), 0.5);
    EXPECT_EQ(failure_probability(1.5, 1e-8, 0.25), 0.0);
    EXPECT_THROW(failure_probability(0.5, -0.1, 0.25), std::invalid_argument);
}

TEST(FailureProbability, AgreesWithNumericalIntegration)
{
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> k(0.0, 1.5);
    std::uniform_real_distribution<double> logvar(-6.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double mean = k(rng);
        const double var = std::pow(10.0, logvar(rng));
        const double expected = oracle::gaussian_lower_tail(mean, var, 0.25);
        EXPECT_NEAR(failure_probability(mean, var, 0.25), expected, 1e-8) << mean << " " << var;
    }
}

TEST(FailureProbability, MonotoneInEstimate)
{
    double prev = 1.0;
    for (double kh = 0.0; kh <= 1.5; kh += 0.01) {
        const double p = failure_probability(kh, 0.05, 0.25);
        EXPECT_LE(p, prev);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
        prev = p;
    }
}

TEST(FailureProbability, IncreasesWithVarianceAboveThreshold)
{
    double prev = 0.0;
    for (double v = 1e-4; v < 10.0; v *= 1.5) {
        const double p = failure_probability(0.8, v, 0.25);
        EXPECT_GE(p, prev);
        prev = p;
    }
}

TEST(FailureProbability, ReflectionSymmetry)
{
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> d(-0.24, 0.24);
    std::uniform_real_distribution<double> v(1e-3, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double delta = d(rng), var = v(rng);
        const double sum = failure_probability(0.25 - delta, var, 0.25) + failure_probability(0.25 + delta, var, 0.25);
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(Decide, LatchesAtStrictThresholdAndStays)
{
    const DecisionConfig cfg{};
    DetectionStatus s{};
    s = decide({0.9, 0.2, 0.1, 0.0}, s, cfg, 1.0);
    EXPECT_FALSE(s.any());
    s = decide({0.95, 0.2, 0.1, 0.0}, s, cfg, 1.02);
    EXPECT_TRUE(s.failed[0]);
    EXPECT_EQ(s.first_detection_time[0], 1.02);
    s = decide({0.0, 0.0, 0.0, 0.0}, s, cfg, 1.04);
    EXPECT_TRUE(s.failed[0]);
    EXPECT_EQ(s.first_detection_time[0], 1.02);
    s = decide({0.99, 0.0, 0.91, 0.0}, s, cfg, 1.06);
    EXPECT_EQ(s.first_detection_time[0], 1.02);
    EXPECT_TRUE(s.failed[2]);
    EXPECT_EQ(s.first_detection_time[2], 1.06);
    EXPECT_FALSE(s.failed[1]);
    EXPECT_FALSE(s.first_detection_time[3].has_value());
}

TEST(Decide, NeverUnlatchesUnderRandomInput)
{
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DetectionStatus s{};
    for (int step = 0; step < 5000; ++step) {
        const auto before = s;
        s = decide({u(rng), u(rng), u(rng), u(rng)}, s, DecisionConfig{}, step * 0.02);
        for (int i = 0; i < 4; ++i) {
            if (before.failed[i]) {
                EXPECT_TRUE(s.failed[i]);
                EXPECT_EQ(s.first_detection_time[i], before.first_detection_time[i]);
            }
        }
    }
}

TEST(DecisionConfig, Validation)
{
    EXPECT_NO_THROW(DecisionConfig{}.validate());
    EXPECT_THROW((DecisionConfig{.k_threshold = 0.0, .probability_threshold = 0.9}.validate()),
                 std::invalid_argument);
    EXPECT_THROW((DecisionConfig{.k_threshold = 0.25, .probability_threshold = 0.5}.validate()),
                 std::invalid_argument);
    EXPECT_THROW((DecisionConfig{.k_threshold = 0.25, .probability_threshold = 1.0}.validate()),
                 std::invalid_argument);
}
