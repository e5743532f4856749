#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "loe/signal_conditioning.hpp"

using namespace loe;

namespace {

FilterDesign reference_design()
{
    return FilterDesign{.natural_frequency = 50.0, .damping_ratio = 0.55, .sample_interval = 0.002};
}

std::vector<double> run(const FilterCoefficients& k, const std::vector<double>& input)
{
    Biquad f(k);
    f.reset(input.front());
    std::vector<double> out;
    for (double x : input) out.push_back(f.step(x));
    return out;
}

RawSample sample_with_p(double t, double p)
{
    RawSample s;
    s.timestamp = t;
    s.angular_rate = {p, 0.0, 0.0};
    return s;
}

}  // namespace

TEST(FilterDesign, RejectsInvalidParameters)
{
    auto d = reference_design();
    d.natural_frequency = 0.0;
    EXPECT_THROW(design_lowpass(d), std::invalid_argument);
    d = reference_design();
    d.damping_ratio = 1.0;
    EXPECT_THROW(design_lowpass(d), std::invalid_argument);
    d = reference_design();
    d.sample_interval = -0.002;
    EXPECT_THROW(design_lowpass(d), std::invalid_argument);
    d = reference_design();
    d.natural_frequency = 1600.0;  // Nyquist at 500 Hz is ~1570.8 rad/s
    EXPECT_THROW(design_lowpass(d), std::invalid_argument);
}

TEST(FilterDesign, UnityDcGainAndStablePoles)
{
    const auto k = design_lowpass(reference_design());
    EXPECT_NEAR(k.dc_gain(), 1.0, 1e-14);
    // z^2 + a1 z + a2: both roots inside the unit circle
    const double disc = k.a1 * k.a1 - 4.0 * k.a2;
    if (disc < 0.0) {
        EXPECT_LT(std::sqrt(k.a2), 1.0);
    } else {
        EXPECT_LT(std::abs((-k.a1 + std::sqrt(disc)) / 2.0), 1.0);
        EXPECT_LT(std::abs((-k.a1 - std::sqrt(disc)) / 2.0), 1.0);
    }
}

TEST(FilterDesign, MagnitudeAtNaturalFrequencyMatchesAnalog)
{
    const auto d = reference_design();
    const auto k = design_lowpass(d);
    const double analog = 1.0 / (2.0 * d.damping_ratio);  // |H(j wn)| of the prototype
    EXPECT_NEAR(k.magnitude_at(d.natural_frequency, d.sample_interval), analog, 0.02 * analog);
}

TEST(FilterDesign, ConstantInputConverges)
{
    const auto k = design_lowpass(reference_design());
    Biquad f(k);
    double y = 0.0;
    for (int i = 0; i < 3000; ++i) y = f.step(3.7);
    EXPECT_NEAR(y, 3.7, 1e-12);
}

TEST(FilterDesign, ImpulseResponseDecays)
{
    const auto k = design_lowpass(reference_design());
    Biquad f(k);
    double peak = 0.0, last = 0.0;
    for (int i = 0; i < 2000; ++i) {
        last = f.step(i == 0 ? 1.0 : 0.0);
        peak = std::max(peak, std::abs(last));
    }
    EXPECT_GT(peak, 0.0);
    EXPECT_LT(std::abs(last), 1e-6 * peak);
}

TEST(FilterStep, ZeroInputGivesZeroOutput)
{
    SignalConditioner c(reference_design());
    for (int i = 0; i < 100; ++i) {
        RawSample s;
        s.timestamp = i * 0.002;
        const auto f = c.step(s);
        EXPECT_EQ(f.rates, Eigen::Vector3d::Zero());
        EXPECT_EQ(f.accel_z, 0.0);
        EXPECT_EQ(f.rotor_speeds, Eigen::Vector4d::Zero());
    }
}

TEST(FilterStep, StepOvershootMatchesSecondOrderPrototype)
{
    const auto d = reference_design();
    std::vector<double> input(3000, 1.0);
    input[0] = 0.0;
    const auto out = run(design_lowpass(d), input);
    const double peak = *std::max_element(out.begin(), out.end());
    const double overshoot = peak - 1.0;
    const double zeta = d.damping_ratio;
    const double analytic = std::exp(-std::numbers::pi * zeta / std::sqrt(1.0 - zeta * zeta));
    EXPECT_NEAR(analytic, 0.126324, 1e-6);
    EXPECT_NEAR(overshoot, analytic, 0.03 * analytic);
    EXPECT_NEAR(out.back(), 1.0, 1e-12);
}

TEST(FilterStep, IdenticalChannelsAreBitIdentical)
{
    SignalConditioner c(reference_design());
    std::mt19937 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double v = n(rng);
        RawSample s;
        s.timestamp = i * 0.002;
        s.angular_rate = {v, v, v};
        s.accel_z = v;
        s.rotor_speeds.setConstant(std::abs(v));
        s.rotor_speeds[1] = v < 0 ? 0.0 : v;  // keep nonnegative, unused below
        const auto f = c.step(s);
        EXPECT_EQ(f.rates.x(), f.rates.y());
        EXPECT_EQ(f.rates.x(), f.rates.z());
        EXPECT_EQ(f.rates.x(), f.accel_z);
        EXPECT_EQ(f.rotor_speeds[0], f.rotor_speeds[2]);
    }
}

TEST(FilterStep, ChannelPermutationInvariance)
{
    // feeding a signal through any channel gives the same numbers
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 900.0);
    std::vector<double> signal(400);
    for (auto& v : signal) v = u(rng);

    std::vector<std::vector<double>> per_channel(8);
    for (int ch = 0; ch < 8; ++ch) {
        SignalConditioner c(reference_design());
        for (std::size_t i = 0; i < signal.size(); ++i) {
            RawSample s;
            s.timestamp = static_cast<double>(i) * 0.002;
            if (ch < 3) s.angular_rate[ch] = signal[i];
            else if (ch == 3) s.accel_z = signal[i];
            else s.rotor_speeds[ch - 4] = signal[i];
            const auto f = c.step(s);
            const double out = ch < 3 ? f.rates[ch] : ch == 3 ? f.accel_z : f.rotor_speeds[ch - 4];
            per_channel[static_cast<std::size_t>(ch)].push_back(out);
        }
    }
    for (int ch = 1; ch < 8; ++ch) EXPECT_EQ(per_channel[0], per_channel[static_cast<std::size_t>(ch)]);
}

TEST(FilterStep, Linearity)
{
    const auto k = design_lowpass(reference_design());
    std::mt19937 rng(5);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(300), y(300), mix(300);
        const double a = n(rng), b = n(rng);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = n(rng);
            y[i] = n(rng);
            mix[i] = a * x[i] + b * y[i];
        }
        const auto fx = run(k, x), fy = run(k, y), fm = run(k, mix);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double expected = a * fx[i] + b * fy[i];
            EXPECT_NEAR(fm[i], expected, 1e-12 * (1.0 + std::abs(a * fx[i]) + std::abs(b * fy[i])));
        }
    }
}

TEST(FilterStep, WarmStartHasNoTransient)
{
    SignalConditioner c(reference_design());
    RawSample s;
    s.angular_rate = {0.1, -0.2, 0.3};
    s.accel_z = -9.81;
    s.rotor_speeds.setConstant(700.0);
    for (int i = 0; i < 50; ++i) {
        s.timestamp = i * 0.002;
        const auto f = c.step(s);
        EXPECT_NEAR(f.accel_z, -9.81, 1e-12);
        EXPECT_NEAR(f.rotor_speeds[2], 700.0, 1e-10);
    }
}

TEST(Differentiate, ConstantRatesGiveZero)
{
    FilteredSample a, b;
    a.timestamp = 0.0;
    b.timestamp = 0.02;
    a.rates = b.rates = {0.3, -0.1, 2.0};
    EXPECT_EQ(differentiate(a, b), Eigen::Vector2d::Zero());
}

TEST(Differentiate, BackwardDifference)
{
    FilteredSample a, b;
    a.timestamp = 1.0;
    b.timestamp = 1.02;
    a.rates = {0.10, 0.0, 0.0};
    b.rates = {0.12, 0.0, 0.0};
    EXPECT_NEAR(differentiate(a, b, 0.02).x(), 1.0, 1e-12);
    EXPECT_NEAR(differentiate(a, b).x(), 1.0, 1e-9);
}

TEST(Differentiate, RejectsNonIncreasingTime)
{
    FilteredSample a, b;
    a.timestamp = b.timestamp = 1.0;
    EXPECT_THROW(differentiate(a, b), std::invalid_argument);
    b.timestamp = 0.5;
    EXPECT_THROW(differentiate(a, b, 0.02), std::invalid_argument);
}

TEST(Differentiate, RampPassesWithSlope)
{
    const double slope = 2.5;  // rad/s^2
    SignalConditioner c(reference_design());
    FilteredSample prev;
    bool have_prev = false;
    Eigen::Vector2d d = Eigen::Vector2d::Zero();
    for (int i = 0; i < 2000; ++i) {
        const double t = i * 0.002;
        const auto f = c.step(sample_with_p(t, slope * t));
        if (i % 10 == 0) {
            if (have_prev) d = differentiate(prev, f, 0.02);
            prev = f;
            have_prev = true;
        }
    }
    EXPECT_NEAR(d.x(), slope, 0.01 * slope);
}

TEST(Differentiate, CumulativeSumTelescopes)
{
    SignalConditioner c(reference_design());
    std::mt19937 rng(9);
    std::normal_distribution<double> n(0.0, 1.0);
    const double dt = 0.002;
    FilteredSample first, prev;
    double sum = 0.0, worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto f = c.step(sample_with_p(i * dt, std::sin(i * 0.01) + 0.1 * n(rng)));
        if (i == 0) {
            first = prev = f;
            continue;
        }
        sum += differentiate(prev, f, dt).x() * dt;
        prev = f;
        const double target = f.rates.x() - first.rates.x();
        worst = std::max(worst, std::abs(sum - target) / std::max(1.0, std::abs(target)));
    }
    EXPECT_LE(worst, 1e-9);
}
