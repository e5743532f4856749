#include "loe/signal_conditioning.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace loe {

void FilterDesign::validate() const
{
    if (!(natural_frequency > 0.0)) {
        throw std::invalid_argument("filter natural_frequency must be > 0");
    }
    if (!(damping_ratio > 0.0 && damping_ratio < 1.0)) {
        throw std::invalid_argument("filter damping_ratio must lie in (0, 1)");
    }
    if (!(sample_interval > 0.0)) {
        throw std::invalid_argument("filter sample_interval must be > 0");
    }
    if (!(natural_frequency < std::numbers::pi / sample_interval)) {
        throw std::invalid_argument("filter natural_frequency " + std::to_string(natural_frequency) +
                                    " rad/s is not below Nyquist " +
                                    std::to_string(std::numbers::pi / sample_interval) + " rad/s");
    }
}

double FilterCoefficients::magnitude_at(double angular_frequency, double sample_interval) const
{
    const std::complex<double> zinv = std::polar(1.0, -angular_frequency * sample_interval);
    const auto num = b0 + zinv * (b1 + zinv * b2);
    const auto den = 1.0 + zinv * (a1 + zinv * a2);
    return std::abs(num / den);
}

FilterCoefficients design_lowpass(const FilterDesign& design)
{
    design.validate();
    const double wn = design.natural_frequency;
    const double zeta = design.damping_ratio;
    // s -> c (1 - z^-1) / (1 + z^-1), c warped so that wn maps onto itself
    const double c = wn / std::tan(0.5 * wn * design.sample_interval);
    const double c2 = c * c;
    const double wn2 = wn * wn;
    const double a0 = c2 + 2.0 * zeta * wn * c + wn2;

    FilterCoefficients k;
    k.a1 = 2.0 * (wn2 - c2) / a0;
    k.a2 = (c2 - 2.0 * zeta * wn * c + wn2) / a0;
    k.b0 = wn2 / a0;
    k.b1 = 2.0 * k.b0;
    k.b2 = k.b0;
    return k;
}

void Biquad::reset(double value)
{
    x1_ = x2_ = value;
    y1_ = y2_ = value;
}

double Biquad::step(double input)
{
    const double y = coeffs_.b0 * input + coeffs_.b1 * x1_ + coeffs_.b2 * x2_ - coeffs_.a1 * y1_ -
                     coeffs_.a2 * y2_;
    x2_ = x1_;
    x1_ = input;
    y2_ = y1_;
    y1_ = y;
    return y;
}

SignalConditioner::SignalConditioner(const FilterDesign& design) : coeffs_(design_lowpass(design))
{
    channels_.fill(Biquad(coeffs_));
}

void SignalConditioner::reset()
{
    channels_.fill(Biquad(coeffs_));
    primed_ = false;
}

FilteredSample SignalConditioner::step(const RawSample& raw)
{
    const std::array<double, kChannels> in{raw.angular_rate.x(), raw.angular_rate.y(),
                                           raw.angular_rate.z(), raw.accel_z,
                                           raw.rotor_speeds[0],   raw.rotor_speeds[1],
                                           raw.rotor_speeds[2],   raw.rotor_speeds[3]};
    if (!primed_) {
        for (std::size_t i = 0; i < kChannels; ++i) {
            channels_[i].reset(in[i]);
        }
        primed_ = true;
    }

    std::array<double, kChannels> out{};
    for (std::size_t i = 0; i < kChannels; ++i) {
        out[i] = channels_[i].step(in[i]);
    }

    FilteredSample f;
    f.timestamp = raw.timestamp;
    f.rates = {out[0], out[1], out[2]};
    f.accel_z = out[3];
    f.rotor_speeds = {out[4], out[5], out[6], out[7]};
    return f;
}

Eigen::Vector2d differentiate(const FilteredSample& previous, const FilteredSample& current,
                              double dt)
{
    if (!(current.timestamp > previous.timestamp)) {
        throw std::invalid_argument("differentiate: timestamps must be strictly increasing");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("differentiate: dt must be > 0");
    }
    return (current.rates.head<2>() - previous.rates.head<2>()) / dt;
}

Eigen::Vector2d differentiate(const FilteredSample& previous, const FilteredSample& current)
{
    return differentiate(previous, current, current.timestamp - previous.timestamp);
}

}  // namespace loe
