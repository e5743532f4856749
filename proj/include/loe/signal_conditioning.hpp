#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Core>

namespace loe {

/// Continuous second-order low-pass prototype
/// H(s) = wn^2 / (s^2 + 2 zeta wn s + wn^2), sampled every sample_interval.
struct FilterDesign {
    double natural_frequency = 50.0;  // rad/s
    double damping_ratio = 0.55;
    double sample_interval = 0.002;  // s

    /// Throws std::invalid_argument naming the violated constraint.
    void validate() const;
};

/// Normalized biquad coefficients (a0 == 1).
struct FilterCoefficients {
    double b0 = 1.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
    /// |H(e^{j w T})| for angular frequency w in rad/s.
    double magnitude_at(double angular_frequency, double sample_interval) const;
};

/// Bilinear transform with the warping frequency set to wn, so the discrete
/// magnitude at wn equals the analog 1/(2 zeta).
FilterCoefficients design_lowpass(const FilterDesign& design);

/// Direct-form I recursion for a single channel.
class Biquad {
public:
    Biquad() = default;
    explicit Biquad(const FilterCoefficients& coeffs) : coeffs_(coeffs) {}

    /// Fill the memory as if `value` had been applied forever.
    void reset(double value);
    double step(double input);

    const FilterCoefficients& coefficients() const { return coeffs_; }

private:
    FilterCoefficients coeffs_{};
    double x1_ = 0.0, x2_ = 0.0;
    double y1_ = 0.0, y2_ = 0.0;
};

struct RawSample {
    double timestamp = 0.0;                          // s
    Eigen::Vector3d angular_rate = Eigen::Vector3d::Zero();   // p, q, r [rad/s]
    double accel_z = 0.0;                            // proper acceleration [m/s^2]
    Eigen::Vector4d rotor_speeds = Eigen::Vector4d::Zero();   // [rad/s]
};

struct FilteredSample {
    double timestamp = 0.0;
    Eigen::Vector3d rates = Eigen::Vector3d::Zero();
    double accel_z = 0.0;
    Eigen::Vector4d rotor_speeds = Eigen::Vector4d::Zero();
    Eigen::Vector2d angular_accel = Eigen::Vector2d::Zero();  // pdot, qdot
};

/// Filters p, q, r, a_z and the four rotor speeds with one shared set of
/// coefficients. Memory is warm-started from the first sample seen.
class SignalConditioner {
public:
    static constexpr std::size_t kChannels = 8;

    explicit SignalConditioner(const FilterDesign& design);

    /// Advances every channel by one sample. angular_accel is left at zero;
    /// see differentiate().
    FilteredSample step(const RawSample& raw);

    void reset();
    bool primed() const { return primed_; }
    const FilterCoefficients& coefficients() const { return coeffs_; }

private:
    FilterCoefficients coeffs_;
    std::array<Biquad, kChannels> channels_;
    bool primed_ = false;
};

/// Backward difference of the filtered p and q channels over dt.
/// Throws std::invalid_argument unless current.timestamp > previous.timestamp.
Eigen::Vector2d differentiate(const FilteredSample& previous, const FilteredSample& current,
                              double dt);

/// Same, with dt taken from the timestamps.
Eigen::Vector2d differentiate(const FilteredSample& previous, const FilteredSample& current);

}  // namespace loe
