#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "loe/effectiveness_model.hpp"
#include "loe/fault_decision.hpp"
#include "loe/kalman_estimator.hpp"
#include "loe/signal_conditioning.hpp"

namespace loe {

inline constexpr double kGravity = 9.81;

/// Everything the detection pipeline needs. Defaults are the reference
/// parameter set (G_p = G_q = 1e-4, G_az = 5e-6, Q = 0.1, R = 1,
/// k_thres = 0.25, P_thres = 0.9, estimator step 0.02 s, sensors at 500 Hz).
struct DetectorConfig {
    EffectivenessGains gains{};
    /// Only natural_frequency and damping_ratio are read; the filter always
    /// runs at sensor_interval.
    FilterDesign filter{};
    NoiseConfig noise{};
    DecisionConfig decision{};
    double estimator_interval = 0.02;  // s
    double sensor_interval = 0.002;    // s
    /// Arm once the moving average of filtered sum(w_i^2) exceeds this
    /// fraction of hover_rotor_speed_sq_sum.
    double takeoff_thrust_fraction = 0.5;
    /// Hover reference for sum(w_i^2); default is g / G_az.
    double hover_rotor_speed_sq_sum = kGravity / 5e-6;
    double takeoff_window = 1.0;  // s
    double initial_k = 1.0;
    double initial_variance = 1.0;

    /// Throws ConfigError naming the violated invariant.
    void validate() const;
    /// Samples per estimator tick.
    std::size_t decimation() const;
    FilterDesign filter_design() const;

    bool operator==(const DetectorConfig& other) const;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// `key = value` text, one entry per line, `#` starts a comment. Keys not
/// present keep their defaults; unknown keys are rejected.
DetectorConfig parse_config(std::istream& in, const std::string& origin = "<config>");
DetectorConfig load_config(const std::string& path);
std::string format_config(const DetectorConfig& config);

/// Names accepted by set_config_value / parse_config, in file order.
const std::vector<std::string>& config_keys();
bool set_config_value(DetectorConfig& config, const std::string& key, double value);
std::optional<double> get_config_value(const DetectorConfig& config, const std::string& key);

struct DetectorOutput {
    double timestamp = 0.0;
    Eigen::Vector4d k_hat = Eigen::Vector4d::Ones();
    Eigen::Vector4d variances = Eigen::Vector4d::Zero();
    Eigen::Vector4d p_fail = Eigen::Vector4d::Zero();
    DetectionStatus status{};
    bool armed = false;
    bool estimator_tick = false;

    bool operator==(const DetectorOutput&) const = default;
};

/// Filtering, differentiation, Kalman estimation and the hypothesis test for
/// one sample stream. Not thread-safe; use one instance per stream.
class Detector {
public:
    explicit Detector(const DetectorConfig& config = {});

    /// Throws std::invalid_argument on non-finite values, negative rotor
    /// speeds or a timestamp not after the previous one.
    DetectorOutput process_sample(const RawSample& raw);

    const DetectorConfig& config() const { return config_; }
    bool armed() const { return armed_; }
    const EstimatorState& estimator() const { return estimator_; }
    const DetectionStatus& status() const { return status_; }
    const FilteredSample& last_filtered() const { return filtered_; }
    std::uint64_t samples_processed() const { return sample_index_; }

private:
    void update_gate(const FilteredSample& filtered);
    DetectorOutput snapshot(double timestamp, bool tick) const;

    DetectorConfig config_;
    std::size_t decimation_;
    SignalConditioner conditioner_;
    EstimatorState estimator_;
    DetectionStatus status_{};
    Eigen::Vector4d p_fail_;

    FilteredSample filtered_{};
    std::optional<FilteredSample> previous_tick_;
    std::optional<double> last_timestamp_;
    std::uint64_t sample_index_ = 0;

    std::vector<double> gate_window_;
    std::size_t gate_head_ = 0;
    double gate_sum_ = 0.0;
    bool armed_ = false;
};

struct RuntimeReport {
    std::size_t samples = 0;
    double mean_us = 0.0;
    double p99_us = 0.0;
    double max_us = 0.0;
};

/// Wall-clock cost of Detector::process_sample on a fresh detector, per sample.
RuntimeReport measure_runtime(const DetectorConfig& config, std::span<const RawSample> samples);

}  // namespace loe
