#pragma once

#include <array>
#include <optional>

#include <Eigen/Core>

namespace loe {

struct DecisionConfig {
    double k_threshold = 0.25;
    double probability_threshold = 0.9;

    void validate() const;
};

/// Per-actuator latched failure flags. A latch never opens again.
struct DetectionStatus {
    std::array<bool, 4> failed{};
    std::array<std::optional<double>, 4> first_detection_time{};

    bool any() const { return failed[0] || failed[1] || failed[2] || failed[3]; }
    bool operator==(const DetectionStatus&) const = default;
};

/// P(k < k_threshold) for k ~ N(k_hat, variance), i.e.
/// Phi((k_threshold - k_hat) / sqrt(variance)). Zero variance gives the
/// indicator k_hat < k_threshold (0.5 at equality). Results below 1e-300
/// are returned as 0. Throws std::invalid_argument for negative variance.
double failure_probability(double k_hat, double variance, double k_threshold);

Eigen::Vector4d failure_probabilities(const Eigen::Vector4d& k_hat, const Eigen::Vector4d& variances,
                                      double k_threshold);

/// Latches actuator i when probs[i] > probability_threshold (strict) and
/// stamps newly latched actuators with `now`.
DetectionStatus decide(const Eigen::Vector4d& probs, const DetectionStatus& status,
                       const DecisionConfig& config, double now);

}  // namespace loe
