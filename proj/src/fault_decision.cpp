#include "loe/fault_decision.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace loe {

void DecisionConfig::validate() const
{
    if (!(k_threshold > 0.0 && k_threshold < 1.0)) {
        throw std::invalid_argument("k_threshold must lie in (0, 1)");
    }
    if (!(probability_threshold > 0.5 && probability_threshold < 1.0)) {
        throw std::invalid_argument("probability_threshold must lie in (0.5, 1)");
    }
}

double failure_probability(double k_hat, double variance, double k_threshold)
{
    if (!(variance >= 0.0)) {
        throw std::invalid_argument("failure_probability: variance must be >= 0");
    }
    if (k_hat == k_threshold) {
        return 0.5;
    }
    if (variance == 0.0) {
        return k_hat < k_threshold ? 1.0 : 0.0;
    }
    // Phi(u) = erfc(-u / sqrt 2) / 2 keeps full relative accuracy in the lower tail.
    const double u = (k_threshold - k_hat) / std::sqrt(variance);
    const double p = 0.5 * std::erfc(-u * (1.0 / std::numbers::sqrt2));
    return p < 1e-300 ? 0.0 : p;
}

Eigen::Vector4d failure_probabilities(const Eigen::Vector4d& k_hat, const Eigen::Vector4d& variances,
                                      double k_threshold)
{
    Eigen::Vector4d p;
    for (int i = 0; i < 4; ++i) {
        p[i] = failure_probability(k_hat[i], variances[i], k_threshold);
    }
    return p;
}

DetectionStatus decide(const Eigen::Vector4d& probs, const DetectionStatus& status,
                       const DecisionConfig& config, double now)
{
    DetectionStatus next = status;
    for (int i = 0; i < 4; ++i) {
        if (!next.failed[i] && probs[i] > config.probability_threshold) {
            next.failed[i] = true;
            next.first_detection_time[i] = now;
        }
    }
    return next;
}

}  // namespace loe
