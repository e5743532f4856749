#include "loe/detector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "loe/text.hpp"

namespace loe {

Detector::Detector(const DetectorConfig& config)
    : config_((config.validate(), config)),
      decimation_(config.decimation()),
      conditioner_(config.filter_design()),
      estimator_(init_estimator(Eigen::Vector4d::Constant(config.initial_k), config.initial_variance)),
      p_fail_(failure_probabilities(estimator_.x, estimator_.variances(), config.decision.k_threshold)),
      gate_window_(static_cast<std::size_t>(
                       std::max<long long>(1, std::llround(config.takeoff_window / config.sensor_interval))),
                   0.0)
{
}

void Detector::update_gate(const FilteredSample& filtered)
{
    const double thrust_proxy = filtered.rotor_speeds.squaredNorm();
    gate_sum_ += thrust_proxy - gate_window_[gate_head_];
    gate_window_[gate_head_] = thrust_proxy;
    gate_head_ = (gate_head_ + 1) % gate_window_.size();

    // Samples before the stream start count as stopped rotors.
    const double average = gate_sum_ / static_cast<double>(gate_window_.size());
    if (!armed_ && average > config_.takeoff_thrust_fraction * config_.hover_rotor_speed_sq_sum) {
        armed_ = true;
    }
}

DetectorOutput Detector::process_sample(const RawSample& raw)
{
    if (!std::isfinite(raw.timestamp) || !raw.angular_rate.allFinite() || !std::isfinite(raw.accel_z) ||
        !raw.rotor_speeds.allFinite()) {
        throw std::invalid_argument("sample at t=" + text::format_double(raw.timestamp) +
                                    " contains a non-finite value");
    }
    if ((raw.rotor_speeds.array() < 0.0).any()) {
        throw std::invalid_argument("sample at t=" + text::format_double(raw.timestamp) +
                                    " has a negative rotor speed");
    }
    if (last_timestamp_ && !(raw.timestamp > *last_timestamp_)) {
        throw std::invalid_argument("timestamp " + text::format_double(raw.timestamp) +
                                    " does not follow " + text::format_double(*last_timestamp_));
    }
    last_timestamp_ = raw.timestamp;

    filtered_ = conditioner_.step(raw);
    update_gate(filtered_);

    const bool tick = sample_index_ % decimation_ == 0;
    if (tick) {
        if (previous_tick_) {
            filtered_.angular_accel = differentiate(*previous_tick_, filtered_, config_.estimator_interval);
        }
        if (armed_) {
            const Matrix34 H = observation_matrix(config_.gains, filtered_.rotor_speeds);
            const Eigen::Vector3d z{filtered_.angular_accel.x(), filtered_.angular_accel.y(),
                                    filtered_.accel_z};
            estimator_ = kalman_step(estimator_, H, z, config_.noise);
            p_fail_ = failure_probabilities(estimator_.x, estimator_.variances(),
                                            config_.decision.k_threshold);
            status_ = decide(p_fail_, status_, config_.decision, raw.timestamp);
        }
        previous_tick_ = filtered_;
    } else if (previous_tick_) {
        filtered_.angular_accel = previous_tick_->angular_accel;
    }
    ++sample_index_;
    return snapshot(raw.timestamp, tick);
}

DetectorOutput Detector::snapshot(double timestamp, bool tick) const
{
    DetectorOutput out;
    out.timestamp = timestamp;
    out.k_hat = estimator_.x;
    out.variances = estimator_.variances();
    out.p_fail = p_fail_;
    out.status = status_;
    out.armed = armed_;
    out.estimator_tick = tick;
    return out;
}

RuntimeReport measure_runtime(const DetectorConfig& config, std::span<const RawSample> samples)
{
    using clock = std::chrono::steady_clock;
    Detector detector(config);
    std::vector<double> cost_us;
    cost_us.reserve(samples.size());
    for (const auto& s : samples) {
        const auto t0 = clock::now();
        const auto out = detector.process_sample(s);
        const auto t1 = clock::now();
        // keep the result observable so the call is not elided
        if (out.timestamp != s.timestamp) throw std::logic_error("timestamp mismatch");
        cost_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }

    RuntimeReport report;
    report.samples = cost_us.size();
    if (cost_us.empty()) return report;
    report.mean_us = std::accumulate(cost_us.begin(), cost_us.end(), 0.0) / static_cast<double>(cost_us.size());
    auto sorted = cost_us;
    const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size()))) - 1;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
    report.p99_us = sorted[idx];
    report.max_us = *std::max_element(cost_us.begin(), cost_us.end());
    return report;
}

}  // namespace loe
