#pragma once

#include <Eigen/Core>

#include "loe/effectiveness_model.hpp"

namespace loe {

inline constexpr double kEffectivenessMin = 0.0;
inline constexpr double kEffectivenessMax = 1.5;

/// Q = process_noise_q * I4, R = measurement_noise_r * I3.
struct NoiseConfig {
    double process_noise_q = 0.1;
    double measurement_noise_r = 1.0;

    void validate() const;
};

/// Estimated effectiveness factors and their covariance.
struct EstimatorState {
    Eigen::Vector4d x = Eigen::Vector4d::Ones();
    Eigen::Matrix4d P = Eigen::Matrix4d::Identity();

    Eigen::Vector4d variances() const { return P.diagonal(); }
};

/// One estimator observation: z = (pdot, qdot, a_z) and the squared rotor speeds.
struct ObservationFrame {
    Eigen::Vector3d z = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotor_speeds_sq = Eigen::Vector4d::Zero();
};

/// Observation matrix from squared speeds (same layout as observation_matrix()).
Matrix34 observation_matrix_sq(const EffectivenessGains& gains, const Eigen::Vector4d& rotor_speeds_sq);

/// Throws std::invalid_argument if any initial_k lies outside [0, 1.5] or the
/// variance is negative.
EstimatorState init_estimator(const Eigen::Vector4d& initial_k = Eigen::Vector4d::Ones(),
                              double initial_variance = 1.0);

/// Componentwise clip to [0, 1.5].
Eigen::Vector4d clamp_effectiveness(const Eigen::Vector4d& x);

/// Random-walk predict followed by the linear measurement update:
///   P- = P + Q;  y = z - H x;  S = R + H P- H^T;  K = P- H^T S^-1;
///   x+ = x + K y;  P+ = (I - K H) P-   (then symmetrized).
/// No clamping. Throws std::domain_error on non-finite input or a singular S.
EstimatorState kalman_update(const EstimatorState& state, const Matrix34& H,
                             const Eigen::Vector3d& z, const NoiseConfig& noise);

/// kalman_update() followed by clamping of x. P is left untouched by the clamp.
EstimatorState kalman_step(const EstimatorState& state, const Matrix34& H,
                           const Eigen::Vector3d& z, const NoiseConfig& noise);

}  // namespace loe
