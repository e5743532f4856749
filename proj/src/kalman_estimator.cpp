#include "loe/kalman_estimator.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/LU>

namespace loe {

void NoiseConfig::validate() const
{
    if (!(process_noise_q > 0.0)) throw std::invalid_argument("process_noise_q must be > 0");
    if (!(measurement_noise_r > 0.0)) throw std::invalid_argument("measurement_noise_r must be > 0");
}

Matrix34 observation_matrix_sq(const EffectivenessGains& gains, const Eigen::Vector4d& rotor_speeds_sq)
{
    const Eigen::Vector3d g{gains.g_p, gains.g_q, gains.g_az};
    return g.asDiagonal() * sign_matrix() * rotor_speeds_sq.asDiagonal();
}

EstimatorState init_estimator(const Eigen::Vector4d& initial_k, double initial_variance)
{
    if (!((initial_k.array() >= kEffectivenessMin).all() &&
          (initial_k.array() <= kEffectivenessMax).all())) {
        throw std::invalid_argument("initial effectiveness factors must lie in [0, 1.5]");
    }
    if (!(initial_variance >= 0.0)) {
        throw std::invalid_argument("initial variance must be >= 0");
    }
    return {initial_k, initial_variance * Eigen::Matrix4d::Identity()};
}

Eigen::Vector4d clamp_effectiveness(const Eigen::Vector4d& x)
{
    return x.cwiseMax(kEffectivenessMin).cwiseMin(kEffectivenessMax);
}

EstimatorState kalman_update(const EstimatorState& state, const Matrix34& H,
                             const Eigen::Vector3d& z, const NoiseConfig& noise)
{
    if (!H.allFinite() || !z.allFinite() || !state.x.allFinite() || !state.P.allFinite()) {
        throw std::domain_error("kalman_update: non-finite input");
    }

    const Eigen::Matrix4d P_pred = state.P + noise.process_noise_q * Eigen::Matrix4d::Identity();
    const Eigen::Vector3d y = z - H * state.x;
    const Eigen::Matrix3d S =
        noise.measurement_noise_r * Eigen::Matrix3d::Identity() + H * P_pred * H.transpose();

    // Fixed-size 3x3 inverse is cofactor based in Eigen.
    Eigen::Matrix3d S_inv;
    bool invertible = false;
    S.computeInverseWithCheck(S_inv, invertible, 1e-300);
    if (!invertible || !S_inv.allFinite()) {
        throw std::domain_error("kalman_update: innovation covariance is singular");
    }

    const Eigen::Matrix<double, 4, 3> K = P_pred * H.transpose() * S_inv;

    EstimatorState next;
    next.x = state.x + K * y;
    const Eigen::Matrix4d P_post = (Eigen::Matrix4d::Identity() - K * H) * P_pred;
    next.P = 0.5 * (P_post + P_post.transpose());
    return next;
}

EstimatorState kalman_step(const EstimatorState& state, const Matrix34& H,
                           const Eigen::Vector3d& z, const NoiseConfig& noise)
{
    EstimatorState next = kalman_update(state, H, z, noise);
    next.x = clamp_effectiveness(next.x);
    return next;
}

}  // namespace loe
