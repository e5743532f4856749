#pragma once

#include <Eigen/Core>

namespace loe {

using Matrix34 = Eigen::Matrix<double, 3, 4>;

/// Lumped control effectiveness per squared rotor speed.
struct EffectivenessGains {
    double g_p = 100e-6;  // roll  [rad/s^2 per (rad/s)^2]
    double g_q = 100e-6;  // pitch [rad/s^2 per (rad/s)^2]
    double g_az = 5e-6;   // vertical specific force [m/s^2 per (rad/s)^2]

    void validate() const;
};

/// Actuator i sits at r_i: r1 = (h, -b), r2 = (h, b), r3 = (-h, b), r4 = (-h, -b).
struct VehicleGeometry {
    double arm_x = 0.06;          // h [m]
    double arm_y = 0.06;          // b [m]
    double thrust_coeff = 2.5e-6; // c_T [N s^2]
    double moment_coeff = 4e-8;   // c_M [N m s^2], yaw only, unused by the estimator
    Eigen::Vector3d inertia_diag{1.5e-3, 1.5e-3, 2.5e-3};  // [kg m^2]
    double mass = 0.5;            // [kg]

    void validate() const;
};

/// Rows: roll, pitch, thrust. Columns: actuators 1..4.
inline const Matrix34& sign_matrix()
{
    static const Matrix34 s = (Matrix34() << 1, -1, -1, 1,
                                             1, 1, -1, -1,
                                             -1, -1, -1, -1).finished();
    return s;
}

/// g_p = c_T b / I_x, g_q = c_T h / I_y, g_az = c_T / m.
EffectivenessGains gains_from_geometry(const VehicleGeometry& geom);

/// H[row, i] = sign[row, i] * gain[row] * w_i^2.
Matrix34 observation_matrix(const EffectivenessGains& gains, const Eigen::Vector4d& rotor_speeds);

/// (pdot, qdot, a_z) = H(w) k, disturbance-free.
Eigen::Vector3d predict_accelerations(const EffectivenessGains& gains,
                                      const Eigen::Vector4d& rotor_speeds,
                                      const Eigen::Vector4d& k);

}  // namespace loe
