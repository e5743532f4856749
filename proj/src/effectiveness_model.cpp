#include "loe/effectiveness_model.hpp"

#include <stdexcept>

namespace loe {

void EffectivenessGains::validate() const
{
    if (!(g_p > 0.0)) throw std::invalid_argument("g_p must be > 0");
    if (!(g_q > 0.0)) throw std::invalid_argument("g_q must be > 0");
    if (!(g_az > 0.0)) throw std::invalid_argument("g_az must be > 0");
}

void VehicleGeometry::validate() const
{
    if (!(arm_x > 0.0) || !(arm_y > 0.0)) throw std::invalid_argument("arm lengths must be > 0");
    if (!(thrust_coeff > 0.0)) throw std::invalid_argument("thrust_coeff must be > 0");
    if (!(moment_coeff > 0.0)) throw std::invalid_argument("moment_coeff must be > 0");
    if (!(inertia_diag.array() > 0.0).all()) throw std::invalid_argument("inertia must be > 0");
    if (!(mass > 0.0)) throw std::invalid_argument("mass must be > 0");
}

EffectivenessGains gains_from_geometry(const VehicleGeometry& geom)
{
    geom.validate();
    return {.g_p = geom.thrust_coeff * geom.arm_y / geom.inertia_diag.x(),
            .g_q = geom.thrust_coeff * geom.arm_x / geom.inertia_diag.y(),
            .g_az = geom.thrust_coeff / geom.mass};
}

Matrix34 observation_matrix(const EffectivenessGains& gains, const Eigen::Vector4d& rotor_speeds)
{
    const Eigen::Vector3d g{gains.g_p, gains.g_q, gains.g_az};
    const Eigen::Vector4d w2 = rotor_speeds.array().square();
    return g.asDiagonal() * sign_matrix() * w2.asDiagonal();
}

Eigen::Vector3d predict_accelerations(const EffectivenessGains& gains,
                                      const Eigen::Vector4d& rotor_speeds,
                                      const Eigen::Vector4d& k)
{
    return observation_matrix(gains, rotor_speeds) * k;
}

}  // namespace loe
