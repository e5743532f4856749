#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "loe/effectiveness_model.hpp"
#include "loe/flight_log.hpp"
#include "loe/signal_conditioning.hpp"

namespace loe::sim {

/// Bebop-2 sized quadrotor. The defaults reproduce G_p = G_q = 1e-4 and
/// G_az = 5e-6 through gains_from_geometry().
struct VehicleParams {
    double mass = 0.5;                                     // kg
    Eigen::Vector3d inertia_diag{1.5e-3, 1.5e-3, 2.5e-3};  // kg m^2
    double thrust_coeff = 2.5e-6;                          // N s^2
    double moment_coeff = 4e-8;                            // N m s^2
    double arm_x = 0.06;                                   // h [m]
    double arm_y = 0.06;                                   // b [m]
    double motor_time_constant = 0.03;                     // s
    double rotor_speed_min = 314.15926535897932;           // 3000 RPM
    double rotor_speed_max = 1256.6370614359173;           // 12000 RPM
    double rotor_inertia = 2e-6;                           // kg m^2, per rotor

    void validate() const;
    VehicleGeometry geometry() const;
    /// Equal per-rotor speed giving 4 c_T w^2 = m g.
    double hover_rotor_speed() const;
};

/// Yaw reaction torque sign per rotor (rotors 1 and 3 spin opposite to 2 and 4).
inline const Eigen::Vector4d& yaw_signs()
{
    static const Eigen::Vector4d s{1.0, -1.0, 1.0, -1.0};
    return s;
}

struct SimState {
    double time = 0.0;
    Eigen::Vector3d angular_rate = Eigen::Vector3d::Zero();  // body p, q, r
    Eigen::Quaterniond attitude = Eigen::Quaterniond::Identity();  // body -> NED
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();      // NED
    Eigen::Vector3d position = Eigen::Vector3d::Zero();      // NED
    Eigen::Vector4d rotor_speeds = Eigen::Vector4d::Zero();
    Eigen::Vector4d rotor_phase = Eigen::Vector4d::Zero();   // rad, for vibration synthesis
    Eigen::Vector4d true_k = Eigen::Vector4d::Ones();
    /// External disturbance acting on the body, held constant over a step.
    Eigen::Vector3d external_force = Eigen::Vector3d::Zero();   // body, N
    Eigen::Vector3d external_moment = Eigen::Vector3d::Zero();  // body, N m
};

/// Vehicle at rest in the air with every rotor at hover speed.
SimState hover_state(const VehicleParams& params);

/// Body-frame actuator moment: thrust moments from r_i x (0, 0, -T_i) plus the
/// yaw reaction sum(s_i c_M k_i w_i^2).
Eigen::Vector3d actuator_moment(const SimState& state, const VehicleParams& params);

/// Proper acceleration (what an ideal accelerometer reads), body frame.
Eigen::Vector3d specific_force(const SimState& state, const VehicleParams& params);

/// Angular acceleration from the full rigid-body equation, including the
/// Omega x I Omega coupling and rotor gyroscopic moments.
Eigen::Vector3d angular_acceleration(const SimState& state, const VehicleParams& params);

/// One RK4 step of rigid body plus first-order rotor lag toward the clipped
/// setpoints. The quaternion is renormalized afterwards.
SimState dynamics_step(const SimState& state, const Eigen::Vector4d& rotor_setpoints,
                       const VehicleParams& params, double dt);

/// actuator is 1-based; new_k in [0, 1].
struct FaultEvent {
    double time = 0.0;
    int actuator = 3;
    double new_k = 0.0;

    void validate() const;
};

/// Sets true_k of the actuator instantly; rotor speed is left alone.
SimState inject_fault(const SimState& state, const FaultEvent& event);

struct SensorNoiseModel {
    double gyro_noise_std = 0.005;        // rad/s
    Eigen::Vector3d gyro_bias{0.004, -0.003, 0.002};  // rad/s
    double accel_noise_std = 0.08;        // m/s^2
    double accel_bias = 0.05;             // m/s^2
    double gyro_vibration = 0.03;         // rad/s amplitude at rotor frequency
    double accel_vibration = 0.4;         // m/s^2 amplitude at rotor frequency
    std::uint64_t seed = 1;

    static SensorNoiseModel noiseless();
};

/// Stateful sensor front end: owns the random stream for one flight.
class SensorSynthesizer {
public:
    explicit SensorSynthesizer(const SensorNoiseModel& model);

    /// Gyro and accelerometer get bias, white noise and rotor-harmonic
    /// vibration; rotor speeds pass through untouched.
    RawSample synthesize(const SimState& state, const VehicleParams& params, double t);

private:
    SensorNoiseModel model_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> unit_normal_{0.0, 1.0};
};

/// Free function form for a single sample with a fresh random stream.
RawSample synthesize_sensors(const SimState& state, const VehicleParams& params,
                             const SensorNoiseModel& noise, double t);

enum class ScenarioKind { hover, step_maneuvers, wind, ground_idle };

std::string to_string(ScenarioKind kind);
std::optional<ScenarioKind> scenario_from_string(const std::string& name);

/// Gust model: constant part plus a first-order Gauss-Markov part.
struct WindModel {
    Eigen::Vector3d mean_force{0.4, -0.3, -0.25};            // body, N
    Eigen::Vector3d mean_moment{1.5e-3, -1.0e-3, 4e-4};      // body, N m
    double gust_force_std = 0.2;                             // N
    double gust_moment_std = 1.0e-3;                         // N m
    double gust_time_constant = 0.5;                         // s
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::hover;
    double duration = 10.0;            // s
    double sample_interval = 0.002;    // s
    std::optional<FaultEvent> fault;
    double roll_offset = 0.0;          // held attitude setpoint, rad
    double pitch_offset = 0.0;         // rad
    double maneuver_amplitude = 0.15;  // rad, step_maneuvers
    double maneuver_period = 0.8;      // s between setpoint steps
    double idle_fraction = 0.3;        // ground_idle rotor speed / hover speed
    WindModel wind{};
    std::string vehicle_id = "sim";
};

class ScenarioDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Closed-loop flight under a cascaded attitude/rate controller with
/// altitude hold, starting from hover. Throws ScenarioDiverged if the state
/// blows up.
FlightLog fly_scenario(const ScenarioSpec& spec, const VehicleParams& params = {},
                       const SensorNoiseModel& noise = {});

}  // namespace loe::sim
