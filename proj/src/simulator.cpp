#include "loe/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "loe/detector.hpp"

namespace loe::sim {
namespace {

// Flat RK4 state: omega(3) quat wxyz(4) velocity(3) position(3) rotors(4) phase(4)
using Vec21 = Eigen::Matrix<double, 21, 1>;

constexpr int kOmega = 0;
constexpr int kQuat = 3;
constexpr int kVel = 7;
constexpr int kPos = 10;
constexpr int kRotor = 13;
constexpr int kPhase = 17;

Vec21 pack(const SimState& s)
{
    Vec21 x;
    x.segment<3>(kOmega) = s.angular_rate;
    x.segment<4>(kQuat) << s.attitude.w(), s.attitude.x(), s.attitude.y(), s.attitude.z();
    x.segment<3>(kVel) = s.velocity;
    x.segment<3>(kPos) = s.position;
    x.segment<4>(kRotor) = s.rotor_speeds;
    x.segment<4>(kPhase) = s.rotor_phase;
    return x;
}

void unpack(const Vec21& x, SimState& s)
{
    s.angular_rate = x.segment<3>(kOmega);
    s.attitude = Eigen::Quaterniond(x[kQuat], x[kQuat + 1], x[kQuat + 2], x[kQuat + 3]);
    s.velocity = x.segment<3>(kVel);
    s.position = x.segment<3>(kPos);
    s.rotor_speeds = x.segment<4>(kRotor);
    s.rotor_phase = x.segment<4>(kPhase);
}

const std::array<Eigen::Vector3d, 4>& arm_vectors(const VehicleParams& p, std::array<Eigen::Vector3d, 4>& out)
{
    const double h = p.arm_x;
    const double b = p.arm_y;
    out = {Eigen::Vector3d{h, -b, 0.0}, Eigen::Vector3d{h, b, 0.0}, Eigen::Vector3d{-h, b, 0.0},
           Eigen::Vector3d{-h, -b, 0.0}};
    return out;
}

Vec21 derivative(const Vec21& x, const SimState& frozen, const Eigen::Vector4d& setpoints,
                 const VehicleParams& p)
{
    SimState s = frozen;
    unpack(x, s);
    s.attitude.normalize();

    Vec21 dx;
    const Eigen::Vector3d omega = s.angular_rate;
    dx.segment<3>(kOmega) = angular_acceleration(s, p);

    const Eigen::Quaterniond qdot =
        Eigen::Quaterniond(x[kQuat], x[kQuat + 1], x[kQuat + 2], x[kQuat + 3]) *
        Eigen::Quaterniond(0.0, omega.x(), omega.y(), omega.z());
    dx.segment<4>(kQuat) << 0.5 * qdot.w(), 0.5 * qdot.x(), 0.5 * qdot.y(), 0.5 * qdot.z();

    const Eigen::Vector3d accel_world =
        s.attitude.toRotationMatrix() * specific_force(s, p) + Eigen::Vector3d{0.0, 0.0, kGravity};
    dx.segment<3>(kVel) = accel_world;
    dx.segment<3>(kPos) = s.velocity;
    dx.segment<4>(kRotor) = (setpoints - s.rotor_speeds) / p.motor_time_constant;
    dx.segment<4>(kPhase) = s.rotor_speeds;
    return dx;
}

struct ControllerGains {
    double attitude_kp = 7.0;     // 1/s
    double rate_kp = 25.0;        // 1/s
    double rate_ki = 30.0;        // 1/s^2
    double yaw_rate_kp = 8.0;     // 1/s
    double altitude_kp = 2.0;     // 1/s^2
    double altitude_kv = 3.0;     // 1/s
    double integrator_limit = 5.0;  // rad/s^2
};

/// Attitude -> rate -> angular acceleration cascade with altitude hold and an
/// inverse mixer. Not fault-aware.
class Controller {
public:
    Controller(const VehicleParams& params, double altitude_sp)
        : params_(params), altitude_sp_(altitude_sp)
    {
    }

    Eigen::Vector4d update(const SimState& truth, const Eigen::Vector3d& gyro, double roll_sp, double pitch_sp,
                           double yaw_rate_sp, double dt)
    {
        const Eigen::Matrix3d R = truth.attitude.toRotationMatrix();
        const double roll = std::atan2(R(2, 1), R(2, 2));
        const double pitch = -std::asin(std::clamp(R(2, 0), -1.0, 1.0));

        const Eigen::Vector3d rate_sp{gains_.attitude_kp * (roll_sp - roll),
                                      gains_.attitude_kp * (pitch_sp - pitch), yaw_rate_sp};
        const Eigen::Vector3d rate_err = rate_sp - gyro;
        integral_ += gains_.rate_ki * rate_err.head<2>() * dt;
        integral_ = integral_.cwiseMax(-gains_.integrator_limit).cwiseMin(gains_.integrator_limit);

        Eigen::Vector3d alpha;
        alpha.head<2>() = gains_.rate_kp * rate_err.head<2>() + integral_;
        alpha.z() = gains_.yaw_rate_kp * rate_err.z();
        const Eigen::Vector3d torque = params_.inertia_diag.cwiseProduct(alpha);

        // NED: z down, so climbing means a negative vertical acceleration command
        const double accel_z_cmd = gains_.altitude_kp * (altitude_sp_ - truth.position.z()) -
                                   gains_.altitude_kv * truth.velocity.z();
        const double tilt = std::max(0.5, R(2, 2));
        const double thrust = params_.mass * (kGravity - accel_z_cmd) / tilt;

        const double ct = params_.thrust_coeff;
        Eigen::Vector4d w_sq;
        for (int i = 0; i < 4; ++i) {
            w_sq[i] = 0.25 * (thrust / ct + sign_matrix()(0, i) * torque.x() / (ct * params_.arm_y) +
                              sign_matrix()(1, i) * torque.y() / (ct * params_.arm_x) +
                              yaw_signs()[i] * torque.z() / params_.moment_coeff);
        }
        const double lo = params_.rotor_speed_min * params_.rotor_speed_min;
        const double hi = params_.rotor_speed_max * params_.rotor_speed_max;
        return w_sq.cwiseMax(lo).cwiseMin(hi).cwiseSqrt();
    }

private:
    VehicleParams params_;
    ControllerGains gains_{};
    double altitude_sp_;
    Eigen::Vector2d integral_ = Eigen::Vector2d::Zero();
};

}  // namespace

void VehicleParams::validate() const
{
    geometry().validate();
    if (!(motor_time_constant > 0.0)) throw std::invalid_argument("motor_time_constant must be > 0");
    if (!(rotor_speed_min >= 0.0 && rotor_speed_min < rotor_speed_max)) {
        throw std::invalid_argument("rotor speed limits must satisfy 0 <= min < max");
    }
    if (!(rotor_inertia >= 0.0)) throw std::invalid_argument("rotor_inertia must be >= 0");
}

VehicleGeometry VehicleParams::geometry() const
{
    VehicleGeometry g;
    g.arm_x = arm_x;
    g.arm_y = arm_y;
    g.thrust_coeff = thrust_coeff;
    g.moment_coeff = moment_coeff;
    g.inertia_diag = inertia_diag;
    g.mass = mass;
    return g;
}

double VehicleParams::hover_rotor_speed() const
{
    return std::sqrt(mass * kGravity / (4.0 * thrust_coeff));
}

SimState hover_state(const VehicleParams& params)
{
    SimState s;
    s.position = {0.0, 0.0, -10.0};
    s.rotor_speeds.setConstant(params.hover_rotor_speed());
    s.rotor_phase = {0.0, 0.7, 1.9, 2.6};
    return s;
}

Eigen::Vector3d actuator_moment(const SimState& state, const VehicleParams& params)
{
    std::array<Eigen::Vector3d, 4> arms;
    arm_vectors(params, arms);
    Eigen::Vector3d m = Eigen::Vector3d::Zero();
    for (int i = 0; i < 4; ++i) {
        const double w2 = state.rotor_speeds[i] * state.rotor_speeds[i];
        const double thrust = params.thrust_coeff * state.true_k[i] * w2;
        m += arms[static_cast<std::size_t>(i)].cross(Eigen::Vector3d{0.0, 0.0, -thrust});
        m.z() += yaw_signs()[i] * params.moment_coeff * state.true_k[i] * w2;
    }
    return m;
}

Eigen::Vector3d specific_force(const SimState& state, const VehicleParams& params)
{
    const double thrust =
        params.thrust_coeff * state.true_k.dot(state.rotor_speeds.cwiseProduct(state.rotor_speeds));
    return (Eigen::Vector3d{0.0, 0.0, -thrust} + state.external_force) / params.mass;
}

Eigen::Vector3d angular_acceleration(const SimState& state, const VehicleParams& params)
{
    const Eigen::Vector3d& omega = state.angular_rate;
    const Eigen::Vector3d I = params.inertia_diag;
    // rotor angular momentum points opposite to the reaction torque sign
    const double rotor_momentum = -params.rotor_inertia * yaw_signs().dot(state.rotor_speeds);
    const Eigen::Vector3d gyroscopic = -omega.cross(Eigen::Vector3d{0.0, 0.0, rotor_momentum});
    const Eigen::Vector3d coupling = omega.cross(I.cwiseProduct(omega));
    return (actuator_moment(state, params) + gyroscopic + state.external_moment - coupling).cwiseQuotient(I);
}

SimState dynamics_step(const SimState& state, const Eigen::Vector4d& rotor_setpoints,
                       const VehicleParams& params, double dt)
{
    const Eigen::Vector4d sp =
        rotor_setpoints.cwiseMax(params.rotor_speed_min).cwiseMin(params.rotor_speed_max);

    const Vec21 x0 = pack(state);
    const Vec21 k1 = derivative(x0, state, sp, params);
    const Vec21 k2 = derivative(x0 + 0.5 * dt * k1, state, sp, params);
    const Vec21 k3 = derivative(x0 + 0.5 * dt * k2, state, sp, params);
    const Vec21 k4 = derivative(x0 + dt * k3, state, sp, params);
    const Vec21 x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    SimState next = state;
    unpack(x1, next);
    next.attitude.normalize();
    next.rotor_speeds = next.rotor_speeds.cwiseMax(params.rotor_speed_min).cwiseMin(params.rotor_speed_max);
    next.time = state.time + dt;
    return next;
}

void FaultEvent::validate() const
{
    if (!(time >= 0.0)) throw std::invalid_argument("fault time must be >= 0");
    if (actuator < 1 || actuator > 4) throw std::invalid_argument("fault actuator must be 1..4");
    if (!(new_k >= 0.0 && new_k <= 1.0)) throw std::invalid_argument("fault new_k must lie in [0, 1]");
}

SimState inject_fault(const SimState& state, const FaultEvent& event)
{
    event.validate();
    SimState next = state;
    next.true_k[event.actuator - 1] = event.new_k;
    return next;
}

SensorNoiseModel SensorNoiseModel::noiseless()
{
    SensorNoiseModel m;
    m.gyro_noise_std = 0.0;
    m.gyro_bias.setZero();
    m.accel_noise_std = 0.0;
    m.accel_bias = 0.0;
    m.gyro_vibration = 0.0;
    m.accel_vibration = 0.0;
    return m;
}

SensorSynthesizer::SensorSynthesizer(const SensorNoiseModel& model) : model_(model), rng_(model.seed) {}

RawSample SensorSynthesizer::synthesize(const SimState& state, const VehicleParams& params, double t)
{
    RawSample s;
    s.timestamp = t;
    s.rotor_speeds = state.rotor_speeds;

    // one harmonic per rotor at its own shaft frequency, axis-dependent phase
    auto vibration = [&](int axis) {
        double v = 0.0;
        for (int i = 0; i < 4; ++i) v += std::sin(state.rotor_phase[i] + axis * std::numbers::pi / 3.0);
        return 0.25 * v;
    };

    for (int axis = 0; axis < 3; ++axis) {
        s.angular_rate[axis] = state.angular_rate[axis] + model_.gyro_bias[axis] +
                               model_.gyro_noise_std * unit_normal_(rng_) +
                               model_.gyro_vibration * vibration(axis);
    }
    s.accel_z = specific_force(state, params).z() + model_.accel_bias +
                model_.accel_noise_std * unit_normal_(rng_) + model_.accel_vibration * vibration(2);
    return s;
}

RawSample synthesize_sensors(const SimState& state, const VehicleParams& params,
                             const SensorNoiseModel& noise, double t)
{
    SensorSynthesizer synth(noise);
    return synth.synthesize(state, params, t);
}

std::string to_string(ScenarioKind kind)
{
    switch (kind) {
    case ScenarioKind::hover: return "hover";
    case ScenarioKind::step_maneuvers: return "step-maneuvers";
    case ScenarioKind::wind: return "wind";
    case ScenarioKind::ground_idle: return "ground-idle";
    }
    return "unknown";
}

std::optional<ScenarioKind> scenario_from_string(const std::string& name)
{
    for (auto k : {ScenarioKind::hover, ScenarioKind::step_maneuvers, ScenarioKind::wind,
                   ScenarioKind::ground_idle}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

FlightLog fly_scenario(const ScenarioSpec& spec, const VehicleParams& params, const SensorNoiseModel& noise)
{
    params.validate();
    if (!(spec.duration > 0.0)) throw std::invalid_argument("scenario duration must be > 0");
    if (!(spec.sample_interval > 0.0)) throw std::invalid_argument("sample_interval must be > 0");
    if (spec.fault) {
        spec.fault->validate();
        if (spec.fault->time >= spec.duration) {
            throw std::invalid_argument("fault time must lie inside the scenario duration");
        }
    }

    const double dt = spec.sample_interval;
    const auto n_samples = static_cast<std::size_t>(std::llround(spec.duration / dt));
    const bool on_ground = spec.kind == ScenarioKind::ground_idle;

    FlightLog log;
    log.sample_rate_hz = 1.0 / dt;
    log.vehicle_id = spec.vehicle_id;
    if (spec.fault) log.fault = GroundTruthFault{spec.fault->actuator, spec.fault->time};
    log.samples.reserve(n_samples);

    SimState state = hover_state(params);
    if (on_ground) {
        state.position.z() = 0.0;
        state.rotor_speeds.setConstant(params.rotor_speed_min);
    }

    SensorSynthesizer sensors(noise);
    Controller controller(params, state.position.z());
    // separate streams so the sensor noise realization does not depend on the scenario
    std::mt19937_64 scenario_rng(noise.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit_uniform(-1.0, 1.0);

    Eigen::Vector3d gust_force = Eigen::Vector3d::Zero();
    Eigen::Vector3d gust_moment = Eigen::Vector3d::Zero();
    const double gust_decay = std::exp(-dt / spec.wind.gust_time_constant);
    const double gust_drive = std::sqrt(1.0 - gust_decay * gust_decay);

    double roll_sp = spec.roll_offset;
    double pitch_sp = spec.pitch_offset;
    double yaw_rate_sp = 0.0;
    const auto maneuver_steps =
        std::max<long long>(1, std::llround(spec.maneuver_period / dt));

    bool fault_pending = spec.fault.has_value();
    for (std::size_t n = 0; n < n_samples; ++n) {
        const double t = static_cast<double>(n) * dt;
        state.time = t;
        if (fault_pending && t >= spec.fault->time - 1e-9) {
            state = inject_fault(state, *spec.fault);
            fault_pending = false;
        }

        if (spec.kind == ScenarioKind::wind) {
            for (int a = 0; a < 3; ++a) {
                gust_force[a] = gust_decay * gust_force[a] + gust_drive * spec.wind.gust_force_std * unit_normal(scenario_rng);
                gust_moment[a] = gust_decay * gust_moment[a] + gust_drive * spec.wind.gust_moment_std * unit_normal(scenario_rng);
            }
            state.external_force = spec.wind.mean_force + gust_force;
            state.external_moment = spec.wind.mean_moment + gust_moment;
        }
        if (spec.kind == ScenarioKind::step_maneuvers && n > 0 &&
            static_cast<long long>(n) % maneuver_steps == 0) {
            roll_sp = spec.roll_offset + spec.maneuver_amplitude * unit_uniform(scenario_rng);
            pitch_sp = spec.pitch_offset + spec.maneuver_amplitude * unit_uniform(scenario_rng);
            yaw_rate_sp = 0.5 * unit_uniform(scenario_rng);
        }

        if (on_ground) {
            // support force cancels whatever the rotors do not lift
            const double lift =
                params.thrust_coeff * state.true_k.dot(state.rotor_speeds.cwiseProduct(state.rotor_speeds));
            state.external_force = {0.0, 0.0, -(params.mass * kGravity - lift)};
        }

        const RawSample sample = sensors.synthesize(state, params, t);
        log.samples.push_back(sample);

        Eigen::Vector4d setpoints;
        if (on_ground) {
            setpoints.setConstant(spec.idle_fraction * params.hover_rotor_speed());
        } else {
            setpoints = controller.update(state, sample.angular_rate, roll_sp, pitch_sp, yaw_rate_sp, dt);
        }
        state = dynamics_step(state, setpoints, params, dt);

        if (on_ground) {
            state.angular_rate.setZero();
            state.attitude.setIdentity();
            state.velocity.setZero();
            state.position.setZero();
        }

        const Vec21 x = pack(state);
        if (!x.allFinite() || x.segment<3>(kOmega).norm() > 1e4 || x.segment<3>(kVel).norm() > 1e4) {
            throw ScenarioDiverged("scenario '" + to_string(spec.kind) + "' diverged at step " +
                                   std::to_string(n) + " (t=" + std::to_string(t) + " s)");
        }
    }
    return log;
}

}  // namespace loe::sim
