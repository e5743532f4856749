#pragma once

#include <iosfwd>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loe/signal_conditioning.hpp"

namespace loe {

/// Ground-truth actuator failure. Actuators are numbered 1..4.
struct GroundTruthFault {
    int actuator = 3;
    double time = 0.0;  // s

    bool operator==(const GroundTruthFault&) const = default;
};

/// Replay log. Rotor speeds are always held in rad/s in memory.
///
/// On disk (CSV):
///   # sample_rate_hz=500
///   # vehicle_id=sim
///   # rpm_units=rad_s            (or rpm; converted on load)
///   # fault_actuator=3           (optional, with fault_time_s)
///   # fault_time_s=1.56
///   t,p,q,r,az,w1,w2,w3,w4
///   0,0.001,...
struct FlightLog {
    double sample_rate_hz = 500.0;
    std::string vehicle_id = "sim";
    std::optional<GroundTruthFault> fault;
    std::vector<RawSample> samples;

    double duration() const;
};

class LogParseError : public std::runtime_error {
public:
    LogParseError(const std::string& origin, int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

FlightLog parse_log(std::istream& in, const std::string& origin = "<log>");
FlightLog load_log(const std::string& path);
void write_log(std::ostream& out, const FlightLog& log);
void save_log(const std::string& path, const FlightLog& log);

inline constexpr double kRpmToRadPerSec = std::numbers::pi / 30.0;

}  // namespace loe
