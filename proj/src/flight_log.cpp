#include "loe/flight_log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "loe/text.hpp"

namespace loe {
namespace {

constexpr std::string_view kColumns = "t,p,q,r,az,w1,w2,w3,w4";

}  // namespace

LogParseError::LogParseError(const std::string& origin, int line, const std::string& message)
    : std::runtime_error(origin + ":" + std::to_string(line) + ": " + message), line_(line)
{
}

double FlightLog::duration() const
{
    if (samples.size() < 2) return 0.0;
    return samples.back().timestamp - samples.front().timestamp;
}

FlightLog parse_log(std::istream& in, const std::string& origin)
{
    FlightLog log;
    std::optional<double> sample_rate;
    std::optional<double> fault_actuator;
    std::optional<double> fault_time;
    bool rpm_units = false;
    bool columns_seen = false;

    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) { throw LogParseError(origin, line_no, msg); };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = text::trim(line);
        if (view.empty()) continue;

        if (view.front() == '#') {
            if (columns_seen) fail("header line after column names");
            const auto body = text::trim(view.substr(1));
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) continue;  // free-form comment
            const std::string key(text::trim(body.substr(0, eq)));
            const std::string value(text::trim(body.substr(eq + 1)));
            if (key == "rpm_units") {
                if (value == "rpm") rpm_units = true;
                else if (value == "rad_s") rpm_units = false;
                else fail("rpm_units must be 'rpm' or 'rad_s'");
            } else if (key == "vehicle_id") {
                log.vehicle_id = value;
            } else if (key == "sample_rate_hz" || key == "fault_actuator" || key == "fault_time_s") {
                const auto v = text::parse_double(value);
                if (!v || !std::isfinite(*v)) fail("header '" + key + "' is not a number");
                if (key == "sample_rate_hz") sample_rate = v;
                else if (key == "fault_actuator") fault_actuator = v;
                else fault_time = v;
            }
            continue;
        }

        if (!columns_seen) {
            if (view != kColumns) {
                fail("expected columns '" + std::string(kColumns) + "', got '" + std::string(view) + "'");
            }
            columns_seen = true;
            continue;
        }

        const auto cells = text::split(view, ',');
        if (cells.size() != 9) {
            fail("expected 9 fields, got " + std::to_string(cells.size()));
        }
        double v[9];
        for (std::size_t i = 0; i < 9; ++i) {
            const auto parsed = text::parse_double(cells[i]);
            if (!parsed) fail("field " + std::to_string(i + 1) + " is not a number");
            if (!std::isfinite(*parsed)) fail("field " + std::to_string(i + 1) + " is not finite");
            v[i] = *parsed;
        }
        RawSample s;
        s.timestamp = v[0];
        s.angular_rate = {v[1], v[2], v[3]};
        s.accel_z = v[4];
        s.rotor_speeds = {v[5], v[6], v[7], v[8]};
        if ((s.rotor_speeds.array() < 0.0).any()) fail("negative rotor speed");
        if (rpm_units) s.rotor_speeds *= kRpmToRadPerSec;
        if (!log.samples.empty() && !(s.timestamp > log.samples.back().timestamp)) {
            fail("timestamp " + std::string(cells[0]) + " is not after the previous row");
        }
        log.samples.push_back(s);
    }

    if (line_no == 0) throw LogParseError(origin, 0, "empty file");
    if (!columns_seen) throw LogParseError(origin, line_no, "missing column header line");
    if (log.samples.empty()) throw LogParseError(origin, line_no, "log has no samples");
    if (!sample_rate || !(*sample_rate > 0.0)) {
        throw LogParseError(origin, 1, "missing or invalid '# sample_rate_hz=' header");
    }
    log.sample_rate_hz = *sample_rate;

    if (fault_actuator.has_value() != fault_time.has_value()) {
        throw LogParseError(origin, 1, "fault_actuator and fault_time_s must be given together");
    }
    if (fault_actuator) {
        const double a = *fault_actuator;
        if (a != std::floor(a) || a < 1 || a > 4) {
            throw LogParseError(origin, 1, "fault_actuator must be 1..4");
        }
        log.fault = GroundTruthFault{static_cast<int>(a), *fault_time};
    }

    if (log.samples.size() >= 2) {
        std::vector<double> dts;
        dts.reserve(log.samples.size() - 1);
        for (std::size_t i = 1; i < log.samples.size(); ++i) {
            dts.push_back(log.samples[i].timestamp - log.samples[i - 1].timestamp);
        }
        auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
        std::nth_element(dts.begin(), mid, dts.end());
        const double expected = 1.0 / log.sample_rate_hz;
        if (std::abs(*mid - expected) > 0.01 * expected) {
            throw LogParseError(origin, 1,
                                "sample_rate_hz=" + text::format_double(log.sample_rate_hz) +
                                    " disagrees with median sample spacing " + text::format_double(*mid) + " s");
        }
    }
    return log;
}

FlightLog load_log(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw LogParseError(path, 0, "cannot open file");
    return parse_log(in, path);
}

void write_log(std::ostream& out, const FlightLog& log)
{
    using text::format_double;
    out << "# sample_rate_hz=" << format_double(log.sample_rate_hz) << '\n';
    out << "# vehicle_id=" << log.vehicle_id << '\n';
    out << "# rpm_units=rad_s\n";
    if (log.fault) {
        out << "# fault_actuator=" << log.fault->actuator << '\n';
        out << "# fault_time_s=" << format_double(log.fault->time) << '\n';
    }
    out << kColumns << '\n';
    for (const auto& s : log.samples) {
        out << format_double(s.timestamp) << ',' << format_double(s.angular_rate.x()) << ','
            << format_double(s.angular_rate.y()) << ',' << format_double(s.angular_rate.z()) << ','
            << format_double(s.accel_z);
        for (int i = 0; i < 4; ++i) out << ',' << format_double(s.rotor_speeds[i]);
        out << '\n';
    }
}

void save_log(const std::string& path, const FlightLog& log)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_log(out, log);
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace loe
