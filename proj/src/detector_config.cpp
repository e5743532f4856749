#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "loe/detector.hpp"
#include "loe/text.hpp"

namespace loe {
namespace {

struct Field {
    std::string key;
    std::function<double&(DetectorConfig&)> ref;
};

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        {"g_p", [](DetectorConfig& c) -> double& { return c.gains.g_p; }},
        {"g_q", [](DetectorConfig& c) -> double& { return c.gains.g_q; }},
        {"g_az", [](DetectorConfig& c) -> double& { return c.gains.g_az; }},
        {"filter_natural_frequency", [](DetectorConfig& c) -> double& { return c.filter.natural_frequency; }},
        {"filter_damping_ratio", [](DetectorConfig& c) -> double& { return c.filter.damping_ratio; }},
        {"process_noise_q", [](DetectorConfig& c) -> double& { return c.noise.process_noise_q; }},
        {"measurement_noise_r", [](DetectorConfig& c) -> double& { return c.noise.measurement_noise_r; }},
        {"k_threshold", [](DetectorConfig& c) -> double& { return c.decision.k_threshold; }},
        {"probability_threshold", [](DetectorConfig& c) -> double& { return c.decision.probability_threshold; }},
        {"estimator_interval", [](DetectorConfig& c) -> double& { return c.estimator_interval; }},
        {"sensor_interval", [](DetectorConfig& c) -> double& { return c.sensor_interval; }},
        {"takeoff_thrust_fraction", [](DetectorConfig& c) -> double& { return c.takeoff_thrust_fraction; }},
        {"hover_rotor_speed_sq_sum", [](DetectorConfig& c) -> double& { return c.hover_rotor_speed_sq_sum; }},
        {"takeoff_window", [](DetectorConfig& c) -> double& { return c.takeoff_window; }},
        {"initial_k", [](DetectorConfig& c) -> double& { return c.initial_k; }},
        {"initial_variance", [](DetectorConfig& c) -> double& { return c.initial_variance; }},
    };
    return table;
}

const Field* find_field(const std::string& key)
{
    for (const auto& f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

void require(bool ok, const std::string& message)
{
    if (!ok) throw ConfigError(message);
}

}  // namespace

void DetectorConfig::validate() const
{
    try {
        gains.validate();
        noise.validate();
        decision.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    require(std::isfinite(sensor_interval) && sensor_interval > 0.0, "sensor_interval must be > 0");
    require(std::isfinite(estimator_interval) && estimator_interval > 0.0,
            "estimator_interval must be > 0");
    const double ratio = estimator_interval / sensor_interval;
    require(ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio,
            "estimator_interval (" + text::format_double(estimator_interval) +
                ") must be an integer multiple of sensor_interval (" +
                text::format_double(sensor_interval) + ")");
    try {
        filter_design().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    require(takeoff_thrust_fraction > 0.0 && takeoff_thrust_fraction < 1.0,
            "takeoff_thrust_fraction must lie in (0, 1)");
    require(std::isfinite(hover_rotor_speed_sq_sum) && hover_rotor_speed_sq_sum > 0.0,
            "hover_rotor_speed_sq_sum must be > 0");
    require(std::isfinite(takeoff_window) && takeoff_window >= sensor_interval,
            "takeoff_window must be at least one sensor_interval");
    require(initial_k >= kEffectivenessMin && initial_k <= kEffectivenessMax,
            "initial_k must lie in [0, 1.5]");
    require(std::isfinite(initial_variance) && initial_variance >= 0.0,
            "initial_variance must be >= 0");
}

std::size_t DetectorConfig::decimation() const
{
    return static_cast<std::size_t>(std::llround(estimator_interval / sensor_interval));
}

FilterDesign DetectorConfig::filter_design() const
{
    FilterDesign d = filter;
    d.sample_interval = sensor_interval;
    return d;
}

bool DetectorConfig::operator==(const DetectorConfig& other) const
{
    for (const auto& key : config_keys()) {
        if (get_config_value(*this, key) != get_config_value(other, key)) return false;
    }
    return true;
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

bool set_config_value(DetectorConfig& config, const std::string& key, double value)
{
    const Field* f = find_field(key);
    if (f == nullptr) return false;
    f->ref(config) = value;
    return true;
}

std::optional<double> get_config_value(const DetectorConfig& config, const std::string& key)
{
    const Field* f = find_field(key);
    if (f == nullptr) return std::nullopt;
    auto copy = config;
    return f->ref(copy);
}

DetectorConfig parse_config(std::istream& in, const std::string& origin)
{
    DetectorConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        view = text::trim(view);
        if (view.empty()) continue;

        const auto eq = view.find('=');
        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        require(eq != std::string_view::npos, where + "expected 'key = value'");
        const std::string key(text::trim(view.substr(0, eq)));
        const auto value = text::parse_double(view.substr(eq + 1));
        require(value.has_value(), where + "value for '" + key + "' is not a number");
        require(set_config_value(config, key, *value), where + "unknown key '" + key + "'");
    }
    config.validate();
    return config;
}

DetectorConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

std::string format_config(const DetectorConfig& config)
{
    std::ostringstream out;
    out << "# LOE detector configuration (key = value)\n";
    for (const auto& key : config_keys()) {
        out << key << " = " << text::format_double(*get_config_value(config, key)) << '\n';
    }
    return out.str();
}

}  // namespace loe
