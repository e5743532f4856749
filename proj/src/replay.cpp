#include "loe/replay.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "loe/text.hpp"

namespace loe {

std::vector<DetectorOutput> run_detector(const FlightLog& log, const DetectorConfig& config)
{
    const double log_interval = 1.0 / log.sample_rate_hz;
    if (std::abs(log_interval - config.sensor_interval) > 0.01 * config.sensor_interval) {
        throw ConfigError("log sample rate " + text::format_double(log.sample_rate_hz) +
                          " Hz does not match sensor_interval " + text::format_double(config.sensor_interval) +
                          " s");
    }
    Detector detector(config);
    std::vector<DetectorOutput> outputs;
    outputs.reserve(log.samples.size());
    for (const auto& s : log.samples) {
        outputs.push_back(detector.process_sample(s));
    }
    return outputs;
}

EvaluationResult evaluate(std::span<const DetectorOutput> outputs, const std::optional<GroundTruthFault>& truth)
{
    if (outputs.empty()) throw std::invalid_argument("evaluate: no detector outputs");
    if (truth) {
        if (truth->actuator < 1 || truth->actuator > 4) {
            throw std::invalid_argument("evaluate: ground-truth actuator must be 1..4");
        }
        if (truth->time < outputs.front().timestamp || truth->time > outputs.back().timestamp) {
            throw std::invalid_argument("evaluate: fault time " + text::format_double(truth->time) +
                                        " s is outside the log span");
        }
    }

    // latches never open, so the final status holds every detection time
    const DetectionStatus& final_status = outputs.back().status;
    EvaluationResult result;
    std::optional<double> earliest;
    for (int i = 0; i < 4; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (!final_status.failed[idx]) continue;
        const double t = *final_status.first_detection_time[idx];
        if (!earliest || t < *earliest) {
            earliest = t;
            result.detected_actuator = i + 1;
        }
        const bool correct = truth && truth->actuator == i + 1 && t >= truth->time;
        if (correct) {
            result.detection_delay = t - truth->time;
        } else {
            ++result.false_alarm_count;
        }
    }
    result.missed_detection = truth.has_value() && !result.detection_delay.has_value();
    return result;
}

std::vector<ParameterSet> SweepSpec::expand() const
{
    base.validate();
    std::vector<ParameterSet> sets;
    for (const auto& [name, values] : variations) {
        if (!get_config_value(base, name)) {
            throw ConfigError("sweep: unknown parameter '" + name + "'");
        }
    }
    int id = 0;
    for (const auto& [name, values] : variations) {
        for (double v : values) {
            ParameterSet set;
            set.id = id++;
            set.parameter = name;
            set.value = v;
            set.config = base;
            set_config_value(set.config, name, v);
            try {
                set.config.validate();
            } catch (const ConfigError& e) {
                throw ConfigError("sweep: " + name + " = " + text::format_double(v) + ": " + e.what());
            }
            sets.push_back(std::move(set));
        }
    }
    return sets;
}

SweepSpec SweepSpec::reference(const DetectorConfig& base)
{
    SweepSpec spec;
    spec.base = base;
    auto scaled = [&](const std::string& key, std::initializer_list<double> factors) {
        const double b = *get_config_value(base, key);
        std::vector<double> values;
        for (double f : factors) values.push_back(b * f);
        spec.variations.emplace_back(key, values);
    };
    scaled("g_p", {0.8, 1.0, 1.2});
    scaled("g_q", {0.8, 1.0, 1.2});
    scaled("g_az", {0.8, 1.0, 1.2});
    scaled("process_noise_q", {0.5, 2.0});
    scaled("measurement_noise_r", {0.5, 2.0});
    spec.variations.emplace_back("k_threshold", std::vector<double>{0.15, 0.25, 0.35});
    spec.variations.emplace_back("probability_threshold", std::vector<double>{0.8, 0.9, 0.99});
    return spec;
}

SweepSpec parse_sweep_spec(std::istream& in, const DetectorConfig& base, const std::string& origin)
{
    SweepSpec spec;
    spec.base = base;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = text::trim(view);
        if (view.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no) + ": ";
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'parameter = v1, v2, ...'");
        const std::string name(text::trim(view.substr(0, eq)));
        if (!get_config_value(base, name)) throw ConfigError(where + "unknown parameter '" + name + "'");
        std::vector<double> values;
        for (auto cell : text::split(view.substr(eq + 1), ',')) {
            const auto v = text::parse_double(cell);
            if (!v) throw ConfigError(where + "'" + std::string(text::trim(cell)) + "' is not a number");
            values.push_back(*v);
        }
        spec.variations.emplace_back(name, std::move(values));
    }
    if (spec.variations.empty()) throw ConfigError(origin + ": sweep spec lists no parameters");
    spec.expand();  // surface invalid combinations before any run
    return spec;
}

SweepSpec load_sweep_spec(const std::string& path, const DetectorConfig& base)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sweep spec '" + path + "'");
    return parse_sweep_spec(in, base, path);
}

std::string format_sweep_spec(const SweepSpec& spec)
{
    std::ostringstream out;
    out << "# one-at-a-time sweep: parameter = value, value, ...\n";
    for (const auto& [name, values] : spec.variations) {
        out << name << " =";
        for (std::size_t i = 0; i < values.size(); ++i) {
            out << (i == 0 ? " " : ", ") << text::format_double(values[i]);
        }
        out << '\n';
    }
    return out.str();
}

double quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BoxStats box_statistics(std::vector<double> values)
{
    BoxStats b;
    b.n = values.size();
    if (values.empty()) return b;
    std::sort(values.begin(), values.end());
    b.min = values.front();
    b.max = values.back();
    b.q1 = quantile_sorted(values, 0.25);
    b.median = quantile_sorted(values, 0.5);
    b.q3 = quantile_sorted(values, 0.75);
    b.p2_5 = quantile_sorted(values, 0.025);
    b.p97_5 = quantile_sorted(values, 0.975);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_low = b.max;
    b.whisker_high = b.min;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            b.outliers.push_back(v);
        } else {
            b.whisker_low = std::min(b.whisker_low, v);
            b.whisker_high = std::max(b.whisker_high, v);
        }
    }
    return b;
}

SweepResult sweep(std::span<const NamedLog> logs, const SweepSpec& spec, unsigned jobs)
{
    if (logs.empty()) throw std::invalid_argument("sweep: no logs");
    SweepResult result;
    result.sets = spec.expand();

    const std::size_t n_logs = logs.size();
    const std::size_t total = result.sets.size() * n_logs;
    result.rows.resize(total);

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t job = next.fetch_add(1);
            if (job >= total) return;
            const auto& set = result.sets[job / n_logs];
            const auto& named = logs[job % n_logs];
            try {
                const auto outputs = run_detector(named.log, set.config);
                result.rows[job] = {set.id, named.id, evaluate(outputs, named.log.fault)};
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = total;
            }
        }
    };

    const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(total)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    result.summary = summarize(result.rows, result.sets);
    return result;
}

std::vector<SweepSummary> summarize(std::span<const SweepRow> rows, std::span<const ParameterSet> sets)
{
    std::map<int, SweepSummary> by_id;
    std::map<int, std::vector<double>> delays;
    for (const auto& set : sets) {
        auto& s = by_id[set.id];
        s.param_set_id = set.id;
        s.parameter = set.parameter;
        s.value = set.value;
    }
    for (const auto& row : rows) {
        auto& s = by_id[row.param_set_id];
        s.param_set_id = row.param_set_id;
        ++s.logs;
        s.false_alarms += row.result.false_alarm_count;
        s.missed += row.result.missed_detection ? 1 : 0;
        if (row.result.detection_delay) delays[row.param_set_id].push_back(*row.result.detection_delay);
    }
    std::vector<SweepSummary> out;
    for (auto& [id, s] : by_id) {
        s.delays = box_statistics(delays[id]);
        out.push_back(s);
    }
    return out;
}

void write_results_csv(std::ostream& out, std::span<const SweepRow> rows)
{
    out << "param_set_id,log_id,delay_s,false_alarms,missed\n";
    for (const auto& r : rows) {
        out << r.param_set_id << ',' << r.log_id << ','
            << (r.result.detection_delay ? text::format_double(*r.result.detection_delay) : "") << ','
            << r.result.false_alarm_count << ',' << (r.result.missed_detection ? 1 : 0) << '\n';
    }
}

std::vector<SweepRow> read_results_csv(std::istream& in, const std::string& origin)
{
    std::vector<SweepRow> rows;
    std::string line;
    int line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = text::trim(line);
        if (view.empty()) continue;
        if (!header) {
            if (view != "param_set_id,log_id,delay_s,false_alarms,missed") {
                throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": unexpected results header");
            }
            header = true;
            continue;
        }
        const auto cells = text::split(view, ',');
        auto bad = [&](const std::string& what) {
            return std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + what);
        };
        if (cells.size() != 5) throw bad("expected 5 fields");
        SweepRow row;
        const auto id = text::parse_double(cells[0]);
        const auto fa = text::parse_double(cells[3]);
        const auto missed = text::parse_double(cells[4]);
        if (!id || !fa || !missed) throw bad("malformed numeric field");
        row.param_set_id = static_cast<int>(*id);
        row.log_id = std::string(cells[1]);
        if (!text::trim(cells[2]).empty()) {
            const auto d = text::parse_double(cells[2]);
            if (!d) throw bad("malformed delay");
            row.result.detection_delay = *d;
        }
        row.result.false_alarm_count = static_cast<int>(*fa);
        row.result.missed_detection = *missed != 0.0;
        rows.push_back(row);
    }
    if (!header) throw std::runtime_error(origin + ": empty results file");
    return rows;
}

void write_param_sets_csv(std::ostream& out, std::span<const ParameterSet> sets)
{
    out << "param_set_id,parameter,value\n";
    for (const auto& s : sets) {
        out << s.id << ',' << s.parameter << ',' << text::format_double(s.value) << '\n';
    }
}

std::vector<ParameterSet> read_param_sets_csv(std::istream& in, const std::string& origin)
{
    std::vector<ParameterSet> sets;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = text::trim(line);
        if (view.empty() || line_no == 1) continue;
        const auto cells = text::split(view, ',');
        const auto id = cells.size() == 3 ? text::parse_double(cells[0]) : std::nullopt;
        const auto value = cells.size() == 3 ? text::parse_double(cells[2]) : std::nullopt;
        if (!id || !value) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": malformed parameter set row");
        }
        ParameterSet s;
        s.id = static_cast<int>(*id);
        s.parameter = std::string(cells[1]);
        s.value = *value;
        sets.push_back(s);
    }
    return sets;
}

void write_summary_csv(std::ostream& out, std::span<const SweepSummary> summary)
{
    using text::format_double;
    out << "param_set_id,parameter,value,logs,detections,false_alarms,missed,min,q1,median,q3,max,"
           "whisker_low,whisker_high,outliers,p2_5,p97_5\n";
    for (const auto& s : summary) {
        out << s.param_set_id << ',' << s.parameter << ',' << format_double(s.value) << ',' << s.logs << ','
            << s.delays.n << ',' << s.false_alarms << ',' << s.missed << ',';
        if (s.delays.n == 0) {
            out << ",,,,,,,,,\n";
            continue;
        }
        const auto& b = s.delays;
        out << format_double(b.min) << ',' << format_double(b.q1) << ',' << format_double(b.median) << ','
            << format_double(b.q3) << ',' << format_double(b.max) << ',' << format_double(b.whisker_low) << ','
            << format_double(b.whisker_high) << ',';
        for (std::size_t i = 0; i < b.outliers.size(); ++i) {
            out << (i ? ";" : "") << format_double(b.outliers[i]);
        }
        out << ',' << format_double(b.p2_5) << ',' << format_double(b.p97_5) << '\n';
    }
}

std::string render_report(std::span<const SweepSummary> summary)
{
    std::ostringstream out;
    out << std::left << std::setw(4) << "id" << std::setw(24) << "parameter" << std::right << std::setw(12)
        << "value" << std::setw(6) << "logs" << std::setw(5) << "FA" << std::setw(5) << "MD" << std::setw(9)
        << "min" << std::setw(9) << "q1" << std::setw(9) << "median" << std::setw(9) << "q3" << std::setw(9)
        << "max" << std::setw(6) << "out" << std::setw(18) << "95% interval" << '\n';
    auto ms = [](double s) {
        std::ostringstream o;
        o << std::fixed << std::setprecision(1) << s * 1e3;
        return o.str();
    };
    for (const auto& s : summary) {
        out << std::left << std::setw(4) << s.param_set_id << std::setw(24)
            << (s.parameter.empty() ? "-" : s.parameter) << std::right << std::setw(12)
            << text::format_double(s.value) << std::setw(6) << s.logs << std::setw(5) << s.false_alarms
            << std::setw(5) << s.missed;
        const auto& b = s.delays;
        if (b.n == 0) {
            out << std::setw(9) << "-" << std::setw(9) << "-" << std::setw(9) << "-" << std::setw(9) << "-"
                << std::setw(9) << "-" << std::setw(6) << 0 << std::setw(18) << "-" << '\n';
            continue;
        }
        out << std::setw(9) << ms(b.min) << std::setw(9) << ms(b.q1) << std::setw(9) << ms(b.median)
            << std::setw(9) << ms(b.q3) << std::setw(9) << ms(b.max) << std::setw(6) << b.outliers.size()
            << std::setw(18) << ("[" + ms(b.p2_5) + ", " + ms(b.p97_5) + "]") << '\n';
    }
    out << "(delays in ms; FA = false alarms, MD = missed detections)\n";
    return out.str();
}

void write_outputs_csv(std::ostream& out, std::span<const DetectorOutput> outputs)
{
    using text::format_double;
    out << "t,armed,k1,k2,k3,k4,var1,var2,var3,var4,pfail1,pfail2,pfail3,pfail4,failed1,failed2,failed3,failed4\n";
    for (const auto& o : outputs) {
        out << format_double(o.timestamp) << ',' << (o.armed ? 1 : 0);
        for (int i = 0; i < 4; ++i) out << ',' << format_double(o.k_hat[i]);
        for (int i = 0; i < 4; ++i) out << ',' << format_double(o.variances[i]);
        for (int i = 0; i < 4; ++i) out << ',' << format_double(o.p_fail[i]);
        for (int i = 0; i < 4; ++i) out << ',' << (o.status.failed[static_cast<std::size_t>(i)] ? 1 : 0);
        out << '\n';
    }
}

std::string format_evaluation(const EvaluationResult& r)
{
    std::ostringstream out;
    out << "delay_s=" << (r.detection_delay ? text::format_double(*r.detection_delay) : "none")
        << " false_alarms=" << r.false_alarm_count << " missed=" << (r.missed_detection ? 1 : 0)
        << " detected_actuator=" << (r.detected_actuator ? std::to_string(*r.detected_actuator) : "none");
    return out.str();
}

}  // namespace loe
