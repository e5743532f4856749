#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "loe/detector.hpp"
#include "loe/flight_log.hpp"

namespace loe {

/// Runs a fresh detector over every sample of the log. The log's sample
/// rate must match config.sensor_interval within 1%.
std::vector<DetectorOutput> run_detector(const FlightLog& log, const DetectorConfig& config);

struct EvaluationResult {
    std::optional<double> detection_delay;  // s, first correct latch - t_fail
    int false_alarm_count = 0;
    bool missed_detection = false;
    std::optional<int> detected_actuator;   // 1-based, earliest latch of any actuator

    bool operator==(const EvaluationResult&) const = default;
};

/// A latch counts as a correct detection only on the faulty actuator at or
/// after the fault time; every other latched actuator is a false alarm.
/// Throws std::invalid_argument if outputs is empty or the fault time lies
/// outside the output time span.
EvaluationResult evaluate(std::span<const DetectorOutput> outputs,
                          const std::optional<GroundTruthFault>& truth);

struct ParameterSet {
    int id = 0;
    std::string parameter;  // config key
    double value = 0.0;
    DetectorConfig config;
};

/// One-at-a-time variation around a base configuration. Each listed
/// (parameter, value) pair becomes one parameter set, in listing order.
struct SweepSpec {
    DetectorConfig base{};
    std::vector<std::pair<std::string, std::vector<double>>> variations;

    /// Throws ConfigError for unknown parameters or invalid resulting configs.
    std::vector<ParameterSet> expand() const;

    /// G_p, G_q, G_az at 0.8/1.0/1.2 of base; Q and R at 0.5x and 2x;
    /// k_threshold 0.15/0.25/0.35; probability_threshold 0.8/0.9/0.99.
    /// 19 parameter sets for the default base.
    static SweepSpec reference(const DetectorConfig& base = {});
};

/// Lines of `parameter = v1, v2, ...`; `#` comments.
SweepSpec parse_sweep_spec(std::istream& in, const DetectorConfig& base, const std::string& origin = "<spec>");
SweepSpec load_sweep_spec(const std::string& path, const DetectorConfig& base);
std::string format_sweep_spec(const SweepSpec& spec);

/// Box-plot statistics. Quartiles and the 2.5/97.5 % bounds use linear
/// interpolation between order statistics (h = (n - 1) p). Outliers lie
/// beyond 1.5 IQR from the quartiles; whiskers end at the most extreme
/// non-outliers.
struct BoxStats {
    std::size_t n = 0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    double whisker_low = 0.0, whisker_high = 0.0;
    std::vector<double> outliers;
    double p2_5 = 0.0, p97_5 = 0.0;
};

double quantile_sorted(std::span<const double> sorted, double p);
BoxStats box_statistics(std::vector<double> values);

struct NamedLog {
    std::string id;
    FlightLog log;
};

struct SweepRow {
    int param_set_id = 0;
    std::string log_id;
    EvaluationResult result;
};

struct SweepSummary {
    int param_set_id = 0;
    std::string parameter;
    double value = 0.0;
    std::size_t logs = 0;
    int false_alarms = 0;
    int missed = 0;
    BoxStats delays;
};

struct SweepResult {
    std::vector<ParameterSet> sets;
    std::vector<SweepRow> rows;  // ordered by (param set, log)
    std::vector<SweepSummary> summary;
};

/// Runs every (parameter set, log) pair, using up to `jobs` threads. Output
/// order is independent of the thread count.
SweepResult sweep(std::span<const NamedLog> logs, const SweepSpec& spec, unsigned jobs = 1);

std::vector<SweepSummary> summarize(std::span<const SweepRow> rows, std::span<const ParameterSet> sets);

/// param_set_id,log_id,delay_s,false_alarms,missed
void write_results_csv(std::ostream& out, std::span<const SweepRow> rows);
std::vector<SweepRow> read_results_csv(std::istream& in, const std::string& origin = "<results>");
/// param_set_id,parameter,value
void write_param_sets_csv(std::ostream& out, std::span<const ParameterSet> sets);
std::vector<ParameterSet> read_param_sets_csv(std::istream& in, const std::string& origin = "<param_sets>");
/// param_set_id,parameter,value,logs,detections,false_alarms,missed,min,q1,median,q3,max,
/// whisker_low,whisker_high,outliers,p2_5,p97_5
void write_summary_csv(std::ostream& out, std::span<const SweepSummary> summary);

/// Fixed-width text table with one row per parameter set.
std::string render_report(std::span<const SweepSummary> summary);

/// Per-sample detector output CSV:
/// t,armed,k1..k4,var1..var4,pfail1..pfail4,failed1..failed4
void write_outputs_csv(std::ostream& out, std::span<const DetectorOutput> outputs);

std::string format_evaluation(const EvaluationResult& result);

}  // namespace loe
