#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "loe/replay.hpp"
#include "loe/simulator.hpp"

using namespace loe;

namespace {

FlightLog small_log()
{
    FlightLog log;
    log.sample_rate_hz = 500.0;
    log.vehicle_id = "bench-7";
    log.fault = GroundTruthFault{2, 0.004};
    for (int i = 0; i < 5; ++i) {
        RawSample s;
        s.timestamp = i * 0.002;
        s.angular_rate = {0.1 * i, -0.013, 1.0 / 3.0};
        s.accel_z = -9.81 + 1e-7 * i;
        s.rotor_speeds = {700.0 + i, 701.5, 699.25, 700.125};
        log.samples.push_back(s);
    }
    return log;
}

std::vector<DetectorOutput> outputs_with_latches(std::initializer_list<std::pair<int, double>> latches)
{
    std::vector<DetectorOutput> out;
    DetectionStatus st;
    for (int i = 0; i <= 150; ++i) {
        const double t = 1.0 + i * 0.02;
        for (const auto& [actuator, when] : latches) {
            const auto idx = static_cast<std::size_t>(actuator - 1);
            if (!st.failed[idx] && t >= when - 1e-12) {
                st.failed[idx] = true;
                st.first_detection_time[idx] = when;
            }
        }
        DetectorOutput o;
        o.timestamp = t;
        o.status = st;
        out.push_back(o);
    }
    return out;
}

std::string write_to_string(const FlightLog& log)
{
    std::ostringstream out;
    write_log(out, log);
    return out.str();
}

int parse_error_line(const std::string& text)
{
    std::istringstream in(text);
    try {
        parse_log(in);
    } catch (const LogParseError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST(FlightLog, RoundTripIsExact)
{
    const auto log = small_log();
    std::istringstream in(write_to_string(log));
    const auto back = parse_log(in);
    EXPECT_EQ(back.sample_rate_hz, log.sample_rate_hz);
    EXPECT_EQ(back.vehicle_id, log.vehicle_id);
    EXPECT_EQ(back.fault, log.fault);
    ASSERT_EQ(back.samples.size(), log.samples.size());
    for (std::size_t i = 0; i < log.samples.size(); ++i) {
        EXPECT_EQ(back.samples[i].timestamp, log.samples[i].timestamp);
        EXPECT_EQ(back.samples[i].angular_rate, log.samples[i].angular_rate);
        EXPECT_EQ(back.samples[i].accel_z, log.samples[i].accel_z);
        EXPECT_EQ(back.samples[i].rotor_speeds, log.samples[i].rotor_speeds);
    }
}

TEST(FlightLog, RpmColumnsAreConverted)
{
    std::istringstream in("# sample_rate_hz=500\n# rpm_units=rpm\nt,p,q,r,az,w1,w2,w3,w4\n"
                          "0,0,0,0,-9.81,6000,3000,0,12000\n0.002,0,0,0,-9.81,6000,3000,0,12000\n");
    const auto log = parse_log(in);
    EXPECT_NEAR(log.samples[0].rotor_speeds[0], 200.0 * std::numbers::pi, 1e-9);
    EXPECT_NEAR(log.samples[0].rotor_speeds[3], 400.0 * std::numbers::pi, 1e-9);
    EXPECT_FALSE(log.fault.has_value());
}

TEST(FlightLog, ErrorsCarryLineNumbers)
{
    EXPECT_EQ(parse_error_line(""), 0);
    EXPECT_EQ(parse_error_line("# sample_rate_hz=500\nt,p,q\n"), 2);
    const std::string head = "# sample_rate_hz=500\nt,p,q,r,az,w1,w2,w3,w4\n";
    EXPECT_EQ(parse_error_line(head + "0,0,0,0,0,1,1,1,1\n0.002,0,0,0,0,1,1,1\n"), 4);
    EXPECT_EQ(parse_error_line(head + "0,0,0,0,x,1,1,1,1\n"), 3);
    EXPECT_EQ(parse_error_line(head + "0,0,0,0,nan,1,1,1,1\n"), 3);
    EXPECT_EQ(parse_error_line(head + "0,0,0,0,0,1,-1,1,1\n"), 3);
    EXPECT_EQ(parse_error_line(head + "0,0,0,0,0,1,1,1,1\n0,0,0,0,0,1,1,1,1\n"), 4);
    EXPECT_GT(parse_error_line("# sample_rate_hz=500\n# fault_actuator=2\n" + head.substr(21) + "0,0,0,0,0,1,1,1,1\n"), 0);
    EXPECT_GT(parse_error_line("# sample_rate_hz=1000\n" + head.substr(21) +
                               "0,0,0,0,0,1,1,1,1\n0.002,0,0,0,0,1,1,1,1\n0.004,0,0,0,0,1,1,1,1\n"),
              0);
}

TEST(FlightLog, LoadMissingFileFails)
{
    EXPECT_THROW(load_log("/nonexistent/flight.csv"), std::runtime_error);
}

TEST(Evaluate, CorrectDetection)
{
    const auto outputs = outputs_with_latches({{3, 1.66}});
    const auto r = evaluate(outputs, GroundTruthFault{3, 1.56});
    ASSERT_TRUE(r.detection_delay.has_value());
    EXPECT_NEAR(*r.detection_delay, 0.10, 1e-12);
    EXPECT_EQ(r.false_alarm_count, 0);
    EXPECT_FALSE(r.missed_detection);
    EXPECT_EQ(r.detected_actuator, 3);
}

TEST(Evaluate, WrongActuatorIsFalseAlarmAndMiss)
{
    const auto r = evaluate(outputs_with_latches({{1, 1.70}}), GroundTruthFault{3, 1.56});
    EXPECT_FALSE(r.detection_delay.has_value());
    EXPECT_EQ(r.false_alarm_count, 1);
    EXPECT_TRUE(r.missed_detection);
    EXPECT_EQ(r.detected_actuator, 1);
}

TEST(Evaluate, LatchBeforeFaultIsFalseAlarm)
{
    const auto r = evaluate(outputs_with_latches({{3, 1.20}}), GroundTruthFault{3, 1.56});
    EXPECT_EQ(r.false_alarm_count, 1);
    EXPECT_TRUE(r.missed_detection);
}

TEST(Evaluate, NoFaultNoLatch)
{
    const auto r = evaluate(outputs_with_latches({}), std::nullopt);
    EXPECT_EQ(r, EvaluationResult{});
    const auto fa = evaluate(outputs_with_latches({{2, 2.0}, {4, 2.5}}), std::nullopt);
    EXPECT_EQ(fa.false_alarm_count, 2);
    EXPECT_FALSE(fa.missed_detection);
    EXPECT_EQ(fa.detected_actuator, 2);
}

TEST(Evaluate, RejectsBadInput)
{
    EXPECT_THROW(evaluate({}, std::nullopt), std::invalid_argument);
    EXPECT_THROW(evaluate(outputs_with_latches({}), GroundTruthFault{3, 10.0}), std::invalid_argument);
}

TEST(Sweep, ReferenceSpecHasNineteenSets)
{
    const auto sets = SweepSpec::reference().expand();
    ASSERT_EQ(sets.size(), 19u);
    for (std::size_t i = 0; i < sets.size(); ++i) EXPECT_EQ(sets[i].id, static_cast<int>(i));
    EXPECT_EQ(sets[0].parameter, "g_p");
    EXPECT_NEAR(sets[0].config.gains.g_p, 0.8e-4, 1e-18);
    EXPECT_EQ(sets[0].config.gains.g_q, DetectorConfig{}.gains.g_q);
    EXPECT_EQ(sets[18].parameter, "probability_threshold");
    EXPECT_EQ(sets[18].config.decision.probability_threshold, 0.99);
}

TEST(Sweep, SpecRoundTripAndErrors)
{
    const auto spec = SweepSpec::reference();
    std::istringstream in(format_sweep_spec(spec));
    const auto back = parse_sweep_spec(in, DetectorConfig{});
    EXPECT_EQ(back.variations, spec.variations);

    std::istringstream unknown("g_x = 1, 2\n");
    EXPECT_THROW(parse_sweep_spec(unknown, DetectorConfig{}), ConfigError);
    SweepSpec bad;
    bad.variations = {{"probability_threshold", {0.4}}};
    EXPECT_THROW(bad.expand(), ConfigError);
}

TEST(Sweep, EveryPairIsEvaluatedIndependentOfThreads)
{
    std::vector<NamedLog> logs;
    for (int a = 1; a <= 2; ++a) {
        sim::ScenarioSpec spec;
        spec.duration = 2.0;
        spec.fault = sim::FaultEvent{.time = 1.4, .actuator = a, .new_k = 0.0};
        logs.push_back({"hover_a" + std::to_string(a), sim::fly_scenario(spec)});
    }
    SweepSpec spec;
    spec.variations = {{"k_threshold", {0.15, 0.25, 0.35}}, {"process_noise_q", {0.05}}};

    const auto serial = sweep(logs, spec, 1);
    const auto parallel = sweep(logs, spec, 4);
    ASSERT_EQ(serial.rows.size(), 8u);
    ASSERT_EQ(serial.summary.size(), 4u);
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        EXPECT_EQ(serial.rows[i].param_set_id, parallel.rows[i].param_set_id);
        EXPECT_EQ(serial.rows[i].log_id, parallel.rows[i].log_id);
        EXPECT_EQ(serial.rows[i].result, parallel.rows[i].result);
    }
    for (const auto& s : serial.summary) EXPECT_EQ(s.logs, 2u);

    // a lower failure threshold on k needs the estimate to fall further
    const auto delay_for = [&](int set) {
        double worst = 0.0;
        for (const auto& r : serial.rows) {
            if (r.param_set_id == set) worst = std::max(worst, r.result.detection_delay.value_or(1e9));
        }
        return worst;
    };
    EXPECT_GE(delay_for(0), delay_for(1));
    EXPECT_GE(delay_for(1), delay_for(2));

    std::ostringstream csv;
    write_results_csv(csv, serial.rows);
    std::istringstream csv_in(csv.str());
    const auto rows = read_results_csv(csv_in);
    ASSERT_EQ(rows.size(), serial.rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].result.detection_delay, serial.rows[i].result.detection_delay);
        EXPECT_EQ(rows[i].result.false_alarm_count, serial.rows[i].result.false_alarm_count);
    }

    std::ostringstream sets_csv;
    write_param_sets_csv(sets_csv, serial.sets);
    std::istringstream sets_in(sets_csv.str());
    const auto sets = read_param_sets_csv(sets_in);
    ASSERT_EQ(sets.size(), serial.sets.size());
    EXPECT_EQ(sets[3].parameter, "process_noise_q");
    EXPECT_EQ(sets[3].value, 0.05);

    const auto again = summarize(rows, sets);
    for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(again[i].delays.median, serial.summary[i].delays.median);
    EXPECT_NE(render_report(serial.summary).find("k_threshold"), std::string::npos);
}

TEST(BoxStats, FrozenValues)
{
    const auto b = box_statistics({0.12, 0.10, 0.14, 0.12, 0.11, 0.30, 0.12, 0.13, 0.09, 0.12});
    EXPECT_EQ(b.n, 10u);
    EXPECT_NEAR(b.p2_5, 0.09225, 1e-12);
    EXPECT_NEAR(b.q1, 0.1125, 1e-12);
    EXPECT_NEAR(b.median, 0.12, 1e-12);
    EXPECT_NEAR(b.q3, 0.1275, 1e-12);
    EXPECT_NEAR(b.p97_5, 0.264, 1e-12);
    EXPECT_EQ(b.min, 0.09);
    EXPECT_EQ(b.max, 0.30);
    ASSERT_EQ(b.outliers.size(), 1u);
    EXPECT_EQ(b.outliers[0], 0.30);
    EXPECT_EQ(b.whisker_low, 0.09);
    EXPECT_EQ(b.whisker_high, 0.14);
}

TEST(BoxStats, MatchesBruteForceOrdering)
{
    std::mt19937 rng(17);
    std::exponential_distribution<double> e(10.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(1 + trial * 3);
        for (auto& x : v) x = e(rng);
        const auto b = box_statistics(v);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        EXPECT_EQ(b.min, sorted.front());
        EXPECT_EQ(b.max, sorted.back());
        // fraction of values at or below each quantile brackets its level
        const auto frac_le = [&](double q) {
            return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), q) - sorted.begin()) /
                   static_cast<double>(sorted.size());
        };
        const double n = static_cast<double>(sorted.size());
        EXPECT_GE(frac_le(b.median) + 1.0 / n, 0.5);
        EXPECT_LE(b.min, b.whisker_low);
        EXPECT_LE(b.q1, b.median);
        EXPECT_LE(b.median, b.q3);
        EXPECT_LE(b.whisker_high, b.max);
        for (double o : b.outliers) EXPECT_TRUE(o < b.q1 - 1.5 * (b.q3 - b.q1) || o > b.q3 + 1.5 * (b.q3 - b.q1));
        std::size_t inside = 0;
        for (double x : sorted) inside += (x >= b.whisker_low && x <= b.whisker_high);
        EXPECT_EQ(inside + b.outliers.size(), sorted.size());
    }
    EXPECT_THROW(quantile_sorted(std::span<const double>{}, 0.5), std::invalid_argument);
}
