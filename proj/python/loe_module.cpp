#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "loe/detector.hpp"
#include "loe/replay.hpp"
#include "loe/simulator.hpp"

namespace py = pybind11;
using namespace loe;

namespace {

using Rows = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Columns t, p, q, r, az, w1..w4, matching the log file.
Rows samples_to_array(const std::vector<RawSample>& samples)
{
    Rows out({static_cast<py::ssize_t>(samples.size()), py::ssize_t{9}});
    auto a = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        a(i, 0) = s.timestamp;
        for (int j = 0; j < 3; ++j) a(i, 1 + j) = s.angular_rate[j];
        a(i, 4) = s.accel_z;
        for (int j = 0; j < 4; ++j) a(i, 5 + j) = s.rotor_speeds[j];
    }
    return out;
}

std::vector<RawSample> array_to_samples(const Rows& rows)
{
    if (rows.ndim() != 2 || rows.shape(1) != 9) {
        throw std::invalid_argument("samples must have shape (n, 9): t, p, q, r, az, w1..w4");
    }
    auto a = rows.unchecked<2>();
    std::vector<RawSample> out(static_cast<std::size_t>(a.shape(0)));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        auto& s = out[static_cast<std::size_t>(i)];
        s.timestamp = a(i, 0);
        s.angular_rate = {a(i, 1), a(i, 2), a(i, 3)};
        s.accel_z = a(i, 4);
        s.rotor_speeds = {a(i, 5), a(i, 6), a(i, 7), a(i, 8)};
    }
    return out;
}

py::dict evaluation_to_dict(const EvaluationResult& r)
{
    py::dict d;
    d["delay_s"] = r.detection_delay ? py::cast(*r.detection_delay) : py::none();
    d["false_alarms"] = r.false_alarm_count;
    d["missed"] = r.missed_detection;
    d["detected_actuator"] = r.detected_actuator ? py::cast(*r.detected_actuator) : py::none();
    return d;
}

py::dict outputs_to_dict(const std::vector<DetectorOutput>& outputs)
{
    const auto n = static_cast<py::ssize_t>(outputs.size());
    py::array_t<double> t(n);
    py::array_t<bool> armed(n), tick(n);
    py::array_t<double> k({n, py::ssize_t{4}}), var({n, py::ssize_t{4}}), pf({n, py::ssize_t{4}});
    py::array_t<bool> failed({n, py::ssize_t{4}});
    auto tt = t.mutable_unchecked<1>();
    auto aa = armed.mutable_unchecked<1>();
    auto ti = tick.mutable_unchecked<1>();
    auto kk = k.mutable_unchecked<2>();
    auto vv = var.mutable_unchecked<2>();
    auto pp = pf.mutable_unchecked<2>();
    auto ff = failed.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& o = outputs[static_cast<std::size_t>(i)];
        tt(i) = o.timestamp;
        aa(i) = o.armed;
        ti(i) = o.estimator_tick;
        for (int j = 0; j < 4; ++j) {
            kk(i, j) = o.k_hat[j];
            vv(i, j) = o.variances[j];
            pp(i, j) = o.p_fail[j];
            ff(i, j) = o.status.failed[static_cast<std::size_t>(j)];
        }
    }
    py::dict d;
    d["t"] = t;
    d["armed"] = armed;
    d["estimator_tick"] = tick;
    d["k_hat"] = k;
    d["variances"] = var;
    d["p_fail"] = pf;
    d["failed"] = failed;
    return d;
}

py::dict box_to_dict(const BoxStats& b)
{
    py::dict d;
    d["n"] = b.n;
    d["min"] = b.min;
    d["q1"] = b.q1;
    d["median"] = b.median;
    d["q3"] = b.q3;
    d["max"] = b.max;
    d["whisker_low"] = b.whisker_low;
    d["whisker_high"] = b.whisker_high;
    d["outliers"] = b.outliers;
    d["p2_5"] = b.p2_5;
    d["p97_5"] = b.p97_5;
    return d;
}

}  // namespace

PYBIND11_MODULE(loe, m)
{
    m.doc() = "Actuator loss-of-effectiveness detection for quadrotors";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<LogParseError>(m, "LogParseError", PyExc_ValueError);
    py::register_exception<sim::ScenarioDiverged>(m, "ScenarioDiverged", PyExc_RuntimeError);

    auto cfg = py::class_<DetectorConfig>(m, "DetectorConfig")
        .def(py::init<>())
        .def(py::init([](const py::kwargs& kw) {
            DetectorConfig c;
            for (const auto& [key, value] : kw) {
                const auto name = py::cast<std::string>(key);
                if (!set_config_value(c, name, py::cast<double>(value))) {
                    throw ConfigError("unknown configuration key '" + name + "'");
                }
            }
            c.validate();
            return c;
        }))
        .def("validate", &DetectorConfig::validate)
        .def("to_text", &format_config)
        .def_static("from_text", [](const std::string& s) {
            std::istringstream in(s);
            return parse_config(in);
        })
        .def_static("load", &load_config, py::arg("path"))
        .def_static("keys", &config_keys)
        .def("as_dict", [](const DetectorConfig& c) {
            py::dict d;
            for (const auto& k : config_keys()) d[py::str(k)] = *get_config_value(c, k);
            return d;
        })
        .def("__eq__", [](const DetectorConfig& a, const DetectorConfig& b) { return a == b; })
        .def("__repr__", [](const DetectorConfig& c) {
            return "DetectorConfig(k_threshold=" + std::to_string(c.decision.k_threshold) +
                   ", probability_threshold=" + std::to_string(c.decision.probability_threshold) + ", ...)";
        });
    for (const auto& key : config_keys()) {
        cfg.def_property(
            key.c_str(), [key](const DetectorConfig& c) { return *get_config_value(c, key); },
            [key](DetectorConfig& c, double v) { set_config_value(c, key, v); });
    }

    py::class_<DetectorOutput>(m, "DetectorOutput")
        .def_readonly("timestamp", &DetectorOutput::timestamp)
        .def_readonly("k_hat", &DetectorOutput::k_hat)
        .def_readonly("variances", &DetectorOutput::variances)
        .def_readonly("p_fail", &DetectorOutput::p_fail)
        .def_readonly("armed", &DetectorOutput::armed)
        .def_readonly("estimator_tick", &DetectorOutput::estimator_tick)
        .def_property_readonly("failed", [](const DetectorOutput& o) { return o.status.failed; })
        .def_property_readonly("first_detection_time",
                               [](const DetectorOutput& o) { return o.status.first_detection_time; });

    py::class_<Detector>(m, "Detector")
        .def(py::init<const DetectorConfig&>(), py::arg("config") = DetectorConfig{})
        .def(
            "process_sample",
            [](Detector& d, double t, const Eigen::Vector3d& rates, double accel_z, const Eigen::Vector4d& w) {
                RawSample s;
                s.timestamp = t;
                s.angular_rate = rates;
                s.accel_z = accel_z;
                s.rotor_speeds = w;
                return d.process_sample(s);
            },
            py::arg("t"), py::arg("rates"), py::arg("accel_z"), py::arg("rotor_speeds"))
        .def_property_readonly("armed", &Detector::armed)
        .def_property_readonly("k_hat", [](const Detector& d) { return Eigen::Vector4d(d.estimator().x); })
        .def_property_readonly("covariance", [](const Detector& d) { return Eigen::Matrix4d(d.estimator().P); })
        .def_property_readonly("failed", [](const Detector& d) { return d.status().failed; })
        .def_property_readonly("samples_processed", &Detector::samples_processed);

    py::class_<FlightLog>(m, "FlightLog")
        .def(py::init<>())
        .def_readwrite("sample_rate_hz", &FlightLog::sample_rate_hz)
        .def_readwrite("vehicle_id", &FlightLog::vehicle_id)
        .def_property(
            "fault",
            [](const FlightLog& l) -> py::object {
                if (!l.fault) return py::none();
                return py::make_tuple(l.fault->actuator, l.fault->time);
            },
            [](FlightLog& l, const std::optional<std::pair<int, double>>& f) {
                if (f) l.fault = GroundTruthFault{f->first, f->second};
                else l.fault.reset();
            })
        .def_property(
            "samples", [](const FlightLog& l) { return samples_to_array(l.samples); },
            [](FlightLog& l, const Rows& rows) { l.samples = array_to_samples(rows); })
        .def("duration", &FlightLog::duration)
        .def("__len__", [](const FlightLog& l) { return l.samples.size(); })
        .def("to_text", [](const FlightLog& l) {
            std::ostringstream out;
            write_log(out, l);
            return out.str();
        })
        .def_static("from_text", [](const std::string& s) {
            std::istringstream in(s);
            return parse_log(in);
        });

    m.def("load_log", &load_log, py::arg("path"));
    m.def("save_log", &save_log, py::arg("path"), py::arg("log"));

    m.def(
        "simulate",
        [](const std::string& scenario, double duration, std::optional<std::pair<int, double>> fault,
           std::uint64_t seed, double sample_rate_hz, double roll, double pitch, bool noiseless) {
            const auto kind = sim::scenario_from_string(scenario);
            if (!kind) throw std::invalid_argument("unknown scenario '" + scenario + "'");
            sim::ScenarioSpec spec;
            spec.kind = *kind;
            spec.duration = duration;
            spec.sample_interval = 1.0 / sample_rate_hz;
            spec.roll_offset = roll;
            spec.pitch_offset = pitch;
            if (fault) spec.fault = sim::FaultEvent{.time = fault->second, .actuator = fault->first, .new_k = 0.0};
            auto noise = noiseless ? sim::SensorNoiseModel::noiseless() : sim::SensorNoiseModel{};
            noise.seed = seed;
            py::gil_scoped_release release;
            return sim::fly_scenario(spec, {}, noise);
        },
        py::arg("scenario") = "hover", py::arg("duration") = 10.0, py::arg("fault") = py::none(),
        py::arg("seed") = 1, py::arg("sample_rate_hz") = 500.0, py::arg("roll") = 0.0, py::arg("pitch") = 0.0,
        py::arg("noiseless") = false,
        "Closed-loop simulated flight. fault = (actuator 1..4, time s) for a total rotor loss.");

    m.def(
        "run_detector",
        [](const FlightLog& log, const DetectorConfig& config) {
            std::vector<DetectorOutput> outputs;
            {
                py::gil_scoped_release release;
                outputs = run_detector(log, config);
            }
            return outputs_to_dict(outputs);
        },
        py::arg("log"), py::arg("config") = DetectorConfig{},
        "Per-sample detector outputs as numpy arrays.");

    m.def(
        "evaluate",
        [](const FlightLog& log, const DetectorConfig& config) {
            return evaluation_to_dict(evaluate(run_detector(log, config), log.fault));
        },
        py::arg("log"), py::arg("config") = DetectorConfig{},
        "Detection delay, false alarms and missed detection against the log's ground truth.");

    m.def(
        "sweep",
        [](const std::vector<std::pair<std::string, FlightLog>>& logs, const std::optional<std::string>& spec_text,
           const DetectorConfig& base, unsigned jobs) {
            SweepSpec spec = SweepSpec::reference(base);
            if (spec_text) {
                std::istringstream in(*spec_text);
                spec = parse_sweep_spec(in, base);
            }
            std::vector<NamedLog> named;
            for (const auto& [id, log] : logs) named.push_back({id, log});
            SweepResult result;
            {
                py::gil_scoped_release release;
                result = sweep(named, spec, jobs);
            }
            py::list rows;
            for (const auto& r : result.rows) {
                auto d = evaluation_to_dict(r.result);
                d["param_set_id"] = r.param_set_id;
                d["log_id"] = r.log_id;
                rows.append(d);
            }
            py::list summary;
            for (const auto& s : result.summary) {
                py::dict d;
                d["param_set_id"] = s.param_set_id;
                d["parameter"] = s.parameter;
                d["value"] = s.value;
                d["logs"] = s.logs;
                d["false_alarms"] = s.false_alarms;
                d["missed"] = s.missed;
                d["delays"] = box_to_dict(s.delays);
                summary.append(d);
            }
            py::dict out;
            out["rows"] = rows;
            out["summary"] = summary;
            out["report"] = render_report(result.summary);
            return out;
        },
        py::arg("logs"), py::arg("spec") = py::none(), py::arg("base") = DetectorConfig{}, py::arg("jobs") = 1,
        "One-at-a-time parameter sweep. logs is a list of (id, FlightLog); spec is sweep text or None for the "
        "reference sweep.");

    m.def("box_statistics", [](std::vector<double> v) { return box_to_dict(box_statistics(std::move(v))); },
          py::arg("values"));

    m.def("failure_probability", &failure_probability, py::arg("k_hat"), py::arg("variance"),
          py::arg("k_threshold") = 0.25);

    m.def(
        "observation_matrix",
        [](const Eigen::Vector4d& w, double g_p, double g_q, double g_az) {
            return Matrix34(observation_matrix(EffectivenessGains{g_p, g_q, g_az}, w));
        },
        py::arg("rotor_speeds"), py::arg("g_p") = 1e-4, py::arg("g_q") = 1e-4, py::arg("g_az") = 5e-6);

    m.def(
        "kalman_update",
        [](const Eigen::Vector4d& x, const Eigen::Matrix4d& P, const Matrix34& H, const Eigen::Vector3d& z, double q,
           double r, bool clamp) {
            const EstimatorState s{x, P};
            const NoiseConfig noise{q, r};
            const auto next = clamp ? kalman_step(s, H, z, noise) : kalman_update(s, H, z, noise);
            return py::make_tuple(Eigen::Vector4d(next.x), Eigen::Matrix4d(next.P));
        },
        py::arg("x"), py::arg("P"), py::arg("H"), py::arg("z"), py::arg("q") = 0.1, py::arg("r") = 1.0,
        py::arg("clamp") = false, "One predict/update step; returns (x, P).");

    m.def(
        "design_lowpass",
        [](double wn, double zeta, double dt) {
            const auto k = design_lowpass(FilterDesign{wn, zeta, dt});
            return py::make_tuple(k.b0, k.b1, k.b2, k.a1, k.a2);
        },
        py::arg("natural_frequency") = 50.0, py::arg("damping_ratio") = 0.55, py::arg("sample_interval") = 0.002,
        "Biquad coefficients (b0, b1, b2, a1, a2) with a0 normalized to 1.");
}
