// loe: simulate flights, run the detector on logs, sweep parameters, report.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <fnmatch.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "loe/detector.hpp"
#include "loe/replay.hpp"
#include "loe/simulator.hpp"
#include "loe/text.hpp"

namespace fs = std::filesystem;
using namespace loe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Thrown for bad flags or configuration; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

sim::FaultEvent parse_fault(const std::string& arg)
{
    const auto colon = arg.find(':');
    if (colon == std::string::npos) throw UsageError("--fault expects 'actuator:time', got '" + arg + "'");
    const auto actuator = text::parse_double(arg.substr(0, colon));
    const auto time = text::parse_double(arg.substr(colon + 1));
    if (!actuator || !time || *actuator != std::floor(*actuator)) {
        throw UsageError("--fault expects 'actuator:time', got '" + arg + "'");
    }
    if (*actuator < 1 || *actuator > 4) {
        throw UsageError("--fault: actuator index " + text::format_double(*actuator) + " out of range 1..4");
    }
    if (!(*time >= 0.0)) throw UsageError("--fault: time must be >= 0");
    return sim::FaultEvent{.time = *time, .actuator = static_cast<int>(*actuator), .new_k = 0.0};
}

DetectorConfig config_from(const std::string& path)
{
    if (path.empty()) return DetectorConfig{};
    try {
        return load_config(path);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    return out;
}

// Files, directories (every *.csv inside) or wildcard patterns in the last
// path component. Sorted so the log order is reproducible.
std::vector<std::string> expand_logs(const std::vector<std::string>& args)
{
    std::vector<std::string> found;
    for (const auto& arg : args) {
        const fs::path p(arg);
        if (arg.find_first_of("*?[") != std::string::npos) {
            const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
            std::error_code ec;
            std::vector<std::string> matches;
            for (const auto& entry : fs::directory_iterator(dir, ec)) {
                if (entry.is_regular_file() &&
                    fnmatch(p.filename().c_str(), entry.path().filename().c_str(), 0) == 0) {
                    matches.push_back(entry.path().string());
                }
            }
            std::sort(matches.begin(), matches.end());
            found.insert(found.end(), matches.begin(), matches.end());
        } else if (fs::is_directory(p)) {
            std::vector<std::string> matches;
            for (const auto& entry : fs::directory_iterator(p)) {
                if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                    matches.push_back(entry.path().string());
                }
            }
            std::sort(matches.begin(), matches.end());
            found.insert(found.end(), matches.begin(), matches.end());
        } else if (fs::is_regular_file(p)) {
            found.push_back(arg);
        }
    }
    if (found.empty()) throw UsageError("no log files match the given --logs");
    return found;
}

struct SimulateArgs {
    std::string scenario = "hover";
    double duration = 10.0;
    std::string fault;
    std::uint64_t seed = 1;
    double rate = 500.0;
    double roll = 0.0;
    double pitch = 0.0;
    std::string out;
};

int run_simulate(const SimulateArgs& a)
{
    const auto kind = sim::scenario_from_string(a.scenario);
    if (!kind) throw UsageError("unknown scenario '" + a.scenario + "' (hover, step-maneuvers, wind, ground-idle)");
    if (!(a.duration > 0.0)) throw UsageError("--duration must be > 0");
    if (!(a.rate > 0.0)) throw UsageError("--rate must be > 0");

    sim::ScenarioSpec spec;
    spec.kind = *kind;
    spec.duration = a.duration;
    spec.sample_interval = 1.0 / a.rate;
    spec.roll_offset = a.roll;
    spec.pitch_offset = a.pitch;
    spec.vehicle_id = "sim-" + a.scenario;
    if (!a.fault.empty()) {
        spec.fault = parse_fault(a.fault);
        if (spec.fault->time >= a.duration) throw UsageError("--fault time must be before --duration");
    }
    sim::SensorNoiseModel noise;
    noise.seed = a.seed;

    const auto log = sim::fly_scenario(spec, {}, noise);
    save_log(a.out, log);
    std::cout << "wrote " << log.samples.size() << " samples to " << a.out << '\n';
    if (log.fault) {
        std::cout << "ground truth: actuator " << log.fault->actuator << " lost at t="
                  << text::format_double(log.fault->time) << " s\n";
    } else {
        std::cout << "ground truth: no fault\n";
    }
    return kExitOk;
}

struct DetectArgs {
    std::string log;
    std::string config;
    std::string out;
    bool all_samples = false;
};

int run_detect(const DetectArgs& a)
{
    const auto config = config_from(a.config);
    const auto log = load_log(a.log);
    const auto outputs = run_detector(log, config);

    if (!a.out.empty()) {
        auto out = open_out(a.out);
        if (a.all_samples) {
            write_outputs_csv(out, outputs);
        } else {
            std::vector<DetectorOutput> ticks;
            std::copy_if(outputs.begin(), outputs.end(), std::back_inserter(ticks),
                         [](const DetectorOutput& o) { return o.estimator_tick; });
            write_outputs_csv(out, ticks);
        }
    }
    std::cout << format_evaluation(evaluate(outputs, log.fault)) << '\n';
    return kExitOk;
}

struct SweepArgs {
    std::vector<std::string> logs;
    std::string spec;
    std::string config;
    std::string out_dir = ".";
    unsigned jobs = 1;
};

int run_sweep(const SweepArgs& a)
{
    const auto base = config_from(a.config);
    SweepSpec spec;
    try {
        spec = a.spec.empty() ? SweepSpec::reference(base) : load_sweep_spec(a.spec, base);
        spec.expand();  // reject bad parameters before loading anything
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }

    std::vector<NamedLog> logs;
    for (const auto& path : expand_logs(a.logs)) {
        logs.push_back({fs::path(path).stem().string(), load_log(path)});
    }
    const unsigned jobs = a.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : a.jobs;
    const auto result = sweep(logs, spec, jobs);

    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    {
        auto out = open_out((dir / "results.csv").string());
        write_results_csv(out, result.rows);
    }
    {
        auto out = open_out((dir / "param_sets.csv").string());
        write_param_sets_csv(out, result.sets);
    }
    {
        auto out = open_out((dir / "summary.csv").string());
        write_summary_csv(out, result.summary);
    }
    std::cout << result.sets.size() << " parameter sets x " << logs.size() << " logs = " << result.rows.size()
              << " runs; wrote results.csv, param_sets.csv, summary.csv to " << dir.string() << '\n';
    return kExitOk;
}

struct ReportArgs {
    std::string results;
    std::string param_sets;
    std::string out;
};

int run_report(const ReportArgs& a)
{
    std::ifstream results_in(a.results);
    if (!results_in) throw UsageError("cannot open results file '" + a.results + "'");
    const auto rows = read_results_csv(results_in, a.results);

    std::string sets_path = a.param_sets;
    if (sets_path.empty()) {
        const auto sibling = fs::path(a.results).parent_path() / "param_sets.csv";
        if (fs::exists(sibling)) sets_path = sibling.string();
    }
    std::vector<ParameterSet> sets;
    if (!sets_path.empty()) {
        std::ifstream sets_in(sets_path);
        if (!sets_in) throw UsageError("cannot open parameter set file '" + sets_path + "'");
        sets = read_param_sets_csv(sets_in, sets_path);
    } else {
        // without names, one anonymous set per id in the results
        for (const auto& r : rows) {
            if (std::none_of(sets.begin(), sets.end(), [&](const ParameterSet& s) { return s.id == r.param_set_id; })) {
                sets.push_back(ParameterSet{.id = r.param_set_id, .parameter = "", .value = 0.0, .config = {}});
            }
        }
        std::sort(sets.begin(), sets.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    }

    const auto summary = summarize(rows, sets);
    const std::string table = render_report(summary);
    std::cout << table;
    if (!a.out.empty()) {
        auto out = open_out(a.out);
        if (fs::path(a.out).extension() == ".csv") write_summary_csv(out, summary);
        else out << table;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Actuator loss-of-effectiveness detection: simulate, detect, sweep, report"};
    app.require_subcommand(0, 1);

    bool print_config = false;
    bool print_spec = false;
    app.add_flag("--print-default-config", print_config, "Print the default detector configuration");
    app.add_flag("--print-default-spec", print_spec, "Print the default sweep specification");

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Fly a simulated scenario and write a flight log");
    simulate->add_option("--scenario", sim_args.scenario, "hover | step-maneuvers | wind | ground-idle")
        ->capture_default_str();
    simulate->add_option("--duration", sim_args.duration, "Flight length [s]")->capture_default_str();
    simulate->add_option("--fault", sim_args.fault, "Total loss of one rotor, 'actuator:time' (e.g. 3:1.56)");
    simulate->add_option("--seed", sim_args.seed, "Sensor noise seed")->capture_default_str();
    simulate->add_option("--rate", sim_args.rate, "Sensor sample rate [Hz]")->capture_default_str();
    simulate->add_option("--roll", sim_args.roll, "Held roll setpoint [rad]")->capture_default_str();
    simulate->add_option("--pitch", sim_args.pitch, "Held pitch setpoint [rad]")->capture_default_str();
    simulate->add_option("--out", sim_args.out, "Output log CSV")->required();

    DetectArgs det_args;
    auto* detect = app.add_subcommand("detect", "Run the detector over a flight log");
    detect->add_option("--log", det_args.log, "Flight log CSV")->required();
    detect->add_option("--config", det_args.config, "Detector configuration file (defaults if omitted)");
    detect->add_option("--out", det_args.out, "Detector output CSV, one row per estimator tick");
    detect->add_flag("--all-samples", det_args.all_samples, "Write one output row per sensor sample");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "Replay logs under one-at-a-time parameter variations");
    sweep_cmd->add_option("--logs", sweep_args.logs, "Log files, directories or wildcard patterns")->required();
    sweep_cmd->add_option("--spec", sweep_args.spec, "Sweep specification (built-in reference if omitted)");
    sweep_cmd->add_option("--config", sweep_args.config, "Base detector configuration");
    sweep_cmd->add_option("--out-dir", sweep_args.out_dir, "Directory for results, parameter sets and summary")
        ->capture_default_str();
    sweep_cmd->add_option("--jobs", sweep_args.jobs, "Worker threads, 0 = all cores")->capture_default_str();

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Box-plot table of detection delays per parameter set");
    report->add_option("--results", report_args.results, "results.csv from a sweep")->required();
    report->add_option("--param-sets", report_args.param_sets, "param_sets.csv (default: next to results)");
    report->add_option("--out", report_args.out, "Write the table (.csv for the summary CSV)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (print_config) {
            std::cout << format_config(DetectorConfig{});
            return kExitOk;
        }
        if (print_spec) {
            std::cout << format_sweep_spec(SweepSpec::reference());
            return kExitOk;
        }
        if (*simulate) return run_simulate(sim_args);
        if (*detect) return run_detect(det_args);
        if (*sweep_cmd) return run_sweep(sweep_args);
        if (*report) return run_report(report_args);
        std::cerr << app.help();
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
