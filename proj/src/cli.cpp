#include "sbfc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbfc/config.hpp"
#include "sbfc/errors.hpp"
#include "sbfc/trace_io.hpp"

#ifndef SBFC_VERSION
#define SBFC_VERSION "0.0.0"
#endif

namespace sbfc::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Tuning ended without a single finite cost.
class Infeasible : public Error {
public:
    using Error::Error;
};

// Differences found by replay.
class Mismatch : public Error {
public:
    using Error::Error;
};

struct GridAxis {
    std::string key;
    std::vector<std::string> values;
};

// Everything a command needs; a manifest stores exactly this.
struct Job {
    std::string command;
    std::string preset;
    std::string scenario; // complete resolved YAML
    std::vector<GridAxis> grid;
    std::string trace_path;
    std::string trace_hash;
};

// Files produced by a command, held in memory until they are committed together.
class Outputs {
public:
    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

    // Writes every file or none: temporaries first, then renames; on failure everything is removed.
    void commit(const fs::path& dir) const
    {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec || !fs::is_directory(dir))
            throw IoError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
        std::vector<fs::path> temps, finals;
        auto rollback = [&] {
            std::error_code ignored;
            for (const auto& p : temps)
                fs::remove(p, ignored);
            for (const auto& p : finals)
                fs::remove(p, ignored);
        };
        for (const auto& [name, content] : files_) {
            const fs::path tmp = dir / ("." + name + ".partial");
            temps.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary);
            out << content;
            out.close();
            if (!out) {
                rollback();
                throw IoError("cannot write " + (dir / name).string());
            }
        }
        for (std::size_t i = 0; i < files_.size(); ++i) {
            const fs::path target = dir / files_[i].first;
            fs::rename(temps[i], target, ec);
            if (ec) {
                rollback();
                throw IoError("cannot write " + target.string() + ": " + ec.message());
            }
            finals.push_back(target);
        }
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

std::string vector_text(const Vector& v)
{
    std::string out;
    char buf[32];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", v[i]);
        out += (i ? " " : "") + std::string(buf);
    }
    return out;
}

std::string number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string csv_quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s)
        out += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
    return out + "\"";
}

// Splits "key=v1,v2" on commas outside brackets.
GridAxis parse_grid(const std::string& text)
{
    const Override o = parse_override(text);
    GridAxis axis{o.key, {}};
    std::string cell;
    int depth = 0;
    for (char c : o.value) {
        if (c == '[' || c == '{')
            ++depth;
        if (c == ']' || c == '}')
            --depth;
        if (c == ',' && depth == 0) {
            axis.values.push_back(cell);
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (!cell.empty() || !axis.values.empty())
        axis.values.push_back(cell);
    return axis;
}

void simulate_outputs(const RunSetup& setup, Outputs& files, std::ostream& out)
{
    const RunResult r = run(setup.scenario);
    std::ostringstream trace, metrics;
    write_trace_csv(trace, r.trace);
    write_metrics(metrics, r.metrics);
    files.add("trace.csv", trace.str());
    files.add("metrics.txt", metrics.str());
    out << "steady_tracking_error=" << number(r.metrics.steady_tracking_error) << " convergence_time="
        << (r.metrics.convergence_time ? number(*r.metrics.convergence_time) : std::string("none"))
        << " max_torque=" << number(r.metrics.max_torque) << '\n';
}

std::vector<std::string> gain_names()
{
    return {ControllerGains::kNames.begin(), ControllerGains::kNames.end()};
}

ControllerGains gains_of(const Candidate& c)
{
    std::array<double, ControllerGains::kCount> a{};
    std::copy_n(c.begin(), a.size(), a.begin());
    return ControllerGains::from_array(a);
}

void tune_outputs(const RunSetup& setup, Outputs& files, std::ostream& out)
{
    const TunerConfig& cfg = setup.tuner;
    ControllerGains best;
    double best_cost = 0.0;
    std::ostringstream history;
    if (setup.objective == TunerObjective::Sphere) {
        JayaOptions o;
        o.population = cfg.population;
        o.iterations = cfg.iterations;
        o.seed = cfg.seed;
        o.bounds = cfg.gain_bounds.box();
        const auto g = setup.scenario.gains.to_array();
        o.initial = {Candidate(g.begin(), g.end())};
        const JayaResult r = jaya_minimize([](const Candidate& c) { return sphere_cost(c); }, ControllerGains::kCount, o);
        best = gains_of(r.best);
        best_cost = r.best_cost;
        write_cost_history(history, r.history, gain_names());
    } else if (cfg.mode == TunerMode::Episodic) {
        const EpisodicResult r = tune_episodic(setup.scenario, cfg);
        best = r.best;
        best_cost = r.best_cost;
        write_cost_history(history, r.history, gain_names());
    } else {
        const OnlineResult r = tune_online(setup.scenario, cfg);
        best = r.best;
        best_cost = r.best_cost;
        write_cost_history(history, r.history, gain_names());
        std::ostringstream trace, slots, metrics;
        write_trace_csv(trace, r.run.trace);
        write_gain_trace(slots, r.slots);
        write_metrics(metrics, r.run.metrics);
        files.add("trace.csv", trace.str());
        files.add("gain_trace.csv", slots.str());
        files.add("metrics.txt", metrics.str());
    }
    if (!std::isfinite(best_cost))
        throw Infeasible("tuning failed: every candidate was infeasible (diverged or singular)");
    files.add("best_gains.yaml", emit_gains(best));
    files.add("cost_history.csv", history.str());
    out << "best_cost=" << number(best_cost);
    const auto values = best.to_array();
    for (std::size_t i = 0; i < values.size(); ++i)
        out << ' ' << ControllerGains::kNames[i] << '=' << number(values[i]);
    out << '\n';
}

void sweep_outputs(const Job& job, Outputs& files, std::ostream& out)
{
    const bool regimes = job.preset == "table1-sbfc";
    std::ostringstream summary;
    summary << "cell";
    for (const auto& axis : job.grid)
        summary << ',' << axis.key;
    summary << ",regime,faulty_joints,start,end,steady_error,peak_error,convergence_time,max_torque,envelope_alpha,"
               "final_q,final_qd,status,message\n";

    // No axes means no cells, except for the regime preset, which always runs its base scenario.
    std::size_t cells = job.grid.empty() ? (regimes ? 1 : 0) : 1;
    for (const auto& axis : job.grid)
        cells *= axis.values.size();

    std::size_t failures = 0;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::vector<Override> overrides;
        std::vector<std::string> values;
        std::size_t rest = cell;
        for (std::size_t a = job.grid.size(); a-- > 0;) {
            const auto& axis = job.grid[a];
            const std::string& v = axis.values[rest % axis.values.size()];
            rest /= axis.values.size();
            overrides.insert(overrides.begin(), {axis.key, v});
            values.insert(values.begin(), v);
        }
        std::string prefix = std::to_string(cell);
        for (const auto& v : values)
            prefix += "," + csv_quote(v);

        auto fail = [&](const std::string& status, const std::string& message) {
            ++failures;
            summary << prefix << ",,,,,,,,,,,," << status << ',' << csv_quote(message) << '\n';
        };
        RunSetup setup;
        try {
            setup = parse_setup(job.scenario, overrides);
        } catch (const Error& e) {
            fail("config_error", e.what());
            continue;
        }
        RunResult r;
        try {
            r = run(setup.scenario);
        } catch (const NumericalDivergence& e) {
            fail("diverged", e.what());
            continue;
        } catch (const Error& e) {
            fail("error", e.what());
            continue;
        }
        std::ostringstream trace;
        write_trace_csv(trace, r.trace);
        files.add("trace_cell" + std::to_string(cell) + ".csv", trace.str());

        const Scenario& sc = setup.scenario;
        const auto segments = fault_regimes(sc.schedule, sc.duration);
        const std::string tail = "," + number(r.metrics.envelope.alpha) + "," + vector_text(r.final_state.q) + "," +
                                 vector_text(r.final_state.qd) + ",ok,\n";
        auto conv = [](const std::optional<double>& v) { return v ? number(*v) : std::string("none"); };
        if (regimes) {
            for (const FaultRegime& seg : segments) {
                const RegimeMetrics m = evaluate_regime(r.series, seg.start, seg.end, sc.convergence_band);
                summary << prefix << ',' << regime_label(seg.faulty_joints) << ',' << seg.faulty_joints << ','
                        << number(seg.start) << ',' << number(seg.end) << ',' << number(m.steady_error) << ','
                        << number(m.peak_error) << ',' << conv(m.convergence_time) << ',' << number(m.max_torque)
                        << tail;
            }
        } else {
            const RunMetrics& m = r.metrics;
            double peak = 0.0;
            for (const auto& reg : m.regimes)
                peak = std::max(peak, reg.peak_error);
            summary << prefix << ",run," << segments.back().faulty_joints << ",0," << number(sc.duration) << ','
                    << number(m.steady_tracking_error) << ',' << number(peak) << ',' << conv(m.convergence_time)
                    << ',' << number(m.max_torque) << tail;
        }
    }
    files.add("summary.csv", summary.str());
    out << "cells=" << cells << " failed=" << failures << '\n';
}

void metrics_outputs(const Job& job, const RunSetup& setup, Outputs& files, std::ostream& out)
{
    std::istringstream in(read_file(job.trace_path));
    const CsvTable table = read_csv(in);
    const RunSeries series = series_from_trace(table);
    if (series.t.empty())
        throw ValidationError("trace " + job.trace_path + " has no records");
    const RunMetrics m = compute_metrics(series, metrics_options(setup.scenario));
    std::ostringstream text;
    write_metrics(text, m);
    files.add("metrics.txt", text.str());
    out << "steady_tracking_error=" << number(m.steady_tracking_error) << '\n';
}

json manifest_of(const Job& job, const RunSetup& setup, const Outputs& files)
{
    json m;
    m["tool"] = "sbfc";
    m["version"] = SBFC_VERSION;
    m["command"] = job.command;
    m["preset"] = job.preset;
    m["scenario"] = job.scenario;
    m["scenario_hash"] = content_hash(job.scenario);
    m["seed"] = setup.scenario.seed;
    m["tuner_seed"] = setup.tuner.seed;
    json grid = json::array();
    for (const auto& axis : job.grid)
        grid.push_back({{"key", axis.key}, {"values", axis.values}});
    m["grid"] = grid;
    if (!job.trace_path.empty())
        m["input_trace"] = {{"path", job.trace_path}, {"hash", job.trace_hash}};
    m["limits"] = {{"upper", setup.scenario.limits.upper}, {"lower", setup.scenario.limits.lower}};
    m["fault_onsets"] = setup.scenario.schedule.onsets();
    json outputs = json::object();
    for (const auto& [name, content] : files.files())
        outputs[name] = content_hash(content);
    m["outputs"] = outputs;
    m["build"] = {{"compiler", __VERSION__},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)}};
    return m;
}

// Runs the job and returns its files, manifest last.
Outputs execute(const Job& job, std::ostream& out)
{
    const RunSetup setup = parse_setup(job.scenario);
    Outputs files;
    if (job.command == "simulate")
        simulate_outputs(setup, files, out);
    else if (job.command == "tune")
        tune_outputs(setup, files, out);
    else if (job.command == "sweep")
        sweep_outputs(job, files, out);
    else
        metrics_outputs(job, setup, files, out);
    files.add("scenario.yaml", job.scenario);
    const json manifest = manifest_of(job, setup, files);
    files.add("manifest.json", manifest.dump(2) + "\n");
    return files;
}

Job job_from_manifest(const std::string& path)
{
    json m;
    try {
        m = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError("", 0, "manifest " + path + " is not valid JSON: " + e.what());
    }
    Job job;
    try {
        job.command = m.at("command").get<std::string>();
        job.preset = m.at("preset").get<std::string>();
        job.scenario = m.at("scenario").get<std::string>();
        for (const auto& axis : m.at("grid"))
            job.grid.push_back({axis.at("key").get<std::string>(), axis.at("values").get<std::vector<std::string>>()});
        if (m.contains("input_trace")) {
            job.trace_path = m["input_trace"].at("path").get<std::string>();
            job.trace_hash = m["input_trace"].at("hash").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ParseError("", 0, "manifest " + path + " is incomplete: " + e.what());
    }
    return job;
}

struct CommonFlags {
    std::string scenario;
    std::string preset;
    std::string out_dir = "out";
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_preset = true)
{
    cmd->add_option("--scenario", f.scenario, "YAML scenario file")->check(CLI::ExistingFile);
    if (with_preset)
        cmd->add_option("--preset", f.preset, "Built-in scenario: healthy, two-fault, table1-sbfc");
    cmd->add_option("--out", f.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--set", f.sets, "Override, e.g. gains.delta1=62 or faults[0].gamma=0.5 (repeatable)");
    cmd->add_option("--seed", f.seed, "Seed for sim.seed and tuner.seed");
}

std::string resolve(const CommonFlags& f)
{
    std::vector<Override> overrides;
    for (const auto& s : f.sets)
        overrides.push_back(parse_override(s));
    if (f.seed) {
        overrides.push_back({"sim.seed", std::to_string(*f.seed)});
        overrides.push_back({"tuner.seed", std::to_string(*f.seed)});
    }
    const std::string text = f.scenario.empty() ? std::string() : read_file(f.scenario);
    return emit_setup(parse_setup(text, overrides, f.preset));
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Fault-tolerant manipulator control simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SBFC_VERSION);

    CommonFlags flags;
    std::vector<std::string> grid;
    std::string trace_path;
    std::string manifest_path;
    std::string replay_out = "replay";

    CLI::App* simulate = app.add_subcommand("simulate", "Run one closed-loop simulation");
    add_common(simulate, flags);
    CLI::App* tune = app.add_subcommand("tune", "Tune controller gains with JAYA");
    add_common(tune, flags);
    CLI::App* sweep = app.add_subcommand("sweep", "Run a grid of scenarios and tabulate metrics");
    add_common(sweep, flags);
    sweep->add_option("--grid", grid, "Axis key=v1,v2,... (repeatable; cells are the cartesian product)");
    CLI::App* metrics = app.add_subcommand("metrics", "Recompute metrics from a trace CSV");
    add_common(metrics, flags);
    metrics->add_option("--trace", trace_path, "Trace CSV")->required();
    CLI::App* replay = app.add_subcommand("replay", "Re-run a manifest and compare every output");
    replay->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);
    replay->add_option("--out", replay_out, "Output directory for the re-run")->capture_default_str();

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        const int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (replay->parsed()) {
        const Job job = job_from_manifest(manifest_path);
        if (!job.trace_hash.empty() && content_hash(read_file(job.trace_path)) != job.trace_hash)
            throw Mismatch("input trace " + job.trace_path + " changed since the manifest was written");
        const Outputs files = execute(job, out);
        const json recorded = json::parse(read_file(manifest_path)).at("outputs");
        std::vector<std::string> differing;
        for (const auto& [name, content] : files.files()) {
            if (name == "manifest.json")
                continue;
            if (!recorded.contains(name) || recorded[name].get<std::string>() != content_hash(content))
                differing.push_back(name);
        }
        for (const auto& item : recorded.items())
            if (std::none_of(files.files().begin(), files.files().end(),
                             [&](const auto& f) { return f.first == item.key(); }))
                differing.push_back(item.key());
        files.commit(replay_out);
        if (!differing.empty()) {
            std::string list;
            for (const auto& d : differing)
                list += " " + d;
            throw Mismatch("replay differs in:" + list);
        }
        out << "replay matches " << recorded.size() << " outputs\n";
        return kExitOk;
    }

    Job job;
    job.command = app.get_subcommands().front()->get_name();
    job.preset = flags.preset;
    job.scenario = resolve(flags);
    for (const auto& g : grid)
        job.grid.push_back(parse_grid(g));
    if (!trace_path.empty()) {
        job.trace_path = fs::absolute(trace_path).lexically_normal().string();
        job.trace_hash = content_hash(read_file(job.trace_path));
    }
    const Outputs files = execute(job, out);
    files.commit(flags.out_dir);
    out << "wrote " << files.files().size() << " files to " << flags.out_dir << '\n';
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    try {
        return dispatch(args, out, err);
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ValidationError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ScheduleConflict& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DimensionMismatch& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalDivergence& e) {
        err << "numerical divergence: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const SingularInertia& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Infeasible& e) {
        err << e.what() << '\n';
        return kExitNumerical;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Mismatch& e) {
        err << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace sbfc::cli
