#include "sbfc/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "sbfc/errors.hpp"

namespace sbfc {

namespace {

int line_of(const YAML::Node& node)
{
    if (!node.IsDefined())
        return 0;
    const YAML::Mark mark = node.Mark();
    return mark.is_null() ? 0 : mark.line + 1;
}

// ---- reading -------------------------------------------------------------

double to_double(const YAML::Node& node, const std::string& key)
{
    if (!node.IsScalar())
        throw ParseError(key, line_of(node), "expected a number");
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        throw ParseError(key, line_of(node), "expected a number, got '" + node.Scalar() + "'");
    }
}

long long to_integer(const YAML::Node& node, const std::string& key)
{
    if (!node.IsScalar())
        throw ParseError(key, line_of(node), "expected an integer");
    const std::string& s = node.Scalar();
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(key, line_of(node), "expected an integer, got '" + s + "'");
    return v;
}

std::size_t to_count(const YAML::Node& node, const std::string& key)
{
    const long long v = to_integer(node, key);
    if (v < 0)
        throw ParseError(key, line_of(node), "must not be negative");
    return static_cast<std::size_t>(v);
}

std::string to_text(const YAML::Node& node, const std::string& key)
{
    if (!node.IsScalar())
        throw ParseError(key, line_of(node), "expected a string");
    return node.Scalar();
}

std::vector<double> to_doubles(const YAML::Node& node, const std::string& key)
{
    if (!node.IsSequence())
        throw ParseError(key, line_of(node), "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i)
        out.push_back(to_double(node[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

// Strict view over one mapping: every key must be consumed before finish().
class Section {
public:
    Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path))
    {
        if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap())
            throw ParseError(path_, line_of(node_), "expected a mapping");
    }

    [[nodiscard]] std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

    // Present and not null.
    std::optional<YAML::Node> find(const std::string& name)
    {
        seen_.insert(name);
        if (!node_.IsMap())
            return std::nullopt;
        const YAML::Node& view = node_;
        YAML::Node child = view[name];
        if (!child.IsDefined() || child.IsNull())
            return std::nullopt;
        return child;
    }

    void number(const std::string& name, double& out)
    {
        if (const auto n = find(name))
            out = to_double(*n, key(name));
    }

    void numbers(const std::string& name, std::vector<double>& out)
    {
        if (const auto n = find(name))
            out = to_doubles(*n, key(name));
    }

    void count(const std::string& name, std::size_t& out)
    {
        if (const auto n = find(name))
            out = to_count(*n, key(name));
    }

    void seed(const std::string& name, std::uint64_t& out)
    {
        if (const auto n = find(name)) {
            const std::string s = to_text(*n, key(name));
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            if (ec != std::errc() || ptr != s.data() + s.size())
                throw ParseError(key(name), line_of(*n), "expected a non-negative integer, got '" + s + "'");
        }
    }

    // Explicit null clears an optional.
    void optional_number(const std::string& name, std::optional<double>& out)
    {
        seen_.insert(name);
        const YAML::Node& view = node_;
        if (!node_.IsMap() || !view[name].IsDefined())
            return;
        const YAML::Node n = view[name];
        out = n.IsNull() ? std::nullopt : std::optional<double>(to_double(n, key(name)));
    }

    void optional_numbers(const std::string& name, std::optional<std::vector<double>>& out)
    {
        seen_.insert(name);
        const YAML::Node& view = node_;
        if (!node_.IsMap() || !view[name].IsDefined())
            return;
        const YAML::Node n = view[name];
        out = n.IsNull() ? std::nullopt : std::optional<std::vector<double>>(to_doubles(n, key(name)));
    }

    void finish() const
    {
        if (!node_.IsMap())
            return;
        for (const auto& kv : node_) {
            const std::string name = kv.first.Scalar();
            if (!seen_.count(name))
            {
                // merged keys are fresh nodes; the value still carries its source line
                const int line = line_of(kv.first);
                throw ParseError(key(name), line != 0 ? line : line_of(kv.second), "unknown key");
            }
        }
    }

private:
    YAML::Node node_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_gains(Section s, ControllerGains& g)
{
    auto values = g.to_array();
    for (std::size_t i = 0; i < values.size(); ++i)
        s.number(std::string(ControllerGains::kNames[i]), values[i]);
    s.finish();
    g = ControllerGains::from_array(values);
}

void read_plant(Section s, ManipulatorParams& p)
{
    s.numbers("link_lengths", p.link_lengths);
    s.numbers("link_masses", p.link_masses);
    s.numbers("link_inertias", p.link_inertias);
    s.numbers("com_offsets", p.com_offsets);
    s.numbers("viscous_friction", p.viscous_friction);
    s.number("gravity", p.gravity);
    s.finish();
}

void read_limits(Section s, TorqueLimits& l)
{
    s.numbers("upper", l.upper);
    s.numbers("lower", l.lower);
    s.finish();
}

FaultSchedule read_faults(const YAML::Node& node)
{
    if (!node.IsSequence())
        throw ParseError("faults", line_of(node), "expected a list of fault events");
    std::vector<FaultEvent> events;
    for (std::size_t i = 0; i < node.size(); ++i) {
        const std::string path = "faults[" + std::to_string(i) + "]";
        Section s(node[i], path);
        FaultEvent e;
        const auto joint = s.find("joint");
        if (!joint)
            throw ParseError(s.key("joint"), line_of(node[i]), "required");
        const long long j = to_integer(*joint, s.key("joint"));
        if (j < 1)
            throw ValidationError(s.key("joint") + " must be >= 1 (joints are numbered from 1)");
        e.joint = static_cast<std::size_t>(j - 1);
        if (const auto kind = s.find("kind")) {
            try {
                e.kind = fault_kind_from_string(to_text(*kind, s.key("kind")));
            } catch (const ValidationError& err) {
                throw ParseError(s.key("kind"), line_of(*kind), err.what());
            }
        }
        e.gamma = default_gamma(e.kind);
        s.number("onset", e.onset);
        s.number("gamma", e.gamma);
        s.number("stuck_torque", e.stuck_torque);
        s.optional_number("loss_cap", e.loss_cap);
        s.finish();
        try {
            e.validate();
        } catch (const ValidationError& err) {
            throw ValidationError(path + ": " + err.what());
        }
        events.push_back(e);
    }
    return FaultSchedule(std::move(events));
}

TrajectorySpec read_trajectory(Section s, const TrajectorySpec& current)
{
    std::string kind = "sinusoid";
    if (std::holds_alternative<ConstantTrajectory>(current))
        kind = "constant";
    else if (std::holds_alternative<PolynomialTrajectory>(current))
        kind = "polynomial";
    const auto k = s.find("kind");
    if (k)
        kind = to_text(*k, s.key("kind"));

    TrajectorySpec out;
    if (kind == "sinusoid") {
        SinusoidTrajectory t = std::holds_alternative<SinusoidTrajectory>(current) ? std::get<SinusoidTrajectory>(current)
                                                                                  : SinusoidTrajectory::benchmark();
        s.numbers("amplitude", t.amplitude);
        s.numbers("frequency", t.frequency);
        s.numbers("phase", t.phase);
        s.numbers("offset", t.offset);
        out = t;
    } else if (kind == "constant") {
        ConstantTrajectory t = std::holds_alternative<ConstantTrajectory>(current) ? std::get<ConstantTrajectory>(current)
                                                                                  : ConstantTrajectory{};
        s.numbers("position", t.position);
        out = t;
    } else if (kind == "polynomial") {
        PolynomialTrajectory t = std::holds_alternative<PolynomialTrajectory>(current)
                                     ? std::get<PolynomialTrajectory>(current)
                                     : PolynomialTrajectory{};
        s.numbers("start", t.start);
        s.numbers("goal", t.goal);
        s.number("duration", t.duration);
        out = t;
    } else {
        throw ParseError(s.key("kind"), k ? line_of(*k) : 0, "expected sinusoid, constant or polynomial, got '" + kind + "'");
    }
    s.finish();
    return out;
}

void read_disturbance(Section s, DisturbanceSpec& d)
{
    if (const auto k = s.find("kind")) {
        const std::string kind = to_text(*k, s.key("kind"));
        if (kind == "benchmark")
            d.kind = DisturbanceKind::Benchmark;
        else if (kind == "zero")
            d.kind = DisturbanceKind::Zero;
        else
            throw ParseError(s.key("kind"), line_of(*k), "expected benchmark or zero, got '" + kind + "'");
    }
    s.finish();
}

void read_sim(Section s, Scenario& sc)
{
    s.number("duration", sc.duration);
    s.number("dt", sc.dt);
    s.count("substeps", sc.substeps);
    s.count("decimation", sc.decimation);
    s.numbers("initial_offset", sc.initial_offset);
    s.optional_numbers("initial_q", sc.initial_q);
    s.optional_numbers("initial_qd", sc.initial_qd);
    s.optional_number("i_min", sc.i_min);
    s.number("convergence_band", sc.convergence_band);
    s.number("cost_window", sc.cost_window);
    s.number("envelope_window", sc.envelope_window);
    s.seed("seed", sc.seed);
    s.number("phi1_init", sc.initial_adaptive.phi1_hat);
    s.number("phi2_init", sc.initial_adaptive.phi2_hat);
    s.finish();
}

void read_tuner(Section s, RunSetup& setup)
{
    TunerConfig& t = setup.tuner;
    if (const auto m = s.find("mode")) {
        try {
            t.mode = tuner_mode_from_string(to_text(*m, s.key("mode")));
        } catch (const ValidationError& err) {
            throw ParseError(s.key("mode"), line_of(*m), err.what());
        }
    }
    if (const auto o = s.find("objective")) {
        const std::string v = to_text(*o, s.key("objective"));
        if (v == "simulation")
            setup.objective = TunerObjective::Simulation;
        else if (v == "sphere")
            setup.objective = TunerObjective::Sphere;
        else
            throw ParseError(s.key("objective"), line_of(*o), "expected simulation or sphere, got '" + v + "'");
    }
    s.count("population", t.population);
    s.count("iterations", t.iterations);
    s.number("horizon_s", t.horizon);
    s.number("switch_period_s", t.switch_period);
    s.seed("seed", t.seed);
    if (const auto b = s.find("gain_bounds")) {
        Section bounds(*b, s.key("gain_bounds"));
        if (const auto lo = bounds.find("lower"))
            read_gains(Section(*lo, bounds.key("lower")), t.gain_bounds.lower);
        if (const auto hi = bounds.find("upper"))
            read_gains(Section(*hi, bounds.key("upper")), t.gain_bounds.upper);
        bounds.finish();
    }
    s.finish();
}

RunSetup from_node(const YAML::Node& root)
{
    RunSetup setup;
    Scenario& sc = setup.scenario;
    Section top(root, "");
    if (const auto n = top.find("plant"))
        read_plant(Section(*n, "plant"), sc.params);
    if (const auto n = top.find("limits"))
        read_limits(Section(*n, "limits"), sc.limits);
    if (const auto n = top.find("faults"))
        sc.schedule = read_faults(*n);
    if (const auto n = top.find("gains"))
        read_gains(Section(*n, "gains"), sc.gains);
    if (const auto n = top.find("trajectory"))
        sc.trajectory = read_trajectory(Section(*n, "trajectory"), sc.trajectory);
    if (const auto n = top.find("disturbance"))
        read_disturbance(Section(*n, "disturbance"), sc.disturbance);
    if (const auto n = top.find("sim"))
        read_sim(Section(*n, "sim"), sc);
    if (const auto n = top.find("tuner"))
        read_tuner(Section(*n, "tuner"), setup);
    top.finish();
    return setup;
}

// ---- writing -------------------------------------------------------------

// Shortest text that reads back to the same double.
std::string format_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? ".inf" : "-.inf";
    if (std::isnan(v))
        return ".nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

YAML::Node scalar(double v)
{
    return YAML::Node(format_double(v));
}

YAML::Node flow(const std::vector<double>& values)
{
    YAML::Node seq(YAML::NodeType::Sequence);
    for (double v : values)
        seq.push_back(scalar(v));
    seq.SetStyle(YAML::EmitterStyle::Flow);
    return seq;
}

YAML::Node gains_node(const ControllerGains& g)
{
    YAML::Node n(YAML::NodeType::Map);
    const auto values = g.to_array();
    for (std::size_t i = 0; i < values.size(); ++i)
        n[std::string(ControllerGains::kNames[i])] = scalar(values[i]);
    return n;
}

YAML::Node trajectory_node(const TrajectorySpec& spec)
{
    YAML::Node n(YAML::NodeType::Map);
    if (const auto* s = std::get_if<SinusoidTrajectory>(&spec)) {
        n["kind"] = "sinusoid";
        n["amplitude"] = flow(s->amplitude);
        n["frequency"] = flow(s->frequency);
        n["phase"] = flow(s->phase);
        n["offset"] = flow(s->offset);
    } else if (const auto* c = std::get_if<ConstantTrajectory>(&spec)) {
        n["kind"] = "constant";
        n["position"] = flow(c->position);
    } else {
        const auto& p = std::get<PolynomialTrajectory>(spec);
        n["kind"] = "polynomial";
        n["start"] = flow(p.start);
        n["goal"] = flow(p.goal);
        n["duration"] = scalar(p.duration);
    }
    return n;
}

YAML::Node to_node(const RunSetup& setup)
{
    const Scenario& sc = setup.scenario;
    YAML::Node root(YAML::NodeType::Map);

    YAML::Node plant(YAML::NodeType::Map);
    plant["link_lengths"] = flow(sc.params.link_lengths);
    plant["link_masses"] = flow(sc.params.link_masses);
    plant["link_inertias"] = flow(sc.params.link_inertias);
    plant["com_offsets"] = flow(sc.params.com_offsets);
    plant["viscous_friction"] = flow(sc.params.viscous_friction);
    plant["gravity"] = scalar(sc.params.gravity);
    root["plant"] = plant;

    YAML::Node limits(YAML::NodeType::Map);
    limits["upper"] = flow(sc.limits.upper);
    limits["lower"] = flow(sc.limits.lower);
    root["limits"] = limits;

    YAML::Node faults(YAML::NodeType::Sequence);
    for (const FaultEvent& e : sc.schedule.events()) {
        YAML::Node f(YAML::NodeType::Map);
        f["joint"] = e.joint + 1;
        f["kind"] = std::string(to_string(e.kind));
        f["onset"] = scalar(e.onset);
        f["gamma"] = scalar(e.gamma);
        f["stuck_torque"] = scalar(e.stuck_torque);
        if (e.loss_cap)
            f["loss_cap"] = scalar(*e.loss_cap);
        faults.push_back(f);
    }
    root["faults"] = faults;

    root["gains"] = gains_node(sc.gains);
    root["trajectory"] = trajectory_node(sc.trajectory);

    YAML::Node dist(YAML::NodeType::Map);
    dist["kind"] = sc.disturbance.kind == DisturbanceKind::Benchmark ? "benchmark" : "zero";
    root["disturbance"] = dist;

    YAML::Node sim(YAML::NodeType::Map);
    sim["duration"] = scalar(sc.duration);
    sim["dt"] = scalar(sc.dt);
    sim["substeps"] = sc.substeps;
    sim["decimation"] = sc.decimation;
    sim["initial_offset"] = flow(sc.initial_offset);
    if (sc.initial_q)
        sim["initial_q"] = flow(*sc.initial_q);
    if (sc.initial_qd)
        sim["initial_qd"] = flow(*sc.initial_qd);
    if (sc.i_min)
        sim["i_min"] = scalar(*sc.i_min);
    sim["convergence_band"] = scalar(sc.convergence_band);
    sim["cost_window"] = scalar(sc.cost_window);
    sim["envelope_window"] = scalar(sc.envelope_window);
    sim["seed"] = sc.seed;
    sim["phi1_init"] = scalar(sc.initial_adaptive.phi1_hat);
    sim["phi2_init"] = scalar(sc.initial_adaptive.phi2_hat);
    root["sim"] = sim;

    const TunerConfig& t = setup.tuner;
    YAML::Node tuner(YAML::NodeType::Map);
    tuner["mode"] = to_string(t.mode);
    tuner["objective"] = setup.objective == TunerObjective::Sphere ? "sphere" : "simulation";
    tuner["population"] = t.population;
    tuner["iterations"] = t.iterations;
    tuner["horizon_s"] = scalar(t.horizon);
    tuner["switch_period_s"] = scalar(t.switch_period);
    tuner["seed"] = t.seed;
    YAML::Node bounds(YAML::NodeType::Map);
    bounds["lower"] = gains_node(t.gain_bounds.lower);
    bounds["upper"] = gains_node(t.gain_bounds.upper);
    tuner["gain_bounds"] = bounds;
    root["tuner"] = tuner;
    return root;
}

std::string emit(const YAML::Node& node)
{
    YAML::Emitter out;
    out << node;
    return std::string(out.c_str()) + "\n";
}

// ---- layering ------------------------------------------------------------

// Maps merge key by key; anything else replaces. A trajectory block always replaces,
// since its keys depend on its kind.
void merge(YAML::Node base, const YAML::Node& over, bool replace_children = false)
{
    for (const auto& kv : over) {
        const std::string key = kv.first.Scalar();
        const YAML::Node& view = base;
        const YAML::Node target = view[key];
        if (!replace_children && key != "trajectory" && kv.second.IsMap() && target.IsDefined() && target.IsMap())
            merge(target, kv.second);
        else
            base[key] = kv.second;
    }
}

struct PathPart {
    std::string key;
    std::optional<std::size_t> index;
};

std::vector<PathPart> split_path(const std::string& path)
{
    std::vector<PathPart> parts;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const std::size_t dot = path.find('.', pos);
        std::string token = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        std::optional<std::size_t> index;
        if (const std::size_t open = token.find('['); open != std::string::npos) {
            const std::size_t close = token.find(']', open);
            if (close == std::string::npos || close + 1 != token.size())
                throw ParseError(path, 0, "malformed index");
            const std::string digits = token.substr(open + 1, close - open - 1);
            std::size_t v = 0;
            const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
            if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size())
                throw ParseError(path, 0, "malformed index");
            index = v;
            token.resize(open);
        }
        if (token.empty())
            throw ParseError(path, 0, "empty key segment");
        parts.push_back({token, index});
        if (dot == std::string::npos)
            break;
        pos = dot + 1;
    }
    return parts;
}

void apply_override(YAML::Node root, const Override& o)
{
    const std::vector<PathPart> parts = split_path(o.key);
    YAML::Node value;
    try {
        value = YAML::Load(o.value);
    } catch (const YAML::Exception& e) {
        throw ParseError(o.key, 0, std::string("malformed value: ") + e.what());
    }

    // Switching the trajectory kind drops fields that belonged to the old kind.
    if (parts.size() == 2 && parts[0].key == "trajectory" && !parts[0].index && parts[1].key == "kind" &&
        !parts[1].index) {
        YAML::Node fresh(YAML::NodeType::Map);
        fresh["kind"] = value;
        root["trajectory"] = fresh;
        return;
    }

    YAML::Node cur = root;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const PathPart& part = parts[i];
        const bool last_key = i + 1 == parts.size() && !part.index;
        if (cur.IsDefined() && !cur.IsMap() && !cur.IsNull())
            throw ParseError(o.key, 0, "'" + part.key + "' is not inside a mapping");
        if (last_key) {
            cur[part.key] = value;
            return;
        }
        YAML::Node child = cur[part.key];
        cur.reset(child);
        if (part.index) {
            if (!cur.IsDefined() || cur.IsNull())
                cur = YAML::Node(YAML::NodeType::Sequence);
            if (!cur.IsSequence())
                throw ParseError(o.key, 0, "'" + part.key + "' is not a list");
            const std::size_t idx = *part.index;
            if (idx > cur.size())
                throw ParseError(o.key, 0, "index " + std::to_string(idx) + " is past the end of '" + part.key + "'");
            if (i + 1 == parts.size()) {
                if (idx == cur.size())
                    cur.push_back(value);
                else
                    cur[idx] = value;
                return;
            }
            if (idx == cur.size())
                cur.push_back(YAML::Node(YAML::NodeType::Map));
            YAML::Node element = cur[idx];
            cur.reset(element);
        }
    }
}

YAML::Node load_document(std::string_view text)
{
    YAML::Node doc;
    try {
        doc = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ParseError("", e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
    }
    if (doc.IsNull() || !doc.IsDefined())
        return YAML::Node(YAML::NodeType::Map);
    if (!doc.IsMap())
        throw ParseError("", line_of(doc), "top level must be a mapping");
    return doc;
}

RunSetup finish_setup(const YAML::Node& root)
{
    RunSetup setup = from_node(root);
    setup.scenario.validate();
    setup.tuner.validate();
    if (setup.tuner.mode == TunerMode::Online && setup.tuner.switch_period < setup.scenario.dt)
        throw ValidationError("tuner.switch_period_s must be >= sim.dt");
    return setup;
}

} // namespace

Override parse_override(const std::string& text)
{
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ParseError(text, 0, "override must look like key=value");
    return {text.substr(0, eq), text.substr(eq + 1)};
}

std::vector<std::string> preset_names()
{
    return {"healthy", "two-fault", "table1-sbfc"};
}

RunSetup preset(std::string_view name)
{
    RunSetup setup;
    if (name == "healthy")
        return setup;
    if (name == "two-fault" || name == "table1-sbfc") {
        setup.scenario.schedule = Scenario::two_fault_schedule();
        return setup;
    }
    std::string known;
    for (const auto& n : preset_names())
        known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

RunSetup parse_setup(std::string_view yaml_text, const std::vector<Override>& overrides, std::string_view preset_name)
{
    const YAML::Node doc = load_document(yaml_text);
    // Start from a complete tree so overrides can reach into default lists.
    YAML::Node root = to_node(preset_name.empty() ? RunSetup{} : preset(preset_name));
    merge(root, doc);
    for (const Override& o : overrides)
        apply_override(root, o);
    return finish_setup(root);
}

RunSetup load_setup(const std::string& path, const std::vector<Override>& overrides, std::string_view preset_name)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read scenario file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_setup(text.str(), overrides, preset_name);
}

std::string emit_setup(const RunSetup& setup)
{
    return emit(to_node(setup));
}

std::string emit_gains(const ControllerGains& gains)
{
    YAML::Node root(YAML::NodeType::Map);
    root["gains"] = gains_node(gains);
    return emit(root);
}

} // namespace sbfc
