#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "sbfc/config.hpp"
#include "sbfc/errors.hpp"
#include "support.hpp"

using namespace sbfc;

namespace {

std::vector<double> draws(std::mt19937_64& rng, std::size_t n, double lo, double hi)
{
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (double& x : v)
        x = d(rng);
    return v;
}

RunSetup random_setup(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, 2);
    RunSetup s;
    Scenario& sc = s.scenario;
    const std::size_t n = u(rng) < 0.7 ? 2 : 3;

    sc.params.link_lengths = draws(rng, n, 0.3, 1.5);
    sc.params.link_masses = draws(rng, n, 0.2, 3.0);
    sc.params.link_inertias = draws(rng, n, 0.01, 0.3);
    sc.params.com_offsets.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        sc.params.com_offsets[i] = sc.params.link_lengths[i] * (0.1 + 0.8 * u(rng));
    sc.params.viscous_friction = draws(rng, n, 0.0, 0.5);
    sc.params.gravity = 9.0 + u(rng);

    sc.limits.upper = draws(rng, n, 10.0, 100.0);
    sc.limits.lower = draws(rng, n, -100.0, -10.0);

    std::vector<FaultEvent> events;
    const int count = pick(rng);
    for (int k = 0; k < count; ++k) {
        FaultEvent e;
        e.joint = static_cast<std::size_t>(k) % n;
        e.kind = u(rng) < 0.5 ? FaultKind::LossIncipient : FaultKind::LossAbrupt;
        e.onset = 1.0 + k + u(rng);
        e.gamma = 0.1 + 10.0 * u(rng);
        e.stuck_torque = -5.0 + 10.0 * u(rng);
        if (u(rng) < 0.5)
            e.loss_cap = 0.1 + 0.8 * u(rng);
        events.push_back(e);
    }
    if (u(rng) < 0.3)
        events.push_back({0, FaultKind::Stuck, 25.0, 50.0, 7.5, std::nullopt});
    sc.schedule = FaultSchedule(events);

    const auto g = draws(rng, 8, 0.05, 9.0);
    sc.gains = ControllerGains::from_array({g[0], g[1], g[2], g[3], g[4], g[5], g[6], g[7]});
    sc.initial_adaptive.phi1_hat = 0.001 + u(rng);
    sc.initial_adaptive.phi2_hat = 0.001 + u(rng);

    switch (pick(rng)) {
    case 0:
        sc.trajectory = SinusoidTrajectory{draws(rng, n, 0.1, 1.0), draws(rng, n, 0.05, 2.0),
                                           draws(rng, n, -1.0, 1.0), draws(rng, n, -1.0, 1.0)};
        break;
    case 1:
        sc.trajectory = ConstantTrajectory{draws(rng, n, -1.0, 1.0)};
        break;
    default:
        sc.trajectory = PolynomialTrajectory{draws(rng, n, -1.0, 1.0), draws(rng, n, -1.0, 1.0), 0.5 + u(rng)};
        break;
    }
    sc.disturbance.kind = n == 2 && u(rng) < 0.5 ? DisturbanceKind::Benchmark : DisturbanceKind::Zero;
    sc.duration = 1.0 + 30.0 * u(rng);
    sc.dt = 1e-4 * (0.5 + u(rng));
    sc.substeps = 1 + static_cast<std::size_t>(pick(rng));
    sc.decimation = 1 + static_cast<std::size_t>(pick(rng)) * 5;
    sc.initial_offset = draws(rng, n, -0.2, 0.2);
    if (u(rng) < 0.3)
        sc.initial_q = draws(rng, n, -1.0, 1.0);
    if (u(rng) < 0.3)
        sc.initial_qd = draws(rng, n, -1.0, 1.0);
    if (u(rng) < 0.3)
        sc.i_min = 0.1 + u(rng);
    sc.convergence_band = 0.001 + 0.01 * u(rng);
    sc.cost_window = 0.05 + u(rng);
    sc.envelope_window = 0.5 + u(rng);
    sc.seed = rng();

    TunerConfig& t = s.tuner;
    t.mode = u(rng) < 0.5 ? TunerMode::Episodic : TunerMode::Online;
    t.population = 2 + static_cast<std::size_t>(pick(rng));
    t.iterations = static_cast<std::size_t>(pick(rng)) * 17;
    t.horizon = 0.5 + 5.0 * u(rng);
    t.switch_period = u(rng) < 0.2 ? std::numeric_limits<double>::infinity() : 1e-3 + u(rng);
    t.seed = rng();
    t.gain_bounds.lower = ControllerGains::from_array({0.02, 0.02, 0.5, 0.5, 0.02, 0.02, 0.02, 0.02});
    t.gain_bounds.upper.delta1 = 150.0 + u(rng);
    s.objective = u(rng) < 0.2 ? TunerObjective::Sphere : TunerObjective::Simulation;
    return s;
}

} // namespace

TEST_CASE("empty document gives the defaults")
{
    CHECK(parse_setup("") == RunSetup{});
    CHECK(parse_setup("{}") == RunSetup{});
    CHECK(parse_setup("# nothing here\n") == RunSetup{});
}

TEST_CASE("document fields")
{
    const std::string text = R"(
gains:
  delta1: 70
faults:
  - joint: 2
    kind: loss_abrupt
    onset: 3.5
    stuck_torque: 12
sim:
  duration: 2
  i_min: 0.4
trajectory:
  kind: constant
  position: [0.1, 0.2]
tuner:
  mode: online
  switch_period_s: 0.01
)";
    const RunSetup s = parse_setup(text);
    CHECK(s.scenario.gains.delta1 == 70.0);
    CHECK(s.scenario.gains.delta2 == ControllerGains{}.delta2);
    REQUIRE(s.scenario.schedule.events().size() == 1);
    const FaultEvent& e = s.scenario.schedule.events().front();
    CHECK(e.joint == 1); // numbered from 1 in the file
    CHECK(e.kind == FaultKind::LossAbrupt);
    CHECK(e.gamma == default_gamma(FaultKind::LossAbrupt));
    CHECK(e.stuck_torque == 12.0);
    CHECK(s.scenario.duration == 2.0);
    CHECK(s.scenario.i_min == 0.4);
    CHECK(std::holds_alternative<ConstantTrajectory>(s.scenario.trajectory));
    CHECK(s.tuner.mode == TunerMode::Online);
}

TEST_CASE("overrides")
{
    CHECK(parse_setup("", {{"gains.delta1", "62"}}).scenario.gains.delta1 == 62.0);
    CHECK(parse_setup("gains: {delta1: 10}", {{"gains.delta1", "70"}}).scenario.gains.delta1 == 70.0);

    const auto o = parse_override("sim.dt=5e-5");
    CHECK(o.key == "sim.dt");
    CHECK(o.value == "5e-5");
    CHECK_THROWS_AS((void)parse_override("sim.dt"), ParseError);

    SUBCASE("list entries")
    {
        const auto s = parse_setup("", {{"faults[0].gamma", "2"}}, "two-fault");
        CHECK(s.scenario.schedule.events()[0].gamma == 2.0);
        const auto appended =
            parse_setup("", {{"faults[3]", "{joint: 2, kind: stuck, onset: 25, stuck_torque: 4}"}}, "two-fault");
        CHECK(appended.scenario.schedule.events().size() == 4);
        CHECK_THROWS_AS((void)parse_setup("", {{"faults[5].gamma", "1"}}, "two-fault"), ParseError);
        CHECK(parse_setup("", {{"limits.upper[1]", "60"}}).scenario.limits.upper[1] == 60.0);
    }
    SUBCASE("invalid values")
    {
        try {
            (void)parse_setup("", {{"faults[0].gamma", "-1"}}, "two-fault");
            FAIL("expected a validation error");
        } catch (const ValidationError& e) {
            const std::string what = e.what();
            CHECK(what.find("gamma") != std::string::npos);
            CHECK(what.find("> 0") != std::string::npos);
        }
        CHECK_THROWS_AS((void)parse_setup("", {{"sim.dt", "fast"}}), ParseError);
        CHECK_THROWS_AS((void)parse_setup("", {{"gains.delta3", "1"}}), ParseError);
    }
    SUBCASE("null clears an optional")
    {
        CHECK_FALSE(parse_setup("sim: {i_min: 0.5}", {{"sim.i_min", "null"}}).scenario.i_min.has_value());
    }
    SUBCASE("switching trajectory kind resets the block")
    {
        const auto s = parse_setup("", {{"trajectory.kind", "constant"}, {"trajectory.position", "[0, 0]"}});
        CHECK(std::get<ConstantTrajectory>(s.scenario.trajectory).position == std::vector<double>{0.0, 0.0});
    }
}

TEST_CASE("presets")
{
    CHECK(preset("healthy") == RunSetup{});
    CHECK(preset("two-fault").scenario.schedule == Scenario::two_fault_schedule());
    CHECK(preset("table1-sbfc").scenario.schedule == Scenario::two_fault_schedule());
    CHECK_THROWS_AS((void)preset("nope"), ValidationError);
    CHECK(parse_setup("", {}, "two-fault") == preset("two-fault"));
    // a document replaces the preset's list
    CHECK(parse_setup("faults: []", {}, "two-fault").scenario.schedule.empty());
}

TEST_CASE("parse errors carry key and line")
{
    try {
        (void)parse_setup("sim:\n  duration: 3\n  durration: 4\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.key() == "sim.durration");
        CHECK(e.line() == 3);
    }
    try {
        (void)parse_setup("gains:\n  k1: 1\n  k2: abc\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.key() == "gains.k2");
        CHECK(e.line() == 3);
    }
    try {
        (void)parse_setup("plant: [1, 2\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() > 0);
    }
    CHECK_THROWS_AS((void)parse_setup("bogus: 1"), ParseError);
    CHECK_THROWS_AS((void)parse_setup("- 1\n- 2\n"), ParseError);
    CHECK_THROWS_AS((void)parse_setup("tuner: {population: -2}"), ParseError);
    CHECK_THROWS_AS((void)parse_setup("faults: [{joint: 0, onset: 1}]"), ValidationError);
    CHECK_THROWS_AS((void)parse_setup("faults: [{joint: 1, onset: 1}, {joint: 1, onset: 1}]"), ScheduleConflict);
    CHECK_THROWS_AS((void)parse_setup("trajectory: {kind: spiral}"), ParseError);
}

TEST_CASE("round trip")
{
    CHECK(parse_setup(emit_setup(RunSetup{})) == RunSetup{});
    for (const auto& name : preset_names())
        CHECK(parse_setup(emit_setup(preset(name))) == preset(name));

    std::mt19937_64 rng(2024);
    for (int k = 0; k < 300; ++k) {
        const RunSetup s = random_setup(rng);
        REQUIRE_NOTHROW(s.scenario.validate());
        const std::string text = emit_setup(s);
        const RunSetup back = parse_setup(text);
        REQUIRE(back == s);
        REQUIRE(emit_setup(back) == text);
    }
}

TEST_CASE("gains block")
{
    ControllerGains g{0.123456789012345, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.5};
    CHECK(parse_setup(emit_gains(g)).scenario.gains == g);
}

TEST_CASE("files")
{
    testing::TempDir dir("config");
    const std::string path = dir.str("s.yaml");
    std::ofstream(path) << "sim:\n  duration: 4\n";
    CHECK(load_setup(path).scenario.duration == 4.0);
    CHECK_THROWS_AS((void)load_setup(dir.str("missing.yaml")), IoError);
}
