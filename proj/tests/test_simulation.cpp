#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sbfc/errors.hpp"
#include "sbfc/simulation.hpp"
#include "support.hpp"

using namespace sbfc;
using testing::vec;

namespace {

Scenario short_scenario(double duration)
{
    Scenario s;
    s.duration = duration;
    return s;
}

double max_between(const RunSeries& s, double t0, double t1)
{
    double m = 0.0;
    for (std::size_t i = 0; i < s.t.size(); ++i)
        if (s.t[i] >= t0 && s.t[i] <= t1)
            m = std::max(m, s.e1_inf[i]);
    return m;
}

void check_torque_bounds(const Scenario& sc, const RunResult& r)
{
    for (const auto& rec : r.trace)
        for (Eigen::Index i = 0; i < rec.s_t.size(); ++i) {
            REQUIRE(rec.s_t(i) <= sc.limits.upper[static_cast<std::size_t>(i)]);
            REQUIRE(rec.s_t(i) >= sc.limits.lower[static_cast<std::size_t>(i)]);
        }
}

class FixedPolicy : public GainPolicy {
public:
    explicit FixedPolicy(ControllerGains g) : gains_(g) {}
    const ControllerGains& gains(std::size_t, double) override { return gains_; }
    void observe(std::size_t, double ebar) override
    {
        ++observed;
        last = ebar;
    }
    std::size_t observed = 0;
    double last = 0.0;

private:
    ControllerGains gains_;
};

} // namespace

TEST_CASE("scenario validation")
{
    CHECK_NOTHROW(Scenario{}.validate());
    Scenario s;
    s.dt = 0.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = Scenario{};
    s.duration = 1e-5;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = Scenario{};
    s.schedule = FaultSchedule({{2, FaultKind::LossIncipient, 1.0, 0.3, 0.0, std::nullopt}});
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = Scenario{};
    s.limits = TorqueLimits::symmetric(3, 80.0);
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = Scenario{};
    s.i_min = -1.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("initial state")
{
    Scenario s;
    const JointState x = s.initial_state();
    CHECK(x.q(0) == doctest::Approx(-0.9));
    CHECK(x.q(1) == doctest::Approx(std::sin(std::numbers::pi / 3.0) - 0.1));
    CHECK(x.qd.cwiseAbs().maxCoeff() == 0.0);
    s.initial_q = std::vector<double>{0.5, 0.25};
    s.initial_qd = std::vector<double>{1.0, -1.0};
    CHECK(s.initial_state().q(1) == 0.25);
    CHECK(s.initial_state().qd(1) == -1.0);
}

TEST_CASE("single control period")
{
    Scenario s;
    s.duration = s.dt;
    const auto r = run(s);
    CHECK(r.trace.size() == 1);
    CHECK(r.series.t.size() == 1);
    CHECK_FALSE(r.metrics.converged());
}

TEST_CASE("decimation and logging")
{
    const Scenario s = short_scenario(0.5);
    const auto r = run(s);
    CHECK(r.series.t.size() == 5000);
    CHECK(r.trace.size() == 500);
    CHECK(r.trace[1].t == doctest::Approx(10 * s.dt));
    CHECK(r.trace.front().phi1_hat > 0.0);
    check_torque_bounds(s, r);
    const auto lean = run(s, RunOptions{false});
    CHECK(lean.trace.empty());
    CHECK(lean.series.e1_inf == r.series.e1_inf);
}

TEST_CASE("runs are deterministic")
{
    Scenario s = short_scenario(1.0);
    s.schedule = FaultSchedule({{1, FaultKind::LossAbrupt, 0.5, 50.0, 20.0, 0.5}});
    const auto a = run(s);
    const auto b = run(s);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        REQUIRE(a.trace[i].q == b.trace[i].q);
        REQUIRE(a.trace[i].s_t == b.trace[i].s_t);
    }
    CHECK(a.final_state.q == b.final_state.q);
}

TEST_CASE("minimal gains hold the hanging equilibrium")
{
    Scenario s;
    s.gains = ControllerGains{1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3};
    s.disturbance.kind = DisturbanceKind::Zero;
    s.trajectory = ConstantTrajectory{{0.0, 0.0}};
    s.initial_offset = {0.0, 0.0};
    s.duration = 0.1;
    const auto r = run(s);
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        REQUIRE((r.trace[i].q - r.trace[i - 1].q).cwiseAbs().maxCoeff() / s.decimation < 1e-6);
    CHECK(r.final_state.q.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gain policy hooks")
{
    const Scenario s = short_scenario(0.2);
    FixedPolicy policy(s.gains);
    const auto a = run(s, RunOptions{true, std::nullopt, &policy});
    const auto b = run(s);
    CHECK(policy.observed == 2000);
    CHECK(a.series.e1_inf == b.series.e1_inf);
    CHECK(policy.last == doctest::Approx(b.series.ebar.back()));
    const auto shorter = run(s, RunOptions{true, 0.05});
    CHECK(shorter.series.t.size() == 500);
}

TEST_CASE("i_min override reaches the controller")
{
    Scenario s = short_scenario(0.01);
    const auto base = run(s);
    s.i_min = 1e3;
    const auto weak = run(s);
    CHECK(std::abs(weak.trace.front().t_c(0)) < std::abs(base.trace.front().t_c(0)));
}

TEST_CASE("healthy benchmark converges")
{
    const Scenario s;
    const auto r = run(s);
    CHECK(r.metrics.steady_tracking_error < 0.01);
    CHECK(r.metrics.envelope.valid);
    CHECK(r.metrics.envelope.alpha > 0.0);
    CHECK(r.metrics.envelope.mu < 0.01);
    CHECK(r.metrics.floor_clamps == 0);
    CHECK(r.metrics.converged());
    check_torque_bounds(s, r);
}

TEST_CASE("two-fault benchmark re-converges after every onset")
{
    Scenario s;
    s.schedule = Scenario::two_fault_schedule();
    const auto r = run(s);
    check_torque_bounds(s, r);
    for (double onset : s.schedule.onsets()) {
        const double peak = max_between(r.series, onset, onset + 0.5);
        const double later = max_between(r.series, onset + 4.0, onset + 4.0);
        CHECK(peak > later);
    }
    CHECK(r.metrics.steady_tracking_error < 0.02);
    REQUIRE(r.metrics.regimes.size() == 4);
    CHECK(r.metrics.regimes[1].start == 10.0);
}

TEST_CASE("fault regimes")
{
    const auto regimes = fault_regimes(Scenario::two_fault_schedule(), 30.0);
    REQUIRE(regimes.size() == 3);
    CHECK(regimes[0].faulty_joints == 0);
    CHECK(regimes[0].end == 10.0);
    CHECK(regimes[1].faulty_joints == 1);
    CHECK(regimes[1].end == 15.0);
    CHECK(regimes[2].faulty_joints == 2);
    CHECK(regimes[2].end == 30.0);
    CHECK(fault_regimes(FaultSchedule{}, 5.0).size() == 1);
    CHECK(fault_regimes(Scenario::two_fault_schedule(), 12.0).size() == 2);
    CHECK(regime_label(0) == "normal");
    CHECK(regime_label(1) == "one-faulty");
    CHECK(regime_label(2) == "two-faulty");
    CHECK(regime_label(3) == "3-faulty");
}

TEST_CASE("divergence is reported with its time")
{
    Scenario s;
    s.limits = TorqueLimits::symmetric(2, 1e12);
    s.dt = 0.05;
    s.duration = 30.0;
    s.gains.delta2 = 1e4;
    try {
        (void)run(s);
        FAIL("expected divergence");
    } catch (const NumericalDivergence& e) {
        CHECK(e.time() > 0.0);
        CHECK(e.time() <= 30.0 + 0.05);
    }
}

TEST_CASE("singular plant surfaces during a run")
{
    Scenario s = short_scenario(0.01);
    s.params.link_masses = {1e-15, 1e-15};
    s.params.link_inertias = {1e-15, 1e-15};
    s.i_min = 1.0;
    CHECK_THROWS_AS((void)run(s), SingularInertia);
}

TEST_CASE("propagate is fourth order")
{
    const auto p = ManipulatorParams::reference();
    const JointState x(vec({0.4, -0.3}), vec({0.5, 0.2}));
    const Vector tau = vec({3.0, -1.0});
    const Vector d = vec({0.5, 0.1});
    const JointState fine = propagate(p, x, tau, d, 0.25, 8192);
    auto err = [&](std::size_t n) {
        const JointState y = propagate(p, x, tau, d, 0.25, n);
        return std::max((y.q - fine.q).cwiseAbs().maxCoeff(), (y.qd - fine.qd).cwiseAbs().maxCoeff());
    };
    const double ratio = err(8) / err(16);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
    CHECK_THROWS_AS((void)propagate(p, x, tau, d, 0.25, 0), ValidationError);
}
