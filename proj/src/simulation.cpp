#include "sbfc/simulation.hpp"

#include <cmath>
#include <set>
#include <string>

#include "sbfc/errors.hpp"

namespace sbfc {

namespace {

constexpr double kDivergenceLimit = 1e6;

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw ValidationError(message);
}

struct Derivative {
    Vector dq;
    Vector dqd;
};

Derivative evaluate(const ManipulatorParams& p, const JointState& x, const Vector& torque, const Vector& disturbance)
{
    return {x.qd, forward_dynamics(p, x, torque, disturbance)};
}

JointState offset(const JointState& x, const Derivative& d, double h)
{
    JointState out;
    out.q = x.q + h * d.dq;
    out.qd = x.qd + h * d.dqd;
    return out;
}

void rk4(const ManipulatorParams& p, JointState& x, double h, const Vector& torque, const Vector& disturbance)
{
    const Derivative k1 = evaluate(p, x, torque, disturbance);
    const Derivative k2 = evaluate(p, offset(x, k1, 0.5 * h), torque, disturbance);
    const Derivative k3 = evaluate(p, offset(x, k2, 0.5 * h), torque, disturbance);
    const Derivative k4 = evaluate(p, offset(x, k3, h), torque, disturbance);
    x.q += h / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    x.qd += h / 6.0 * (k1.dqd + 2.0 * k2.dqd + 2.0 * k3.dqd + k4.dqd);
}

} // namespace

JointState propagate(const ManipulatorParams& params, JointState state, const Vector& torque,
                     const Vector& disturbance, double duration, std::size_t steps)
{
    if (steps == 0)
        throw ValidationError("propagate: steps must be >= 1");
    const double h = duration / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s)
        rk4(params, state, h, torque, disturbance);
    return state;
}

namespace {

bool bounded(const Vector& v)
{
    return v.allFinite() && (v.size() == 0 || v.cwiseAbs().maxCoeff() <= kDivergenceLimit);
}

} // namespace

void Scenario::validate() const
{
    params.validate();
    const std::size_t n = dof();
    limits.validate();
    require(limits.dof() == n, "limits: expected one bound per joint");
    gains.validate();
    for (const auto& e : schedule.events())
        require(e.joint < n, "faults: joint index " + std::to_string(e.joint) + " out of range");
    validate_trajectory(trajectory);
    require(trajectory_dof(trajectory) == n, "trajectory: expected one entry per joint");
    require(disturbance.kind != DisturbanceKind::Benchmark || n == 2,
            "disturbance.kind benchmark is defined for two joints only");
    require(std::isfinite(dt) && dt > 0.0, "sim.dt must be > 0");
    require(std::isfinite(duration) && duration >= dt, "sim.duration must be >= sim.dt");
    require(substeps >= 1, "sim.substeps must be >= 1");
    require(decimation >= 1, "sim.decimation must be >= 1");
    require(initial_q ? initial_q->size() == n : initial_offset.size() == n,
            "sim: initial position needs one entry per joint");
    require(!initial_qd || initial_qd->size() == n, "sim.initial_qd: expected one entry per joint");
    require(!i_min || (std::isfinite(*i_min) && *i_min > 0.0), "sim.i_min must be > 0");
    require(std::isfinite(convergence_band) && convergence_band > 0.0, "sim.convergence_band must be > 0");
    require(std::isfinite(cost_window) && cost_window >= 0.0, "sim.cost_window must be >= 0");
    require(std::isfinite(envelope_window) && envelope_window > 0.0, "sim.envelope_window must be > 0");
    require(initial_adaptive.phi1_hat > 0.0 && initial_adaptive.phi2_hat > 0.0,
            "sim.phi_init: adaptive estimates must start positive");
    (void)initial_state();
}

std::size_t Scenario::step_count() const
{
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration / dt)));
}

std::size_t Scenario::cost_window_steps() const
{
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(cost_window / dt)));
}

JointState Scenario::initial_state() const
{
    const auto n = static_cast<Eigen::Index>(dof());
    Vector q(n);
    if (initial_q) {
        q = Eigen::Map<const Vector>(initial_q->data(), n);
    } else {
        q = reference_at(trajectory, 0.0).x_d + Eigen::Map<const Vector>(initial_offset.data(), n);
    }
    Vector qd = initial_qd ? Vector(Eigen::Map<const Vector>(initial_qd->data(), n)) : Vector(Vector::Zero(n));
    return JointState(std::move(q), std::move(qd));
}

FaultSchedule Scenario::two_fault_schedule()
{
    return FaultSchedule({
        {0, FaultKind::LossIncipient, 10.0, 0.3, 0.0, std::nullopt},
        {0, FaultKind::LossAbrupt, 20.0, 50.0, 0.0, 0.7},
        {1, FaultKind::LossAbrupt, 15.0, 50.0, 20.0, 0.5},
    });
}

ClosedLoop::ClosedLoop(Scenario scenario) : scenario_(std::move(scenario))
{
    scenario_.validate();
    bounds_ = estimate_inertia_bounds(scenario_.params);
    if (scenario_.i_min)
        bounds_.i_min = *scenario_.i_min;
}

StepResult ClosedLoop::step(const JointState& state, const AdaptiveState& adaptive, const ControllerGains& gains,
                            double t) const
{
    const Scenario& sc = scenario_;
    const Reference ref = reference_at(sc.trajectory, t);
    ControlOutput ctl = control_step(state, ref, adaptive, gains, bounds_, sc.dt);
    const FaultRealization fault = realize(sc.schedule, sc.limits, ctl.t_c, t);
    Vector applied = effective_torque(ctl.t_c, fault);
    const Vector disturbance = disturbance_at(sc.disturbance, state, t);

    JointState next = propagate(sc.params, state, applied, disturbance, sc.dt, sc.substeps);
    if (!bounded(next.q) || !bounded(next.qd))
        throw NumericalDivergence("state diverged at t = " + std::to_string(t + sc.dt) + " s", t + sc.dt);

    StepResult out{std::move(next), ctl.adaptive, {}};
    TraceRecord& r = out.record;
    r.t = t;
    r.q = state.q;
    r.qd = state.qd;
    r.x_d = ref.x_d;
    r.xd_dot = ref.xd_dot;
    r.e1 = std::move(ctl.errors.e1);
    r.e2 = std::move(ctl.errors.e2);
    r.t_c = std::move(ctl.t_c);
    r.s_t = std::move(applied);
    r.epsilon = fault.epsilon;
    r.phi1_hat = ctl.adaptive.phi1_hat;
    r.phi2_hat = ctl.adaptive.phi2_hat;
    r.cost_window = tracking_error_norm(r.e1, r.e2);
    return out;
}

MetricsOptions metrics_options(const Scenario& scenario)
{
    return {scenario.convergence_band, scenario.envelope_window, scenario.schedule.onsets()};
}

std::vector<FaultRegime> fault_regimes(const FaultSchedule& schedule, double duration)
{
    auto faulty_at = [&](double t) {
        std::set<std::size_t> joints;
        for (const FaultEvent& e : schedule.events()) {
            const FaultEvent* active = schedule.active(e.joint, t);
            if (active && active->kind != FaultKind::Healthy)
                joints.insert(e.joint);
        }
        return joints.size();
    };
    std::vector<FaultRegime> out{{0.0, duration, faulty_at(0.0)}};
    for (double onset : schedule.onsets()) {
        if (onset <= 0.0 || onset >= duration)
            continue;
        const std::size_t count = faulty_at(onset);
        if (count == out.back().faulty_joints)
            continue;
        out.back().end = onset;
        out.push_back({onset, duration, count});
    }
    return out;
}

std::string regime_label(std::size_t faulty_joints)
{
    switch (faulty_joints) {
    case 0:
        return "normal";
    case 1:
        return "one-faulty";
    case 2:
        return "two-faulty";
    default:
        return std::to_string(faulty_joints) + "-faulty";
    }
}

RunResult run(const Scenario& scenario, const RunOptions& options)
{
    const ClosedLoop loop(scenario);
    const std::size_t steps = options.horizon
                                  ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(*options.horizon / scenario.dt)))
                                  : scenario.step_count();
    const std::size_t window = scenario.cost_window_steps();

    RunResult result;
    RunSeries& s = result.series;
    s.t.reserve(steps);
    s.e1_inf.reserve(steps);
    s.e_norm.reserve(steps);
    s.ebar.reserve(steps);
    s.torque_inf.reserve(steps);

    JointState state = scenario.initial_state();
    AdaptiveState adaptive = scenario.initial_adaptive;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = loop.time_at(k);
        const ControllerGains& gains = options.policy ? options.policy->gains(k, t) : scenario.gains;
        StepResult r = loop.step(state, adaptive, gains, t);
        TraceRecord& rec = r.record;
        const double ebar = rec.cost_window;
        if (options.policy)
            options.policy->observe(k, ebar);
        s.t.push_back(rec.t);
        s.e1_inf.push_back(rec.e1.cwiseAbs().maxCoeff());
        s.e_norm.push_back(ebar);
        s.ebar.push_back(ebar);
        s.torque_inf.push_back(rec.s_t.cwiseAbs().maxCoeff());
        if (options.keep_trace && k % scenario.decimation == 0) {
            if (s.ebar.size() >= 2)
                rec.cost_window = evaluate_cost(s.ebar, window);
            result.trace.push_back(std::move(rec));
        }
        state = std::move(r.state);
        adaptive = r.adaptive;
    }
    result.final_state = std::move(state);
    result.final_adaptive = adaptive;
    result.metrics = compute_metrics(s, metrics_options(scenario));
    result.metrics.floor_clamps = adaptive.floor_clamps;
    return result;
}

} // namespace sbfc
