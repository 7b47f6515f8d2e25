#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbfc/controller.hpp"
#include "sbfc/dynamics.hpp"
#include "sbfc/fault_torque.hpp"
#include "sbfc/metrics.hpp"
#include "sbfc/reference.hpp"

namespace sbfc {

/**
 * Everything needed for one closed-loop run. Defaults describe the two-link
 * benchmark: healthy actuators, +-80 N m limits, the tuned gains, a 30 s run
 * at 10 kHz, and a start offset of [0.1, -0.1] rad from the reference.
 */
struct Scenario {
    ManipulatorParams params = ManipulatorParams::reference();
    TorqueLimits limits = TorqueLimits::symmetric(2, 80.0);
    FaultSchedule schedule;
    ControllerGains gains;
    AdaptiveState initial_adaptive;
    TrajectorySpec trajectory = SinusoidTrajectory::benchmark();
    DisturbanceSpec disturbance;

    double duration = 30.0; // s
    double dt = 1e-4;       // control period, s
    // RK4 sub-steps per control period; torque and disturbance stay held across them.
    std::size_t substeps = 1;
    std::size_t decimation = 10;

    // Start at x_d(0) + offset with zero velocity unless explicit values are given.
    std::vector<double> initial_offset = {0.1, -0.1};
    std::optional<std::vector<double>> initial_q;
    std::optional<std::vector<double>> initial_qd;

    std::optional<double> i_min;     // overrides the workspace estimate
    double convergence_band = 0.005; // rad
    double cost_window = 0.1;        // s, trailing window of the logged cost
    double envelope_window = 2.0;    // s
    std::uint64_t seed = 0;

    // Throws ValidationError (or ScheduleConflict) describing the first bad field.
    void validate() const;

    [[nodiscard]] std::size_t dof() const { return params.dof(); }
    [[nodiscard]] std::size_t step_count() const;
    [[nodiscard]] std::size_t cost_window_steps() const;
    [[nodiscard]] JointState initial_state() const;

    // Two-fault benchmark: joint 1 degrades slowly from t = 10 s and fails harder at 20 s,
    // joint 2 loses half its authority abruptly at 15 s and drifts toward 20 N m.
    static FaultSchedule two_fault_schedule();

    bool operator==(const Scenario&) const = default;
};

// One logged timestep. Torques are the values held over [t, t + dt).
struct TraceRecord {
    double t = 0.0;
    Vector q, qd;
    Vector x_d, xd_dot;
    Vector e1, e2;
    Vector t_c;
    Vector s_t;
    Vector epsilon;
    double phi1_hat = 0.0;
    double phi2_hat = 0.0;
    double cost_window = 0.0;
};

struct StepResult {
    JointState state;
    AdaptiveState adaptive;
    TraceRecord record;
};

/// Classical RK4 over `duration` in `steps` equal steps with torque and disturbance held.
[[nodiscard]] JointState propagate(const ManipulatorParams& params, JointState state, const Vector& torque,
                                   const Vector& disturbance, double duration, std::size_t steps);

/// Closed loop for one scenario: inertia bounds are estimated once on construction.
class ClosedLoop {
public:
    explicit ClosedLoop(Scenario scenario);

    [[nodiscard]] const Scenario& scenario() const { return scenario_; }
    [[nodiscard]] const InertiaBounds& bounds() const { return bounds_; }

    /// reference -> controller -> fault realization -> effective torque -> disturbance
    /// -> RK4 over one control period with torque and disturbance held.
    /// Throws NumericalDivergence when |q| or |qd| exceeds 1e6.
    [[nodiscard]] StepResult step(const JointState& state, const AdaptiveState& adaptive,
                                  const ControllerGains& gains, double t) const;

    [[nodiscard]] double time_at(std::size_t k) const { return static_cast<double>(k) * scenario_.dt; }

private:
    Scenario scenario_;
    InertiaBounds bounds_;
};

/// Supplies the gains for each control step of a run and observes the resulting error norm.
class GainPolicy {
public:
    virtual ~GainPolicy() = default;
    virtual const ControllerGains& gains(std::size_t step, double t) = 0;
    // Called after step `step` with its error norm e_bar = sqrt(|e1|^2 + |e2|^2).
    virtual void observe(std::size_t step, double ebar) = 0;
};

struct RunOptions {
    bool keep_trace = true;
    std::optional<double> horizon; // s, replaces scenario.duration
    GainPolicy* policy = nullptr;  // fixed scenario gains when null
};

struct RunResult {
    std::vector<TraceRecord> trace;
    RunSeries series;
    RunMetrics metrics;
    JointState final_state;
    AdaptiveState final_adaptive;
};

[[nodiscard]] RunResult run(const Scenario& scenario, const RunOptions& options = {});

[[nodiscard]] MetricsOptions metrics_options(const Scenario& scenario);

// Interval over which a fixed number of joints are faulted.
struct FaultRegime {
    double start = 0.0;
    double end = 0.0;
    std::size_t faulty_joints = 0;
};

/// Splits [0, duration] wherever the count of faulted joints changes. Consecutive onsets that
/// keep the count (a joint's fault escalating) stay in one regime.
[[nodiscard]] std::vector<FaultRegime> fault_regimes(const FaultSchedule& schedule, double duration);

// "normal", "one-faulty", "two-faulty", then "<k>-faulty".
[[nodiscard]] std::string regime_label(std::size_t faulty_joints);

} // namespace sbfc
