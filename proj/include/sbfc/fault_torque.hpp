#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sbfc/dynamics.hpp"

namespace sbfc {

enum class FaultKind { Healthy, Stuck, LossIncipient, LossAbrupt };

[[nodiscard]] std::string_view to_string(FaultKind kind);
// Accepts the snake_case names produced by to_string; throws ValidationError otherwise.
[[nodiscard]] FaultKind fault_kind_from_string(std::string_view name);

// Default evolution rate for a kind: slow for incipient loss, near-step otherwise.
[[nodiscard]] double default_gamma(FaultKind kind);

inline constexpr double kDefaultLossCap = 0.999;

/**
 * One actuator fault event. From `onset` on, the joint's fault factor follows
 * eps = 1 - exp(-gamma (t - onset)), capped below 1. `stuck_torque` is the
 * torque the actuator drifts to (T_sat); it only matters once eps > 0.
 */
struct FaultEvent {
    std::size_t joint = 0;
    FaultKind kind = FaultKind::LossIncipient;
    double onset = 0.0;        // s
    double gamma = 0.3;        // 1/s
    double stuck_torque = 0.0; // N m
    std::optional<double> loss_cap;

    [[nodiscard]] double cap() const { return loss_cap.value_or(kDefaultLossCap); }
    void validate() const;

    bool operator==(const FaultEvent&) const = default;
};

// Per-joint fault timeline. A later onset supersedes earlier events on the same joint.
class FaultSchedule {
public:
    FaultSchedule() = default;
    // Validates every event; throws ScheduleConflict on duplicate (joint, onset).
    explicit FaultSchedule(std::vector<FaultEvent> events);

    [[nodiscard]] const std::vector<FaultEvent>& events() const { return events_; }
    [[nodiscard]] bool empty() const { return events_.empty(); }

    // Event governing `joint` at time t, or nullptr while the joint is healthy.
    [[nodiscard]] const FaultEvent* active(std::size_t joint, double t) const;

    // Distinct onset times in ascending order.
    [[nodiscard]] std::vector<double> onsets() const;

    bool operator==(const FaultSchedule&) const = default;

private:
    std::vector<FaultEvent> events_;
};

struct TorqueLimits {
    std::vector<double> upper; // N m
    std::vector<double> lower; // N m

    [[nodiscard]] std::size_t dof() const { return upper.size(); }
    void validate() const;

    static TorqueLimits symmetric(std::size_t n, double bound);

    bool operator==(const TorqueLimits&) const = default;
};

struct SaturationCoeffs {
    double s1 = 1.0;
    double s2 = 0.0;
};

// Fault factors and saturation coefficients in effect at one instant.
struct FaultRealization {
    Vector epsilon;    // fault factor per joint, [0, 1)
    Vector t_sat;      // N m
    Vector s1;         // (0, 1]
    Vector s2;         // N m
    Vector lambda_bar; // s1 (1 - eps)
    Vector s_max;      // s2 + s1 eps t_sat, N m
    Vector lower;      // N m, limits the coefficients were evaluated against
    Vector upper;
};

[[nodiscard]] double epsilon_at(const FaultEvent& event, double t);

// T = t_c + eps (t_sat - t_c), per joint.
[[nodiscard]] Vector faulty_torque(const Vector& t_c, const Vector& epsilon, const Vector& t_sat);

// Linear-form coefficients of the clamp: s1 * t + s2 lands on the violated bound.
[[nodiscard]] SaturationCoeffs saturation_coeffs(double t, double lower, double upper);

// Evaluates eps, T_sat and the saturation coefficients on the faulted torque T of t_c.
[[nodiscard]] FaultRealization realize(const FaultSchedule& schedule, const TorqueLimits& limits,
                                       const Vector& t_c, double t);

/// lambda_bar t_c + s_max, i.e. the faulted torque pushed through the saturation. The
/// result is pinned into [lower, upper] so rounding in the coefficient form can never
/// step over a bound.
[[nodiscard]] Vector effective_torque(const Vector& t_c, const FaultRealization& realization);

} // namespace sbfc
