#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "sbfc/controller.hpp"
#include "sbfc/dynamics.hpp"

namespace sbfc {

// x_d,i(t) = amplitude_i sin(frequency_i t + phase_i) + offset_i
struct SinusoidTrajectory {
    std::vector<double> amplitude;
    std::vector<double> frequency; // rad/s
    std::vector<double> phase;     // rad
    std::vector<double> offset;    // rad

    // [sin(t/(4 pi)) - 1, sin(t/(4 pi) + pi/3)]
    static SinusoidTrajectory benchmark();

    bool operator==(const SinusoidTrajectory&) const = default;
};

struct ConstantTrajectory {
    std::vector<double> position;

    bool operator==(const ConstantTrajectory&) const = default;
};

// Quintic rest-to-rest blend from start to goal over `duration`, then hold.
struct PolynomialTrajectory {
    std::vector<double> start;
    std::vector<double> goal;
    double duration = 1.0;

    bool operator==(const PolynomialTrajectory&) const = default;
};

using TrajectorySpec = std::variant<SinusoidTrajectory, ConstantTrajectory, PolynomialTrajectory>;

[[nodiscard]] std::size_t trajectory_dof(const TrajectorySpec& spec);
void validate_trajectory(const TrajectorySpec& spec);

[[nodiscard]] Reference reference_at(const TrajectorySpec& spec, double t);

enum class DisturbanceKind { Zero, Benchmark };

struct DisturbanceSpec {
    DisturbanceKind kind = DisturbanceKind::Benchmark;

    bool operator==(const DisturbanceSpec&) const = default;
};

/// Lumped friction and external torque. The Benchmark kind is defined for two joints:
///   [0.6 sin(0.8 qd1 q2) + 3 sin(2t),  -1.6 sin(1.8 q2) + 1.3 sin(0.7 qd2) - 0.2 q2]
[[nodiscard]] Vector disturbance_at(const DisturbanceSpec& spec, const JointState& state, double t);

} // namespace sbfc
