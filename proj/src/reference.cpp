#include "sbfc/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sbfc/errors.hpp"

namespace sbfc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool all_finite(const std::vector<double>& v)
{
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

} // namespace

SinusoidTrajectory SinusoidTrajectory::benchmark()
{
    const double w = 1.0 / (4.0 * std::numbers::pi);
    return {{1.0, 1.0}, {w, w}, {0.0, std::numbers::pi / 3.0}, {-1.0, 0.0}};
}

std::size_t trajectory_dof(const TrajectorySpec& spec)
{
    return std::visit(overloaded{
                          [](const SinusoidTrajectory& s) { return s.amplitude.size(); },
                          [](const ConstantTrajectory& c) { return c.position.size(); },
                          [](const PolynomialTrajectory& p) { return p.start.size(); },
                      },
                      spec);
}

void validate_trajectory(const TrajectorySpec& spec)
{
    std::visit(overloaded{
                   [](const SinusoidTrajectory& s) {
                       const auto n = s.amplitude.size();
                       if (s.frequency.size() != n || s.phase.size() != n || s.offset.size() != n)
                           throw ValidationError("trajectory: amplitude, frequency, phase and offset lengths differ");
                       if (!all_finite(s.amplitude) || !all_finite(s.frequency) || !all_finite(s.phase) ||
                           !all_finite(s.offset))
                           throw ValidationError("trajectory: entries must be finite");
                   },
                   [](const ConstantTrajectory& c) {
                       if (!all_finite(c.position))
                           throw ValidationError("trajectory.position entries must be finite");
                   },
                   [](const PolynomialTrajectory& p) {
                       if (p.goal.size() != p.start.size())
                           throw ValidationError("trajectory: start and goal lengths differ");
                       if (!all_finite(p.start) || !all_finite(p.goal))
                           throw ValidationError("trajectory: entries must be finite");
                       if (!(std::isfinite(p.duration) && p.duration > 0.0))
                           throw ValidationError("trajectory.duration must be > 0");
                   },
               },
               spec);
}

Reference reference_at(const TrajectorySpec& spec, double t)
{
    return std::visit(
        overloaded{
            [t](const SinusoidTrajectory& s) {
                const auto n = static_cast<Eigen::Index>(s.amplitude.size());
                Reference r{Vector(n), Vector(n), Vector(n)};
                for (Eigen::Index i = 0; i < n; ++i) {
                    const auto k = static_cast<std::size_t>(i);
                    const double a = s.amplitude[k];
                    const double w = s.frequency[k];
                    const double arg = w * t + s.phase[k];
                    r.x_d[i] = a * std::sin(arg) + s.offset[k];
                    r.xd_dot[i] = a * w * std::cos(arg);
                    r.xd_ddot[i] = -a * w * w * std::sin(arg);
                }
                return r;
            },
            [](const ConstantTrajectory& c) {
                const auto n = static_cast<Eigen::Index>(c.position.size());
                return Reference{Eigen::Map<const Vector>(c.position.data(), n), Vector::Zero(n), Vector::Zero(n)};
            },
            [t](const PolynomialTrajectory& p) {
                const auto n = static_cast<Eigen::Index>(p.start.size());
                const double tau = std::clamp(t / p.duration, 0.0, 1.0);
                const double s = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
                double ds = 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau) / p.duration;
                double dds = 60.0 * tau * (1.0 - 3.0 * tau + 2.0 * tau * tau) / (p.duration * p.duration);
                if (t >= p.duration) {
                    ds = 0.0;
                    dds = 0.0;
                }
                Reference r{Vector(n), Vector(n), Vector(n)};
                for (Eigen::Index i = 0; i < n; ++i) {
                    const auto k = static_cast<std::size_t>(i);
                    const double span = p.goal[k] - p.start[k];
                    r.x_d[i] = p.start[k] + span * s;
                    r.xd_dot[i] = span * ds;
                    r.xd_ddot[i] = span * dds;
                }
                return r;
            },
        },
        spec);
}

Vector disturbance_at(const DisturbanceSpec& spec, const JointState& state, double t)
{
    const auto n = static_cast<Eigen::Index>(state.dof());
    if (spec.kind == DisturbanceKind::Zero)
        return Vector::Zero(n);
    if (n != 2)
        throw DimensionMismatch("the benchmark disturbance is defined for two joints, got " + std::to_string(n));
    Vector d(2);
    d[0] = 0.6 * std::sin(0.8 * state.qd[0] * state.q[1]) + 3.0 * std::sin(2.0 * t);
    d[1] = -1.6 * std::sin(1.8 * state.q[1]) + 1.3 * std::sin(0.7 * state.qd[1]) - 0.2 * state.q[1];
    return d;
}

} // namespace sbfc
