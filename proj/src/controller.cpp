#include "sbfc/controller.hpp"

#include <cmath>
#include <string>

#include "sbfc/errors.hpp"

namespace sbfc {

std::array<double, ControllerGains::kCount> ControllerGains::to_array() const
{
    return {k1, k2, delta1, delta2, zeta1, zeta2, sigma1, sigma2};
}

ControllerGains ControllerGains::from_array(const std::array<double, kCount>& v)
{
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

void ControllerGains::validate() const
{
    const auto values = to_array();
    for (std::size_t i = 0; i < kCount; ++i)
        if (!(std::isfinite(values[i]) && values[i] > 0.0))
            throw ValidationError("gains." + std::string(kNames[i]) + " must be positive and finite");
}

std::pair<Vector, Vector> compute_errors(const JointState& state, const Reference& ref)
{
    if (ref.x_d.size() != state.q.size() || ref.xd_dot.size() != state.qd.size())
        throw DimensionMismatch("reference has " + std::to_string(ref.x_d.size()) + " joints, state has " +
                                std::to_string(state.q.size()));
    return {state.q - ref.x_d, state.qd - ref.xd_dot};
}

Vector virtual_control(const Vector& q1, const ControllerGains& gains, double phi1_hat)
{
    return -0.5 * (gains.delta1 + gains.zeta1 * phi1_hat) * q1;
}

double adaptive_step(double phi_hat, const Vector& q, const AdaptiveLaw& law, double dt, std::size_t* floor_clamps)
{
    const double drive = 0.5 * law.zeta * law.k * q.squaredNorm();
    const double decay = law.k * law.sigma;
    const auto rhs = [&](double phi) { return -decay * phi + drive; };
    const double s1 = rhs(phi_hat);
    const double s2 = rhs(phi_hat + 0.5 * dt * s1);
    const double s3 = rhs(phi_hat + 0.5 * dt * s2);
    const double s4 = rhs(phi_hat + dt * s3);
    double next = phi_hat + dt / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
    if (!(next >= kAdaptiveFloor)) {
        next = kAdaptiveFloor;
        if (floor_clamps != nullptr)
            ++*floor_clamps;
    }
    return next;
}

Vector actual_control(const Vector& q2, const ControllerGains& gains, double phi2_hat, const InertiaBounds& bounds)
{
    return -0.5 * (gains.delta2 + gains.zeta2 * phi2_hat) / bounds.i_min * q2;
}

ControlOutput control_step(const JointState& state, const Reference& ref, const AdaptiveState& adaptive,
                           const ControllerGains& gains, const InertiaBounds& bounds, double dt)
{
    ControlOutput out;
    out.adaptive = adaptive;
    ErrorState& err = out.errors;

    auto [e1, e2] = compute_errors(state, ref);
    err.e1 = std::move(e1);
    err.q1 = err.e1;
    out.adaptive.phi1_hat =
        adaptive_step(adaptive.phi1_hat, err.q1, position_law(gains), dt, &out.adaptive.floor_clamps);
    err.kappa1 = virtual_control(err.q1, gains, out.adaptive.phi1_hat);
    err.e2 = std::move(e2);
    err.q2 = err.e2 - err.kappa1;
    out.adaptive.phi2_hat =
        adaptive_step(adaptive.phi2_hat, err.q2, velocity_law(gains), dt, &out.adaptive.floor_clamps);
    out.t_c = actual_control(err.q2, gains, out.adaptive.phi2_hat, bounds);
    return out;
}

} // namespace sbfc
