#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <utility>

#include "sbfc/dynamics.hpp"

namespace sbfc {

// The eight tunable controller gains. All strictly positive and finite.
struct ControllerGains {
    double k1 = 1.4;
    double k2 = 0.96;
    double delta1 = 62.0;
    double delta2 = 75.0;
    double zeta1 = 0.2;
    double zeta2 = 3.5;
    double sigma1 = 5.6;
    double sigma2 = 1.9;

    static constexpr std::size_t kCount = 8;
    static constexpr std::array<std::string_view, kCount> kNames = {
        "k1", "k2", "delta1", "delta2", "zeta1", "zeta2", "sigma1", "sigma2"};

    [[nodiscard]] std::array<double, kCount> to_array() const;
    [[nodiscard]] static ControllerGains from_array(const std::array<double, kCount>& values);

    void validate() const;

    bool operator==(const ControllerGains&) const = default;
};

// Rate, leakage and coupling of one scalar adaptive law.
struct AdaptiveLaw {
    double k;
    double sigma;
    double zeta;
};

[[nodiscard]] inline AdaptiveLaw position_law(const ControllerGains& g) { return {g.k1, g.sigma1, g.zeta1}; }
[[nodiscard]] inline AdaptiveLaw velocity_law(const ControllerGains& g) { return {g.k2, g.sigma2, g.zeta2}; }

inline constexpr double kAdaptiveFloor = 1e-12;

struct AdaptiveState {
    double phi1_hat = 0.01;
    double phi2_hat = 0.01;
    // Times the positivity floor had to be applied after a discrete step.
    std::size_t floor_clamps = 0;

    bool operator==(const AdaptiveState&) const = default;
};

struct Reference {
    Vector x_d;     // rad
    Vector xd_dot;  // rad/s
    Vector xd_ddot; // rad/s^2
};

struct ErrorState {
    Vector e1;
    Vector e2;
    Vector q1;
    Vector q2;
    Vector kappa1;
};

struct ControlOutput {
    Vector t_c; // N m
    AdaptiveState adaptive;
    ErrorState errors;
};

// Position and velocity tracking errors; throws DimensionMismatch.
[[nodiscard]] std::pair<Vector, Vector> compute_errors(const JointState& state, const Reference& ref);

// kappa1 = -1/2 (delta1 + zeta1 phi1) Q1
[[nodiscard]] Vector virtual_control(const Vector& q1, const ControllerGains& gains, double phi1_hat);

/// One RK4 step of phi' = -k sigma phi + zeta k |Q|^2 / 2 with Q held over the step.
/// A result below the 1e-12 floor is raised to it and counted in `floor_clamps`.
[[nodiscard]] double adaptive_step(double phi_hat, const Vector& q, const AdaptiveLaw& law, double dt,
                                   std::size_t* floor_clamps = nullptr);

// T_c = -1/2 (delta2 + zeta2 phi2) Q2 / i_min
[[nodiscard]] Vector actual_control(const Vector& q2, const ControllerGains& gains, double phi2_hat,
                                    const InertiaBounds& bounds);

/**
 * One controller update, in this order: e1, Q1, phi1 step, kappa1, e2, Q2,
 * phi2 step, T_c. Pure: the caller owns the adaptive state.
 */
[[nodiscard]] ControlOutput control_step(const JointState& state, const Reference& ref,
                                         const AdaptiveState& adaptive, const ControllerGains& gains,
                                         const InertiaBounds& bounds, double dt);

} // namespace sbfc
