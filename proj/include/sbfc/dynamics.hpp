#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace sbfc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Planar serial chain of revolute joints moving in a vertical plane.
 *
 * Joint angles are relative (q_i measured from link i-1) and link 1 is measured
 * from the downward vertical, so q = 0 is the hanging configuration. Every
 * per-link vector has one entry per joint.
 */
struct ManipulatorParams {
    std::vector<double> link_lengths;     // m
    std::vector<double> link_masses;      // kg
    std::vector<double> link_inertias;    // kg m^2, about the link COM
    std::vector<double> com_offsets;      // m, COM distance from the proximal joint
    double gravity = 9.81;                // m/s^2
    std::vector<double> viscous_friction; // N m s/rad

    [[nodiscard]] std::size_t dof() const { return link_lengths.size(); }

    // Throws ValidationError naming the first violated invariant.
    void validate() const;

    // Two-link arm, 1 m and 0.8 m uniform rods of 1.0 kg and 0.8 kg, no friction.
    static ManipulatorParams reference();

    bool operator==(const ManipulatorParams&) const = default;
};

struct JointState {
    Vector q;  // rad
    Vector qd; // rad/s

    JointState() = default;
    // Rejects mismatched sizes and non-finite entries.
    JointState(Vector positions, Vector velocities);

    [[nodiscard]] std::size_t dof() const { return static_cast<std::size_t>(q.size()); }
};

// Eigenvalue bounds of I(q)^-1 over the sampled workspace, in 1/(kg m^2).
struct InertiaBounds {
    double i_min = 0.0;
    double i_max = 0.0;
};

struct WorkspaceGrid {
    // Samples per shape coordinate (q_2 .. q_n) over [0, 2pi); at least 64.
    std::size_t samples = 64;
};

[[nodiscard]] Matrix inertia_matrix(const ManipulatorParams& params, const Vector& q);

// Partial derivatives dM/dq_k, one n x n matrix per joint.
[[nodiscard]] std::vector<Matrix> inertia_partials(const ManipulatorParams& params, const Vector& q);

// Christoffel-symbol factorization, so that dM/dt - 2 C is skew-symmetric.
[[nodiscard]] Matrix coriolis_matrix(const ManipulatorParams& params, const Vector& q, const Vector& qd);

[[nodiscard]] Vector gravity_vector(const ManipulatorParams& params, const Vector& q);

[[nodiscard]] Vector friction_vector(const ManipulatorParams& params, const Vector& qd);

[[nodiscard]] double kinetic_energy(const ManipulatorParams& params, const JointState& state);
[[nodiscard]] double potential_energy(const ManipulatorParams& params, const Vector& q);

/// Joint accelerations for the given effective (post fault, post saturation) torque and
/// the lumped external torque: qdd = M^-1 (tau_eff + tau_ext - C qd - f - G).
/// Throws SingularInertia when an LDLT pivot drops below 1e-12.
[[nodiscard]] Vector forward_dynamics(const ManipulatorParams& params, const JointState& state,
                                      const Vector& tau_effective, const Vector& tau_external);

/// Scans the shape coordinates and returns 0.9 * min lambda(M^-1) and 1.1 * max lambda(M^-1).
[[nodiscard]] InertiaBounds estimate_inertia_bounds(const ManipulatorParams& params,
                                                    const WorkspaceGrid& grid = {});

} // namespace sbfc
