#include "sbfc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sbfc/errors.hpp"

namespace sbfc {

namespace {

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw ValidationError(message);
}

// Lever length of segment j as seen by link i's centre of mass.
double segment(const ManipulatorParams& p, std::size_t link, std::size_t j)
{
    return j < link ? p.link_lengths[j] : p.com_offsets[link];
}

Vector absolute_angles(const Vector& q)
{
    Vector theta(q.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        acc += q[i];
        theta[i] = acc;
    }
    return theta;
}

void check_size(const ManipulatorParams& p, const Vector& v, const char* what)
{
    if (static_cast<std::size_t>(v.size()) != p.dof())
        throw DimensionMismatch(std::string(what) + " has " + std::to_string(v.size()) +
                                " entries, plant has " + std::to_string(p.dof()) + " joints");
}

} // namespace

void ManipulatorParams::validate() const
{
    const std::size_t n = dof();
    require(n >= 1, "plant.link_lengths: at least one joint is required");
    require(link_masses.size() == n, "plant.link_masses: expected one entry per joint");
    require(link_inertias.size() == n, "plant.link_inertias: expected one entry per joint");
    require(com_offsets.size() == n, "plant.com_offsets: expected one entry per joint");
    require(viscous_friction.size() == n, "plant.viscous_friction: expected one entry per joint");
    require(std::isfinite(gravity), "plant.gravity must be finite");
    for (std::size_t i = 0; i < n; ++i) {
        const std::string idx = "[" + std::to_string(i) + "]";
        require(std::isfinite(link_lengths[i]) && link_lengths[i] > 0.0,
                "plant.link_lengths" + idx + " must be > 0");
        require(std::isfinite(link_masses[i]) && link_masses[i] > 0.0,
                "plant.link_masses" + idx + " must be > 0");
        require(std::isfinite(link_inertias[i]) && link_inertias[i] > 0.0,
                "plant.link_inertias" + idx + " must be > 0");
        require(std::isfinite(com_offsets[i]) && com_offsets[i] >= 0.0 &&
                    com_offsets[i] <= link_lengths[i],
                "plant.com_offsets" + idx + " must lie in [0, link length]");
        require(std::isfinite(viscous_friction[i]) && viscous_friction[i] >= 0.0,
                "plant.viscous_friction" + idx + " must be >= 0");
    }
}

ManipulatorParams ManipulatorParams::reference()
{
    ManipulatorParams p;
    p.link_lengths = {1.0, 0.8};
    p.link_masses = {1.0, 0.8};
    p.com_offsets = {0.5, 0.4};
    p.link_inertias = {1.0 * 1.0 * 1.0 / 12.0, 0.8 * 0.8 * 0.8 / 12.0};
    p.gravity = 9.81;
    p.viscous_friction = {0.0, 0.0};
    return p;
}

JointState::JointState(Vector positions, Vector velocities)
    : q(std::move(positions)), qd(std::move(velocities))
{
    if (q.size() != qd.size())
        throw DimensionMismatch("joint state: position and velocity sizes differ");
    if (!q.allFinite() || !qd.allFinite())
        throw ValidationError("joint state: entries must be finite");
}

Matrix inertia_matrix(const ManipulatorParams& p, const Vector& q)
{
    check_size(p, q, "q");
    const std::size_t n = p.dof();
    const Vector theta = absolute_angles(q);
    Matrix m = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a <= i; ++a) {
            for (std::size_t b = a; b <= i; ++b) {
                double dot = 0.0;
                for (std::size_t j = a; j <= i; ++j)
                    for (std::size_t k = b; k <= i; ++k)
                        dot += segment(p, i, j) * segment(p, i, k) * std::cos(theta[j] - theta[k]);
                m(a, b) += p.link_masses[i] * dot + p.link_inertias[i];
            }
        }
    }
    // Only the upper triangle was accumulated.
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < a; ++b)
            m(a, b) = m(b, a);
    return m;
}

std::vector<Matrix> inertia_partials(const ManipulatorParams& p, const Vector& q)
{
    check_size(p, q, "q");
    const std::size_t n = p.dof();
    const Vector theta = absolute_angles(q);
    std::vector<Matrix> dm(n, Matrix::Zero(n, n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a <= i; ++a) {
            for (std::size_t b = a; b <= i; ++b) {
                for (std::size_t j = a; j <= i; ++j) {
                    for (std::size_t k = b; k <= i; ++k) {
                        if (j == k)
                            continue;
                        const double w = -p.link_masses[i] * segment(p, i, j) * segment(p, i, k) *
                                         std::sin(theta[j] - theta[k]);
                        // d(theta_j - theta_k)/dq_c is +1 for k < c <= j and -1 for j < c <= k.
                        const std::size_t lo = std::min(j, k) + 1;
                        const std::size_t hi = std::max(j, k);
                        const double sign = j > k ? 1.0 : -1.0;
                        for (std::size_t c = lo; c <= hi; ++c)
                            dm[c](a, b) += sign * w;
                    }
                }
            }
        }
    }
    for (auto& d : dm)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < a; ++b)
                d(a, b) = d(b, a);
    return dm;
}

Matrix coriolis_matrix(const ManipulatorParams& p, const Vector& q, const Vector& qd)
{
    check_size(p, qd, "qd");
    const std::size_t n = p.dof();
    const std::vector<Matrix> dm = inertia_partials(p, q);
    Matrix c = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                c(k, j) += 0.5 * (dm[i](k, j) + dm[j](k, i) - dm[k](i, j)) * qd[i];
    return c;
}

Vector gravity_vector(const ManipulatorParams& p, const Vector& q)
{
    check_size(p, q, "q");
    const std::size_t n = p.dof();
    const Vector theta = absolute_angles(q);
    Vector g = Vector::Zero(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a <= i; ++a)
            for (std::size_t j = a; j <= i; ++j)
                g[a] += p.gravity * p.link_masses[i] * segment(p, i, j) * std::sin(theta[j]);
    return g;
}

Vector friction_vector(const ManipulatorParams& p, const Vector& qd)
{
    check_size(p, qd, "qd");
    return Eigen::Map<const Vector>(p.viscous_friction.data(), qd.size()).cwiseProduct(qd);
}

double kinetic_energy(const ManipulatorParams& p, const JointState& s)
{
    return 0.5 * s.qd.dot(inertia_matrix(p, s.q) * s.qd);
}

double potential_energy(const ManipulatorParams& p, const Vector& q)
{
    check_size(p, q, "q");
    const Vector theta = absolute_angles(q);
    double v = 0.0;
    for (std::size_t i = 0; i < p.dof(); ++i) {
        double height = 0.0;
        for (std::size_t j = 0; j <= i; ++j)
            height -= segment(p, i, j) * std::cos(theta[j]);
        v += p.link_masses[i] * p.gravity * height;
    }
    return v;
}

Vector forward_dynamics(const ManipulatorParams& p, const JointState& s, const Vector& tau_effective,
                        const Vector& tau_external)
{
    check_size(p, s.q, "q");
    check_size(p, tau_effective, "tau_effective");
    check_size(p, tau_external, "tau_external");
    const Matrix m = inertia_matrix(p, s.q);
    const Vector rhs = tau_effective + tau_external - coriolis_matrix(p, s.q, s.qd) * s.qd -
                       friction_vector(p, s.qd) - gravity_vector(p, s.q);
    const Eigen::LDLT<Matrix> ldlt(m);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() < 1e-12)
        throw SingularInertia("inertia matrix is singular (pivot below 1e-12)");
    return ldlt.solve(rhs);
}

InertiaBounds estimate_inertia_bounds(const ManipulatorParams& p, const WorkspaceGrid& grid)
{
    if (grid.samples < 64)
        throw ValidationError("workspace grid needs at least 64 samples per axis");
    const std::size_t n = p.dof();
    const std::size_t axes = n > 0 ? n - 1 : 0;
    std::size_t total = 1;
    for (std::size_t a = 0; a < axes; ++a)
        total *= grid.samples;

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    Vector q = Vector::Zero(n);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(grid.samples);
    for (std::size_t idx = 0; idx < total; ++idx) {
        // Mixed-radix decode of idx into the shape coordinates q_2 .. q_n.
        std::size_t rest = idx;
        for (std::size_t a = 0; a < axes; ++a) {
            q[a + 1] = step * static_cast<double>(rest % grid.samples);
            rest /= grid.samples;
        }
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(inertia_matrix(p, q), Eigen::EigenvaluesOnly);
        // Eigenvalues of M^-1 are reciprocals of those of M.
        lo = std::min(lo, 1.0 / eig.eigenvalues().maxCoeff());
        hi = std::max(hi, 1.0 / eig.eigenvalues().minCoeff());
    }
    return {0.9 * lo, 1.1 * hi};
}

} // namespace sbfc
