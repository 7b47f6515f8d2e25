#include "sbfc/fault_torque.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sbfc/errors.hpp"

namespace sbfc {

std::string_view to_string(FaultKind kind)
{
    switch (kind) {
    case FaultKind::Healthy:
        return "healthy";
    case FaultKind::Stuck:
        return "stuck";
    case FaultKind::LossIncipient:
        return "loss_incipient";
    case FaultKind::LossAbrupt:
        return "loss_abrupt";
    }
    return "healthy";
}

FaultKind fault_kind_from_string(std::string_view name)
{
    for (FaultKind k : {FaultKind::Healthy, FaultKind::Stuck, FaultKind::LossIncipient, FaultKind::LossAbrupt})
        if (to_string(k) == name)
            return k;
    throw ValidationError("unknown fault kind '" + std::string(name) +
                          "' (expected healthy, stuck, loss_incipient or loss_abrupt)");
}

double default_gamma(FaultKind kind)
{
    return kind == FaultKind::LossIncipient ? 0.3 : 50.0;
}

void FaultEvent::validate() const
{
    if (!std::isfinite(onset) || onset < 0.0)
        throw ValidationError("fault onset must be >= 0");
    if (kind != FaultKind::Healthy && !(std::isfinite(gamma) && gamma > 0.0))
        throw ValidationError("fault gamma must be > 0 (evolution rate of eps = 1 - exp(-gamma t))");
    if (!std::isfinite(stuck_torque))
        throw ValidationError("fault stuck_torque must be finite");
    if (kind == FaultKind::Stuck && stuck_torque == 0.0)
        throw ValidationError("stuck fault needs a nonzero stuck_torque");
    if (loss_cap && !(*loss_cap > 0.0 && *loss_cap < 1.0))
        throw ValidationError("fault loss_cap must lie in (0, 1); eps = 1 means total loss of control");
}

FaultSchedule::FaultSchedule(std::vector<FaultEvent> events) : events_(std::move(events))
{
    for (const auto& e : events_)
        e.validate();
    for (std::size_t i = 0; i < events_.size(); ++i)
        for (std::size_t j = i + 1; j < events_.size(); ++j)
            if (events_[i].joint == events_[j].joint && events_[i].onset == events_[j].onset)
                throw ScheduleConflict("two fault events on joint " + std::to_string(events_[i].joint) +
                                       " share onset " + std::to_string(events_[i].onset) + " s");
}

const FaultEvent* FaultSchedule::active(std::size_t joint, double t) const
{
    const FaultEvent* best = nullptr;
    for (const auto& e : events_)
        if (e.joint == joint && e.onset <= t && (best == nullptr || e.onset > best->onset))
            best = &e;
    return best;
}

std::vector<double> FaultSchedule::onsets() const
{
    std::vector<double> out;
    for (const auto& e : events_)
        out.push_back(e.onset);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void TorqueLimits::validate() const
{
    if (upper.size() != lower.size())
        throw ValidationError("limits.upper and limits.lower must have the same length");
    for (std::size_t i = 0; i < upper.size(); ++i)
        if (!(std::isfinite(lower[i]) && std::isfinite(upper[i]) && lower[i] < 0.0 && upper[i] > 0.0))
            throw ValidationError("limits[" + std::to_string(i) + "]: need lower < 0 < upper");
}

TorqueLimits TorqueLimits::symmetric(std::size_t n, double bound)
{
    return {std::vector<double>(n, bound), std::vector<double>(n, -bound)};
}

double epsilon_at(const FaultEvent& event, double t)
{
    if (event.kind == FaultKind::Healthy || t < event.onset)
        return 0.0;
    return std::min(1.0 - std::exp(-event.gamma * (t - event.onset)), event.cap());
}

Vector faulty_torque(const Vector& t_c, const Vector& epsilon, const Vector& t_sat)
{
    if (epsilon.size() != t_c.size() || t_sat.size() != t_c.size())
        throw DimensionMismatch("faulty_torque: vector sizes differ");
    return t_c + epsilon.cwiseProduct(t_sat - t_c);
}

SaturationCoeffs saturation_coeffs(double t, double lower, double upper)
{
    if (t >= upper)
        return {1.0 / (std::abs(t) + 1.0), upper - t / (std::abs(t) + 1.0)};
    if (t <= lower)
        return {1.0 / (std::abs(t) + 1.0), lower - t / (std::abs(t) + 1.0)};
    return {1.0, 0.0};
}

FaultRealization realize(const FaultSchedule& schedule, const TorqueLimits& limits, const Vector& t_c, double t)
{
    const auto n = t_c.size();
    if (static_cast<Eigen::Index>(limits.dof()) != n)
        throw DimensionMismatch("realize: limits and command sizes differ");
    FaultRealization r;
    r.epsilon = Vector::Zero(n);
    r.t_sat = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (const FaultEvent* e = schedule.active(static_cast<std::size_t>(i), t)) {
            r.epsilon[i] = epsilon_at(*e, t);
            r.t_sat[i] = e->stuck_torque;
        }
    }
    const Vector faulted = faulty_torque(t_c, r.epsilon, r.t_sat);
    r.s1.resize(n);
    r.s2.resize(n);
    r.lower.resize(n);
    r.upper.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        r.lower[i] = limits.lower[static_cast<std::size_t>(i)];
        r.upper[i] = limits.upper[static_cast<std::size_t>(i)];
        const SaturationCoeffs c = saturation_coeffs(faulted[i], r.lower[i], r.upper[i]);
        r.s1[i] = c.s1;
        r.s2[i] = c.s2;
    }
    r.lambda_bar = r.s1.cwiseProduct(Vector::Ones(n) - r.epsilon);
    r.s_max = r.s2 + r.s1.cwiseProduct(r.epsilon).cwiseProduct(r.t_sat);
    return r;
}

Vector effective_torque(const Vector& t_c, const FaultRealization& r)
{
    if (r.lambda_bar.size() != t_c.size())
        throw DimensionMismatch("effective_torque: realization and command sizes differ");
    Vector out = r.lambda_bar.cwiseProduct(t_c) + r.s_max;
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = std::clamp(out[i], r.lower[i], r.upper[i]);
    return out;
}

} // namespace sbfc
