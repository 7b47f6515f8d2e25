#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sbfc/errors.hpp"
#include "sbfc/fault_torque.hpp"
#include "sbfc/simulation.hpp"
#include "support.hpp"

using namespace sbfc;
using testing::vec;

namespace {

FaultEvent event(std::size_t joint, FaultKind kind, double onset, double gamma, double t_sat = 0.0,
                 std::optional<double> cap = std::nullopt)
{
    return FaultEvent{joint, kind, onset, gamma, t_sat, cap};
}

constexpr double kEps = std::numeric_limits<double>::epsilon();

} // namespace

TEST_CASE("fault factor")
{
    const auto e = event(0, FaultKind::LossIncipient, 5.0, 0.1);
    CHECK(epsilon_at(e, 4.999) == 0.0);
    CHECK(epsilon_at(e, 5.0) == 0.0);
    CHECK(epsilon_at(e, 15.0) == doctest::Approx(0.6321).epsilon(1e-4));
    CHECK(epsilon_at(e, 1e6) == doctest::Approx(kDefaultLossCap));
    CHECK(epsilon_at(e, 1e6) < 1.0);

    const auto capped = event(0, FaultKind::LossAbrupt, 0.0, 50.0, 0.0, 0.7);
    CHECK(epsilon_at(capped, 10.0) == 0.7);
}

TEST_CASE("fault factor is monotone in time")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> gamma(0.01, 100.0), onset(0.0, 20.0), dt(0.0, 0.5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto e = event(0, FaultKind::LossIncipient, onset(rng), gamma(rng));
        double t = 0.0, last = 0.0;
        for (int k = 0; k < 200; ++k) {
            t += dt(rng);
            const double eps = epsilon_at(e, t);
            REQUIRE(eps >= last);
            REQUIRE(eps >= 0.0);
            REQUIRE(eps < 1.0);
            last = eps;
        }
    }
}

TEST_CASE("fault event validation")
{
    CHECK_NOTHROW(event(0, FaultKind::LossIncipient, 0.0, 0.3).validate());
    CHECK_THROWS_AS(event(0, FaultKind::LossIncipient, -1.0, 0.3).validate(), ValidationError);
    CHECK_THROWS_AS(event(0, FaultKind::LossIncipient, 1.0, 0.0).validate(), ValidationError);
    CHECK_THROWS_AS(event(0, FaultKind::LossIncipient, 1.0, -1.0).validate(), ValidationError);
    CHECK_THROWS_AS(event(0, FaultKind::LossAbrupt, 1.0, 50.0, 0.0, 1.0).validate(), ValidationError);
    CHECK_THROWS_AS(event(0, FaultKind::Stuck, 1.0, 50.0, 0.0).validate(), ValidationError);
    CHECK_NOTHROW(event(0, FaultKind::Stuck, 1.0, 50.0, 12.0).validate());
}

TEST_CASE("fault kind names")
{
    for (auto k : {FaultKind::Healthy, FaultKind::Stuck, FaultKind::LossIncipient, FaultKind::LossAbrupt})
        CHECK(fault_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS((void)fault_kind_from_string("broken"), ValidationError);
    CHECK(default_gamma(FaultKind::LossIncipient) < default_gamma(FaultKind::LossAbrupt));
}

TEST_CASE("fault schedule")
{
    CHECK_THROWS_AS(FaultSchedule({event(0, FaultKind::LossIncipient, 5.0, 0.3),
                                   event(0, FaultKind::LossAbrupt, 5.0, 50.0)}),
                    ScheduleConflict);
    CHECK_NOTHROW(FaultSchedule({event(0, FaultKind::LossIncipient, 5.0, 0.3),
                                 event(1, FaultKind::LossAbrupt, 5.0, 50.0)}));

    const auto s = Scenario::two_fault_schedule();
    CHECK(s.active(0, 9.0) == nullptr);
    REQUIRE(s.active(0, 12.0) != nullptr);
    CHECK(s.active(0, 12.0)->onset == 10.0);
    CHECK(s.active(0, 25.0)->onset == 20.0);
    CHECK(s.active(1, 12.0) == nullptr);
    CHECK(s.active(1, 16.0) != nullptr);
    CHECK(s.onsets() == std::vector<double>{10.0, 15.0, 20.0});
}

TEST_CASE("faulty torque")
{
    const Vector tc = vec({10.0, -4.0});
    const Vector zero = Vector::Zero(2);
    const Vector healthy = faulty_torque(tc, zero, vec({3.0, 7.0}));
    CHECK(healthy(0) == 10.0);
    CHECK(healthy(1) == -4.0);

    CHECK(faulty_torque(vec({10.0}), vec({0.5}), vec({0.0}))(0) == doctest::Approx(5.0));

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-100.0, 100.0);
    for (int k = 0; k < 1000; ++k) {
        const double t_c = d(rng), t_sat = d(rng);
        const double t = faulty_torque(vec({t_c}), vec({0.999}), vec({t_sat}))(0);
        REQUIRE(std::abs(t - t_sat) <= 0.001 * std::abs(t_c - t_sat) + 1e-12);
    }
}

TEST_CASE("saturation coefficients")
{
    SUBCASE("examples")
    {
        auto c = saturation_coeffs(50.0, -80.0, 80.0);
        CHECK(c.s1 == 1.0);
        CHECK(c.s2 == 0.0);
        c = saturation_coeffs(100.0, -80.0, 80.0);
        CHECK(c.s1 == doctest::Approx(1.0 / 101.0));
        CHECK(c.s2 == doctest::Approx(80.0 - 100.0 / 101.0));
        CHECK(c.s1 * 100.0 + c.s2 == doctest::Approx(80.0).epsilon(1e-15));
        c = saturation_coeffs(-200.0, -80.0, 80.0);
        CHECK(c.s1 * -200.0 + c.s2 == doctest::Approx(-80.0).epsilon(1e-15));
    }
    SUBCASE("linear form equals the clamp")
    {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> mag(-1e4, 1e4), bound(0.1, 500.0);
        for (int k = 0; k < 10000; ++k) {
            const double lo = -bound(rng), hi = bound(rng);
            const double t = mag(rng);
            const auto c = saturation_coeffs(t, lo, hi);
            const double clamp = std::clamp(t, lo, hi);
            const double scale = std::max({std::abs(t), std::abs(lo), std::abs(hi)});
            REQUIRE(std::abs(c.s1 * t + c.s2 - clamp) <= 4.0 * kEps * scale);
            REQUIRE(c.s1 > 0.0);
            REQUIRE(c.s1 <= 1.0);
            REQUIRE(std::abs(c.s2) <= std::max(std::abs(lo), std::abs(hi)) + 1.0);
        }
    }
}

TEST_CASE("effective torque")
{
    const auto limits = TorqueLimits::symmetric(2, 80.0);
    SUBCASE("healthy in-band torque passes through")
    {
        const Vector tc = vec({12.5, -33.25});
        const auto r = realize(FaultSchedule{}, limits, tc, 3.0);
        const Vector out = effective_torque(tc, r);
        CHECK(out(0) == 12.5);
        CHECK(out(1) == -33.25);
        CHECK(r.lambda_bar(0) == 1.0);
        CHECK(r.s_max(1) == 0.0);
    }
    SUBCASE("healthy torque beyond the limit")
    {
        const Vector tc = vec({100.0, -300.0});
        const Vector out = effective_torque(tc, realize(FaultSchedule{}, limits, tc, 0.0));
        CHECK(out(0) == 80.0);
        CHECK(out(1) == -80.0);
    }
    SUBCASE("half loss toward 200 N m")
    {
        const FaultSchedule s({event(0, FaultKind::LossAbrupt, 0.0, 50.0, 200.0, 0.5)});
        const Vector tc = Vector::Zero(2);
        const auto r = realize(s, limits, tc, 10.0);
        CHECK(r.epsilon(0) == 0.5);
        CHECK(r.lambda_bar(0) * tc(0) + r.s_max(0) == doctest::Approx(80.0).epsilon(1e-14));
        CHECK(effective_torque(tc, r)(0) == 80.0);
    }
    SUBCASE("two-fault schedule activates joints in turn")
    {
        const auto s = Scenario::two_fault_schedule();
        const Vector tc = vec({5.0, 5.0});
        auto r = realize(s, limits, tc, 12.0);
        CHECK(r.epsilon(0) > 0.0);
        CHECK(r.epsilon(1) == 0.0);
        r = realize(s, limits, tc, 16.0);
        CHECK(r.epsilon(0) > 0.0);
        CHECK(r.epsilon(1) > 0.0);
    }
    SUBCASE("never leaves the limits")
    {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> torque(-1e3, 1e3), time(0.0, 30.0), bound(1.0, 200.0);
        const auto s = Scenario::two_fault_schedule();
        for (int k = 0; k < 10000; ++k) {
            TorqueLimits lim{{bound(rng), bound(rng)}, {-bound(rng), -bound(rng)}};
            const Vector tc = vec({torque(rng), torque(rng)});
            const auto r = realize(s, lim, tc, time(rng));
            const Vector out = effective_torque(tc, r);
            for (int i = 0; i < 2; ++i) {
                REQUIRE(out(i) <= lim.upper[static_cast<std::size_t>(i)]);
                REQUIRE(out(i) >= lim.lower[static_cast<std::size_t>(i)]);
                REQUIRE(r.lambda_bar(i) > 0.0);
                REQUIRE(r.lambda_bar(i) <= 1.0);
                REQUIRE(r.s1(i) > 0.0);
                REQUIRE(r.s1(i) <= 1.0);
                // composition equals clamp of the faulted torque
                const double faulted = tc(i) + r.epsilon(i) * (r.t_sat(i) - tc(i));
                const double clamp =
                    std::clamp(faulted, lim.lower[static_cast<std::size_t>(i)], lim.upper[static_cast<std::size_t>(i)]);
                REQUIRE(std::abs(out(i) - clamp) <= 1e-12 * std::max(1.0, std::abs(faulted)));
            }
        }
    }
}

TEST_CASE("torque limits validation")
{
    CHECK_NOTHROW(TorqueLimits::symmetric(2, 80.0).validate());
    CHECK_THROWS_AS((TorqueLimits{{80.0}, {-80.0, -80.0}}).validate(), Error);
    CHECK_THROWS_AS((TorqueLimits{{-1.0, 80.0}, {0.0, -80.0}}).validate(), ValidationError);
}
