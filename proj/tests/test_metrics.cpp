#include <doctest.h>

#include <cmath>
#include <vector>

#include "sbfc/errors.hpp"
#include "sbfc/metrics.hpp"

using namespace sbfc;

namespace {

// Samples of |e| = a exp(-rate t) + floor at 1 kHz.
RunSeries decaying(double a, double rate, double floor, double duration)
{
    RunSeries s;
    for (int k = 0; k * 1e-3 <= duration; ++k) {
        const double t = k * 1e-3;
        const double e = a * std::exp(-rate * t) + floor;
        s.t.push_back(t);
        s.e1_inf.push_back(e);
        s.e_norm.push_back(e);
        s.ebar.push_back(e);
        s.torque_inf.push_back(10.0 + t);
    }
    return s;
}

} // namespace

TEST_CASE("windowed cost")
{
    const std::vector<double> zeros(50, 0.0);
    CHECK(evaluate_cost(zeros, 10) == 0.0);
    const std::vector<double> flat(50, 0.25);
    CHECK(evaluate_cost(flat, 10) == doctest::Approx(0.25));
    const std::vector<double> pair{0.0, 2.0};
    CHECK(evaluate_cost(pair, 2) == doctest::Approx(2.0));
    // only the trailing window counts
    const std::vector<double> tail{100.0, 100.0, 1.0, 1.0};
    CHECK(evaluate_cost(tail, 2) == doctest::Approx(1.0));
    CHECK(evaluate_cost(tail, 40) > 1.0);
    CHECK_THROWS_AS((void)evaluate_cost(pair, 1), EmptyWindow);
    CHECK_THROWS_AS((void)evaluate_cost(std::vector<double>{1.0}, 5), EmptyWindow);
    CHECK_THROWS_AS((void)evaluate_cost(std::vector<double>{}, 5), EmptyWindow);
}

TEST_CASE("envelope fit")
{
    const RunSeries s = decaying(2.0, 3.0, 0.0, 4.0);
    const auto fit = fit_envelope(s.t, s.e_norm);
    REQUIRE(fit.valid);
    // mu is the largest sample of the last quarter; removing it steepens the tail a little
    CHECK(fit.mu == doctest::Approx(2.0 * std::exp(-9.0)).epsilon(1e-3));
    CHECK(fit.alpha > 2.85);
    CHECK(fit.alpha < 3.5);
    for (std::size_t i = 0; i < s.t.size(); ++i)
        REQUIRE(s.e_norm[i] <= fit.beta * std::exp(-fit.alpha * s.t[i]) * s.e_norm[0] + fit.mu + 1e-12);

    const std::vector<double> few{0.0, 1.0};
    CHECK_FALSE(fit_envelope(few, few).valid);
}

TEST_CASE("run metrics")
{
    RunSeries s = decaying(0.1, 5.0, 0.0, 10.0);
    // a fault-like bump at t = 6
    for (std::size_t i = 0; i < s.t.size(); ++i)
        if (s.t[i] >= 6.0)
            s.e1_inf[i] += 0.05 * std::exp(-4.0 * (s.t[i] - 6.0));

    MetricsOptions options;
    options.onsets = {6.0};
    const auto m = compute_metrics(s, options);
    REQUIRE(m.regimes.size() == 2);
    CHECK(m.regimes[0].start == 0.0);
    CHECK(m.regimes[1].start == 6.0);
    CHECK(m.regimes[1].peak_error == doctest::Approx(0.05).epsilon(0.01));
    CHECK(m.max_torque == doctest::Approx(20.0));
    CHECK(m.steady_tracking_error < 1e-4);
    REQUIRE(m.regimes[0].convergence_time.has_value());
    // 0.1 exp(-5 t) < 0.005 from t = ln(20)/5
    CHECK(*m.regimes[0].convergence_time == doctest::Approx(std::log(20.0) / 5.0).epsilon(0.01));
    REQUIRE(m.convergence_time.has_value());
    CHECK(*m.convergence_time == doctest::Approx(std::log(10.0) / 4.0).epsilon(0.01));
    CHECK(m.envelope.valid);

    const auto r = evaluate_regime(s, 6.0, 8.0, 0.005);
    CHECK(r.start == 6.0);
    CHECK(r.peak_error == doctest::Approx(m.regimes[1].peak_error));
    CHECK(r.max_torque < 18.0 + 1e-9);
}

TEST_CASE("never-settling series is not converged")
{
    RunSeries s = decaying(0.0, 1.0, 0.02, 5.0);
    const auto m = compute_metrics(s, MetricsOptions{});
    CHECK_FALSE(m.converged());
    CHECK(m.steady_tracking_error == doctest::Approx(0.02));
}
