#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sbfc/dynamics.hpp"

namespace sbfc {

// e_bar = sqrt(|e1|^2 + |e2|^2) for one sample.
[[nodiscard]] double tracking_error_norm(const Vector& e1, const Vector& e2);

/// Cost statistic over the trailing `window` samples of e_bar: population mean plus
/// population standard deviation, so a constant offset is penalized as well as spread.
/// Throws EmptyWindow when fewer than two samples are available or window < 2.
[[nodiscard]] double evaluate_cost(std::span<const double> ebar, std::size_t window);

// Fitted |e(t)| <= beta exp(-alpha (t - t0)) |e(t0)| + mu.
struct EnvelopeFit {
    double alpha = 0.0;
    double beta = 0.0;
    double mu = 0.0;
    bool valid = false;
};

/**
 * Fits an exponential envelope to an error-norm series by log-linear least squares.
 *
 * mu is the largest sample in the last quarter of the series (the residual band).
 * The series is replaced by its suffix maximum so the fit tracks an upper envelope,
 * ln(envelope - mu) is regressed on t for the samples still above the band, and beta
 * is finally raised until every sample lies under the fitted bound.
 */
[[nodiscard]] EnvelopeFit fit_envelope(std::span<const double> t, std::span<const double> norm);

// Per-step signals the metrics are computed from.
struct RunSeries {
    std::vector<double> t;
    std::vector<double> e1_inf; // max_i |e1_i|, rad
    std::vector<double> e_norm; // |[e1; e2]|
    std::vector<double> ebar;   // cost sample
    std::vector<double> torque_inf;
};

// A stretch of the run between consecutive fault onsets.
struct RegimeMetrics {
    double start = 0.0;
    double end = 0.0;
    double steady_error = 0.0; // max e1_inf over the final 20% of the regime
    double peak_error = 0.0;
    double max_torque = 0.0;
    std::optional<double> convergence_time; // measured from `start`
};

// Metrics over samples with start <= t < end.
[[nodiscard]] RegimeMetrics evaluate_regime(const RunSeries& series, double start, double end, double band);

struct RunMetrics {
    double steady_tracking_error = 0.0; // max e1_inf over the final 20% of the run, rad
    std::optional<double> convergence_time;
    double convergence_band = 0.005;
    double max_torque = 0.0;
    EnvelopeFit envelope;
    std::vector<RegimeMetrics> regimes;
    std::size_t floor_clamps = 0;

    [[nodiscard]] bool converged() const { return convergence_time.has_value(); }
};

struct MetricsOptions {
    double convergence_band = 0.005; // rad
    double envelope_window = 2.0;    // s
    std::vector<double> onsets;      // fault onset times
};

[[nodiscard]] RunMetrics compute_metrics(const RunSeries& series, const MetricsOptions& options);

} // namespace sbfc
