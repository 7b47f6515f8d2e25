#include "sbfc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sbfc/errors.hpp"

namespace sbfc {

double tracking_error_norm(const Vector& e1, const Vector& e2)
{
    return std::sqrt(e1.squaredNorm() + e2.squaredNorm());
}

double evaluate_cost(std::span<const double> ebar, std::size_t window)
{
    if (window < 2 || ebar.size() < 2)
        throw EmptyWindow("cost window needs at least two samples");
    const std::size_t count = std::min(window, ebar.size());
    const auto tail = ebar.last(count);
    double mean = 0.0;
    for (double v : tail)
        mean += v;
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (double v : tail)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(count);
    return mean + std::sqrt(var);
}

EnvelopeFit fit_envelope(std::span<const double> t, std::span<const double> norm)
{
    EnvelopeFit fit;
    const std::size_t n = std::min(t.size(), norm.size());
    if (n < 4)
        return fit;

    const std::size_t tail_start = n - std::max<std::size_t>(1, n / 4);
    fit.mu = *std::max_element(norm.begin() + static_cast<std::ptrdiff_t>(tail_start), norm.begin() + static_cast<std::ptrdiff_t>(n));

    std::vector<double> envelope(n);
    double running = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        running = std::max(running, norm[i]);
        envelope[i] = running;
    }

    const double t0 = t[0];
    const double e0 = norm[0];
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < tail_start; ++i) {
        const double z = envelope[i] - fit.mu;
        if (z <= 1e-12)
            continue;
        const double x = t[i] - t0;
        const double y = std::log(z);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++used;
    }
    if (used < 3 || e0 <= 0.0)
        return fit;
    const double m = static_cast<double>(used);
    const double denom = m * sxx - sx * sx;
    if (denom <= 0.0)
        return fit;
    const double slope = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / m;
    fit.alpha = -slope;
    fit.beta = std::exp(intercept) / e0;
    for (std::size_t i = 0; i < n; ++i) {
        const double decay = e0 * std::exp(-fit.alpha * (t[i] - t0));
        if (decay > 0.0)
            fit.beta = std::max(fit.beta, (norm[i] - fit.mu) / decay);
    }
    fit.valid = std::isfinite(fit.alpha) && std::isfinite(fit.beta);
    return fit;
}

namespace {

RegimeMetrics regime_metrics(const RunSeries& s, std::size_t first, std::size_t last, double start, double end,
                             double band)
{
    RegimeMetrics r;
    r.start = start;
    r.end = end;
    if (first >= last)
        return r;
    const std::size_t count = last - first;
    const std::size_t steady_from = first + (count * 8) / 10;
    for (std::size_t i = first; i < last; ++i) {
        r.peak_error = std::max(r.peak_error, s.e1_inf[i]);
        if (i >= steady_from)
            r.steady_error = std::max(r.steady_error, s.e1_inf[i]);
        r.max_torque = std::max(r.max_torque, s.torque_inf[i]);
    }
    if (count < 2)
        return r;
    std::size_t settle = first;
    for (std::size_t i = first; i < last; ++i)
        if (s.e1_inf[i] >= band)
            settle = i + 1;
    if (settle < last)
        r.convergence_time = s.t[settle] - start;
    return r;
}

} // namespace

RegimeMetrics evaluate_regime(const RunSeries& s, double start, double end, double band)
{
    std::size_t first = 0;
    while (first < s.t.size() && s.t[first] < start)
        ++first;
    std::size_t last = first;
    while (last < s.t.size() && s.t[last] < end)
        ++last;
    return regime_metrics(s, first, last, start, end, band);
}

RunMetrics compute_metrics(const RunSeries& s, const MetricsOptions& options)
{
    RunMetrics m;
    m.convergence_band = options.convergence_band;
    const std::size_t n = s.t.size();
    if (n == 0)
        return m;

    for (double v : s.torque_inf)
        m.max_torque = std::max(m.max_torque, v);
    const std::size_t steady_from = (n * 8) / 10;
    for (std::size_t i = steady_from; i < n; ++i)
        m.steady_tracking_error = std::max(m.steady_tracking_error, s.e1_inf[i]);

    // Regime boundaries: every onset strictly inside the run.
    std::vector<double> bounds{s.t.front()};
    for (double onset : options.onsets)
        if (onset > s.t.front() && onset <= s.t.back())
            bounds.push_back(onset);
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

    std::size_t first = 0;
    for (std::size_t b = 0; b < bounds.size(); ++b) {
        const bool final_regime = b + 1 == bounds.size();
        const double end = final_regime ? s.t.back() : bounds[b + 1];
        std::size_t last = first;
        while (last < n && (final_regime || s.t[last] < end))
            ++last;
        m.regimes.push_back(regime_metrics(s, first, last, bounds[b], end, options.convergence_band));
        first = last;
    }
    m.convergence_time = m.regimes.back().convergence_time;

    // Envelope over the opening stretch of the first regime.
    const double fit_end = std::min(s.t.front() + options.envelope_window, m.regimes.front().end);
    std::size_t fit_count = 0;
    while (fit_count < n && s.t[fit_count] <= fit_end)
        ++fit_count;
    m.envelope = fit_envelope(std::span(s.t).first(fit_count), std::span(s.e_norm).first(fit_count));
    return m;
}

} // namespace sbfc
