#include "sbfc/jaya.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "sbfc/errors.hpp"

namespace sbfc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw ValidationError(message);
}

double apply_box(double v, const Box& box, std::size_t i)
{
    if (box.has_lower())
        v = std::max(v, box.lower[i]);
    if (box.has_upper())
        v = std::min(v, box.upper[i]);
    return v;
}

double safe_cost(const Objective& objective, const Candidate& c)
{
    double cost = kInf;
    try {
        cost = objective(c);
    } catch (const Error&) {
        return kInf;
    }
    return std::isnan(cost) ? kInf : cost;
}

std::pair<std::size_t, std::size_t> best_and_worst(const std::vector<double>& costs)
{
    std::size_t best = 0, worst = 0;
    for (std::size_t i = 1; i < costs.size(); ++i) {
        if (costs[i] < costs[best])
            best = i;
        if (costs[i] > costs[worst])
            worst = i;
    }
    return {best, worst};
}

Candidate to_candidate(const ControllerGains& g)
{
    const auto a = g.to_array();
    return {a.begin(), a.end()};
}

ControllerGains to_gains(const Candidate& c)
{
    std::array<double, ControllerGains::kCount> a{};
    std::copy_n(c.begin(), a.size(), a.begin());
    return ControllerGains::from_array(a);
}

Candidate clamp_into(Candidate c, const Box& box)
{
    for (std::size_t i = 0; i < c.size(); ++i)
        c[i] = apply_box(c[i], box, i);
    return c;
}

std::vector<Candidate> initial_population(std::size_t dim, const JayaOptions& o, UniformSource& rng)
{
    std::vector<Candidate> pop;
    for (const Candidate& c : o.initial) {
        if (pop.size() == o.population)
            break;
        require(c.size() == dim, "tuner: initial candidate has the wrong dimension");
        pop.push_back(clamp_into(c, o.bounds));
    }
    if (pop.size() < o.population)
        require(o.bounds.has_lower() && o.bounds.has_upper(),
                "tuner: bounds are required to sample the initial population");
    while (pop.size() < o.population) {
        Candidate c(dim);
        for (std::size_t i = 0; i < dim; ++i)
            c[i] = o.bounds.lower[i] + rng.next() * (o.bounds.upper[i] - o.bounds.lower[i]);
        pop.push_back(std::move(c));
    }
    return pop;
}

} // namespace

void Box::validate(std::size_t dim) const
{
    require(lower.empty() || lower.size() == dim, "bounds: lower has the wrong dimension");
    require(upper.empty() || upper.size() == dim, "bounds: upper has the wrong dimension");
    for (std::size_t i = 0; i < dim; ++i) {
        if (has_lower())
            require(std::isfinite(lower[i]) && lower[i] > 0.0, "bounds: lower bounds must be > 0");
        if (has_upper())
            require(std::isfinite(upper[i]), "bounds: upper bounds must be finite");
        if (has_lower() && has_upper())
            require(lower[i] < upper[i], "bounds: lower must be below upper");
    }
}

Candidate jaya_move(const Candidate& c, const Candidate& best, const Candidate& worst, std::span<const double> r1,
                    std::span<const double> r2)
{
    const std::size_t n = c.size();
    if (best.size() != n || worst.size() != n || r1.size() != n || r2.size() != n)
        throw DimensionMismatch("jaya: candidate, best, worst and draws must share one dimension");
    Candidate out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = c[i] + r1[i] * (best[i] - c[i]) - r2[i] * (worst[i] - c[i]);
    return out;
}

Candidate jaya_update(const Candidate& c, const Candidate& best, const Candidate& worst, UniformSource& rng,
                      const Box& box, UpdateRecord* record)
{
    const std::size_t n = c.size();
    if (best.size() != n || worst.size() != n)
        throw DimensionMismatch("jaya: candidate, best and worst must share one dimension");
    if (record) {
        record->r1.assign(n, 0.0);
        record->r2.assign(n, 0.0);
    }
    Candidate out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double r1 = rng.next();
        double r2 = rng.next();
        double moved = c[i] + r1 * (best[i] - c[i]) - r2 * (worst[i] - c[i]);
        int attempts = 0;
        // moved > 0 is the same test as c > (r2 worst - r1 best) / (1 - r1 + r2) for a positive denominator.
        while (!(moved > 0.0) && attempts < kMaxRedraws) {
            r1 = rng.next();
            r2 = rng.next();
            moved = c[i] + r1 * (best[i] - c[i]) - r2 * (worst[i] - c[i]);
            ++attempts;
        }
        if (record)
            record->redraws += static_cast<std::size_t>(attempts);
        if (!(moved > 0.0)) {
            moved = kPositivityFallback;
            if (record)
                ++record->fallbacks;
        }
        if (record) {
            record->r1[i] = r1;
            record->r2[i] = r2;
        }
        out[i] = apply_box(moved, box, i);
    }
    return out;
}

JayaResult jaya_minimize(const Objective& objective, std::size_t dim, const JayaOptions& options)
{
    require(options.population >= 2, "tuner.population must be >= 2");
    require(dim >= 1, "tuner: candidates need at least one coordinate");
    options.bounds.validate(dim);

    UniformSource rng(options.seed);
    JayaResult r;
    r.population = initial_population(dim, options, rng);
    r.initial = r.population;
    r.costs.reserve(r.population.size());
    auto score = [&](const Candidate& c) {
        const double cost = safe_cost(objective, c);
        ++r.evaluations;
        if (std::isinf(cost))
            ++r.infeasible;
        return cost;
    };
    for (const Candidate& c : r.population)
        r.costs.push_back(score(c));

    auto record_history = [&](std::size_t iteration) {
        const auto [b, w] = best_and_worst(r.costs);
        r.history.push_back({iteration, r.costs[b], r.costs[w], r.population[b]});
    };
    record_history(0);

    for (std::size_t it = 1; it <= options.iterations; ++it) {
        const auto [b, w] = best_and_worst(r.costs);
        const Candidate best = r.population[b];
        const Candidate worst = r.population[w];
        for (std::size_t i = 0; i < r.population.size(); ++i) {
            Candidate next = jaya_update(r.population[i], best, worst, rng, options.bounds);
            const double cost = score(next);
            if (cost < r.costs[i]) {
                r.population[i] = std::move(next);
                r.costs[i] = cost;
            }
        }
        record_history(it);
    }
    const auto [b, w] = best_and_worst(r.costs);
    (void)w;
    r.best = r.population[b];
    r.best_cost = r.costs[b];
    return r;
}

double sphere_cost(const Candidate& c, double centre)
{
    double s = 0.0;
    for (double v : c)
        s += (v - centre) * (v - centre);
    return s;
}

std::string to_string(TunerMode mode)
{
    return mode == TunerMode::Episodic ? "episodic" : "online";
}

TunerMode tuner_mode_from_string(const std::string& name)
{
    if (name == "episodic")
        return TunerMode::Episodic;
    if (name == "online")
        return TunerMode::Online;
    throw ValidationError("tuner.mode must be episodic or online, got '" + name + "'");
}

void GainBounds::validate() const
{
    const auto lo = lower.to_array();
    const auto hi = upper.to_array();
    for (std::size_t i = 0; i < lo.size(); ++i) {
        const std::string name(ControllerGains::kNames[i]);
        require(std::isfinite(lo[i]) && lo[i] > 0.0, "tuner.gain_bounds.lower." + name + " must be > 0");
        require(std::isfinite(hi[i]) && hi[i] > lo[i],
                "tuner.gain_bounds.upper." + name + " must be finite and above the lower bound");
    }
}

Box GainBounds::box() const
{
    return {to_candidate(lower), to_candidate(upper)};
}

void TunerConfig::validate() const
{
    require(population >= 2, "tuner.population must be >= 2");
    require(std::isfinite(horizon) && horizon > 0.0, "tuner.horizon_s must be > 0");
    require(switch_period > 0.0 && !std::isnan(switch_period), "tuner.switch_period_s must be > 0");
    gain_bounds.validate();
}

double episode_cost(const RunSeries& series)
{
    const std::size_t n = series.ebar.size();
    return evaluate_cost(series.ebar, std::max<std::size_t>(2, n / 5));
}

EpisodicResult tune_episodic(const Scenario& scenario, const TunerConfig& config)
{
    config.validate();
    scenario.validate();
    // Bounds are estimated once; every episode reuses them through the i_min override.
    Scenario episode = scenario;
    const ClosedLoop probe(scenario);
    episode.i_min = probe.bounds().i_min;

    const Objective objective = [&](const Candidate& c) {
        Scenario s = episode;
        s.gains = to_gains(c);
        RunOptions options;
        options.keep_trace = false;
        options.horizon = config.horizon;
        return episode_cost(run(s, options).series);
    };

    JayaOptions options;
    options.population = config.population;
    options.iterations = config.iterations;
    options.seed = config.seed;
    options.bounds = config.gain_bounds.box();
    options.initial = {to_candidate(scenario.gains)};
    JayaResult r = jaya_minimize(objective, ControllerGains::kCount, options);

    EpisodicResult out;
    out.best = to_gains(r.best);
    out.best_cost = r.best_cost;
    out.history = std::move(r.history);
    for (const Candidate& c : r.initial)
        out.initial.push_back(to_gains(c));
    out.evaluations = r.evaluations;
    out.infeasible = r.infeasible;
    return out;
}

namespace {

// Drives the live run: fixed-length slots, one candidate per slot.
class OnlinePolicy final : public GainPolicy {
public:
    OnlinePolicy(const Scenario& scenario, const TunerConfig& config)
        : dt_(scenario.dt), rng_(config.seed), box_(config.gain_bounds.box())
    {
        const double steps = config.switch_period / scenario.dt;
        slot_steps_ = std::isinf(steps) || steps >= 1e15 ? 0 : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(steps)));
        JayaOptions o;
        o.population = config.population;
        o.bounds = box_;
        o.initial = {to_candidate(scenario.gains)};
        population_ = initial_population(ControllerGains::kCount, o, rng_);
        costs_.assign(population_.size(), kInf);
        begin_slot(0);
    }

    const ControllerGains& gains(std::size_t step, double) override
    {
        if (slot_steps_ != 0 && step > 0 && step % slot_steps_ == 0)
            finish_slot(step);
        return active_;
    }

    void observe(std::size_t, double ebar) override { ebar_.push_back(ebar); }

    void close(std::size_t steps)
    {
        if (ebar_.size() >= 2)
            finish_slot(steps, false);
        else
            slots_.back().t_end = static_cast<double>(steps) * dt_;
    }

    std::vector<GainSlot> take_slots() { return std::move(slots_); }
    std::vector<HistoryRow> take_history() { return std::move(history_); }

    [[nodiscard]] std::pair<ControllerGains, double> best() const
    {
        const auto [b, w] = best_and_worst(costs_);
        (void)w;
        return {to_gains(population_[b]), costs_[b]};
    }

private:
    void begin_slot(std::size_t step)
    {
        slot_begin_ = step;
        if (iteration_ == 0) {
            trial_ = population_[index_];
        } else {
            if (index_ == 0) {
                const auto [b, w] = best_and_worst(costs_);
                best_ = population_[b];
                worst_ = population_[w];
            }
            trial_ = jaya_update(population_[index_], best_, worst_, rng_, box_);
        }
        active_ = to_gains(trial_);
        GainSlot slot;
        slot.t_start = static_cast<double>(step) * dt_;
        slot.iteration = iteration_;
        slot.candidate = index_;
        slot.gains = active_;
        slots_.push_back(slot);
    }

    void finish_slot(std::size_t step, bool advance = true)
    {
        // Score on this slot's samples, borrowing the previous sample when the slot is one step long.
        const std::size_t own = step - slot_begin_;
        double cost = kInf;
        if (ebar_.size() >= 2) {
            cost = evaluate_cost(ebar_, std::max<std::size_t>(2, own));
            if (std::isnan(cost))
                cost = kInf;
        }
        GainSlot& slot = slots_.back();
        slot.t_end = static_cast<double>(step) * dt_;
        slot.cost = cost;
        if (iteration_ == 0 || cost < costs_[index_]) {
            slot.accepted = iteration_ != 0;
            population_[index_] = trial_;
            costs_[index_] = cost;
        }
        slot.best_cost = *std::min_element(costs_.begin(), costs_.end());
        if (++index_ == population_.size()) {
            const auto [b, w] = best_and_worst(costs_);
            history_.push_back({iteration_, costs_[b], costs_[w], population_[b]});
            index_ = 0;
            ++iteration_;
        }
        if (advance)
            begin_slot(step);
    }

    double dt_;
    std::size_t slot_steps_ = 0;
    UniformSource rng_;
    Box box_;
    std::vector<Candidate> population_;
    std::vector<double> costs_;
    Candidate best_, worst_, trial_;
    ControllerGains active_;
    std::size_t iteration_ = 0;
    std::size_t index_ = 0;
    std::size_t slot_begin_ = 0;
    std::vector<double> ebar_;
    std::vector<GainSlot> slots_;
    std::vector<HistoryRow> history_;
};

} // namespace

OnlineResult tune_online(const Scenario& scenario, const TunerConfig& config, const RunOptions& options)
{
    config.validate();
    require(config.switch_period >= scenario.dt, "tuner.switch_period_s must be >= sim.dt");
    OnlinePolicy policy(scenario, config);
    RunOptions o = options;
    o.policy = &policy;

    OnlineResult out;
    out.run = run(scenario, o);
    policy.close(out.run.series.t.size());
    out.slots = policy.take_slots();
    out.history = policy.take_history();
    std::tie(out.best, out.best_cost) = policy.best();
    return out;
}

} // namespace sbfc
