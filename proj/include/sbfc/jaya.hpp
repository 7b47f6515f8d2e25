#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sbfc/controller.hpp"
#include "sbfc/simulation.hpp"

namespace sbfc {

using Candidate = std::vector<double>;

// Uniform draws in [0, 1) from a 64-bit Mersenne twister, built from the top 53 bits so the
// sequence is identical across standard libraries.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

// Optional per-coordinate box. Empty vectors mean unbounded on that side.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    [[nodiscard]] bool has_lower() const { return !lower.empty(); }
    [[nodiscard]] bool has_upper() const { return !upper.empty(); }
    void validate(std::size_t dim) const;
};

inline constexpr int kMaxRedraws = 16;
inline constexpr double kPositivityFallback = 1e-9;

// What one update actually drew, for auditing the update rule afterwards.
struct UpdateRecord {
    std::vector<double> r1, r2; // accepted draws per coordinate
    std::size_t redraws = 0;
    std::size_t fallbacks = 0;  // coordinates clamped to 1e-9 after 16 redraws
};

/// c + r1 (best - c) - r2 (worst - c), coordinatewise with the given draws. No positivity rule.
[[nodiscard]] Candidate jaya_move(const Candidate& c, const Candidate& best, const Candidate& worst,
                                  std::span<const double> r1, std::span<const double> r2);

/// One update with fresh (r1, r2) per coordinate. A draw is kept only if the moved coordinate
/// stays positive, i.e. c > (r2 worst - r1 best) / (1 - r1 + r2); otherwise it is redrawn up to
/// 16 times and then the coordinate falls back to 1e-9. The box is applied last.
[[nodiscard]] Candidate jaya_update(const Candidate& c, const Candidate& best, const Candidate& worst,
                                    UniformSource& rng, const Box& box = {}, UpdateRecord* record = nullptr);

// Cost of a candidate; non-finite values and sbfc::Error mark it infeasible (+inf).
using Objective = std::function<double(const Candidate&)>;

struct JayaOptions {
    std::size_t population = 2;
    std::size_t iterations = 50;
    std::uint64_t seed = 0;
    Box bounds;                     // lower and upper must both be set to sample the initial population
    std::vector<Candidate> initial; // placed first; the rest is drawn uniformly from the box
};

struct HistoryRow {
    std::size_t iteration = 0; // 0 is the initial population
    double best_cost = 0.0;
    double worst_cost = 0.0;
    Candidate best;
};

struct JayaResult {
    Candidate best;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<HistoryRow> history;
    std::vector<Candidate> initial; // population before the first update
    std::vector<Candidate> population;
    std::vector<double> costs;
    std::size_t evaluations = 0;
    std::size_t infeasible = 0;
};

/// Greedy JAYA minimisation. Best and worst are taken at the start of each iteration; each
/// candidate's offspring replaces it only on strict improvement.
[[nodiscard]] JayaResult jaya_minimize(const Objective& objective, std::size_t dim, const JayaOptions& options);

[[nodiscard]] double sphere_cost(const Candidate& c, double centre = 5.0);

enum class TunerMode { Episodic, Online };

[[nodiscard]] std::string to_string(TunerMode mode);
[[nodiscard]] TunerMode tuner_mode_from_string(const std::string& name);

struct GainBounds {
    ControllerGains lower{0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01};
    ControllerGains upper{10.0, 10.0, 200.0, 200.0, 10.0, 10.0, 10.0, 10.0};

    void validate() const;
    [[nodiscard]] Box box() const;

    bool operator==(const GainBounds&) const = default;
};

struct TunerConfig {
    TunerMode mode = TunerMode::Episodic;
    std::size_t population = 2;
    std::size_t iterations = 50;
    double horizon = 5.0;          // s, episode length
    double switch_period = 1e-4;   // s, online mode only
    std::uint64_t seed = 0;
    GainBounds gain_bounds;

    void validate() const;

    bool operator==(const TunerConfig&) const = default;
};

// Episode cost: mean + std of e_bar over the final fifth of the episode.
[[nodiscard]] double episode_cost(const RunSeries& series);

struct EpisodicResult {
    ControllerGains best;
    double best_cost = 0.0;
    std::vector<HistoryRow> history;
    std::vector<ControllerGains> initial;
    std::size_t evaluations = 0;
    std::size_t infeasible = 0;
};

/// Each candidate runs its own episode of `config.horizon` seconds on the scenario. The scenario's
/// gains (clamped to the bounds) are the first member of the initial population.
[[nodiscard]] EpisodicResult tune_episodic(const Scenario& scenario, const TunerConfig& config);

// One slot of the online tuner: gains active over [t_start, t_end).
struct GainSlot {
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t iteration = 0; // 0 while the initial population is being scored
    std::size_t candidate = 0;
    ControllerGains gains;
    double cost = 0.0;
    bool accepted = false;     // offspring replaced its parent
    double best_cost = 0.0;    // after this slot
};

struct OnlineResult {
    RunResult run;
    std::vector<GainSlot> slots;
    std::vector<HistoryRow> history; // one row per completed pass over the population
    ControllerGains best;
    double best_cost = 0.0;
};

/// Time-slices one live run: every switch_period the active gains change to the next candidate
/// (initial population first, then offspring), scored on the error norms of its own slot.
/// An infinite switch period never switches and reproduces the fixed-gain run.
[[nodiscard]] OnlineResult tune_online(const Scenario& scenario, const TunerConfig& config,
                                       const RunOptions& options = {});

} // namespace sbfc
