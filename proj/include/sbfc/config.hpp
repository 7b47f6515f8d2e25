#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sbfc/jaya.hpp"
#include "sbfc/simulation.hpp"

namespace sbfc {

// Objective the tune command optimises: closed-loop episodes, or the convex check function.
enum class TunerObjective { Simulation, Sphere };

struct RunSetup {
    Scenario scenario;
    TunerConfig tuner;
    TunerObjective objective = TunerObjective::Simulation;

    bool operator==(const RunSetup&) const = default;
};

// key=value as given to --set. Keys are dotted paths with optional [i] indices.
struct Override {
    std::string key;
    std::string value;
};

[[nodiscard]] Override parse_override(const std::string& text);

[[nodiscard]] std::vector<std::string> preset_names();
// Throws ValidationError for an unknown name.
[[nodiscard]] RunSetup preset(std::string_view name);

/**
 * Builds a validated setup from YAML text. Layering, later wins:
 * preset (or all defaults), the document, then each override in order.
 * Unknown keys and malformed values throw ParseError; invariant violations
 * throw ValidationError or ScheduleConflict.
 */
[[nodiscard]] RunSetup parse_setup(std::string_view yaml_text, const std::vector<Override>& overrides = {},
                                   std::string_view preset_name = {});

[[nodiscard]] RunSetup load_setup(const std::string& path, const std::vector<Override>& overrides = {},
                                  std::string_view preset_name = {});

/// Complete YAML document for the setup; parse_setup(emit_setup(s)) == s.
[[nodiscard]] std::string emit_setup(const RunSetup& setup);

// `gains:` block alone, accepted by parse_setup.
[[nodiscard]] std::string emit_gains(const ControllerGains& gains);

} // namespace sbfc
