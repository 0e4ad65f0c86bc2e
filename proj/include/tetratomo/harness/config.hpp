#pragma once

#include "tetratomo/estimate.hpp"
#include "tetratomo/qstate.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tetratomo::harness {

/// Bad user input (flags, state strings, recipe/state combinations).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Recipe { converge, accuracy_1q, fit_table, accuracy_2q, custom };

inline std::string_view to_string(Recipe r) noexcept
{
    switch (r) {
    case Recipe::converge: return "converge";
    case Recipe::accuracy_1q: return "accuracy_1q";
    case Recipe::fit_table: return "fit_table";
    case Recipe::accuracy_2q: return "accuracy_2q";
    case Recipe::custom: return "custom";
    }
    return "custom";
}

inline Recipe parse_recipe(std::string_view name)
{
    for (auto r : {Recipe::converge, Recipe::accuracy_1q, Recipe::fit_table, Recipe::accuracy_2q, Recipe::custom})
        if (to_string(r) == name)
            return r;
    throw UsageError("unknown recipe '" + std::string(name) +
                     "' (expected converge, accuracy_1q, fit_table, accuracy_2q or custom)");
}

/// Parses a state name or `custom:<s0>,<s1>,...` with 4 or 16 components.
/// The result is checked to be normalized and physical.
inline NamedState parse_state(std::string_view text)
{
    constexpr std::string_view prefix = "custom:";
    if (text.substr(0, prefix.size()) == prefix) {
        std::vector<double> comps;
        std::string_view rest = text.substr(prefix.size());
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string item(rest.substr(0, comma));
            try {
                std::size_t used = 0;
                comps.push_back(std::stod(item, &used));
                if (used != item.size())
                    throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw UsageError("invalid Stokes component '" + item + "'");
            }
            if (comma == std::string_view::npos)
                break;
            rest = rest.substr(comma + 1);
        }
        if (comps.size() != 4 && comps.size() != 16)
            throw UsageError("custom state needs 4 or 16 Stokes components, got " + std::to_string(comps.size()));
        const StokesVector s{std::span<const double>(comps)};
        if (!s.is_normalized())
            throw UsageError("custom state must have S0 = 1");
        if (!s.is_physical())
            throw UsageError("custom state is not physical");
        return NamedState::custom(s);
    }
    const auto label = parse_state_label(text);
    if (!label || *label == StateLabel::custom)
        throw UsageError("unknown state '" + std::string(text) +
                         "' (expected unpolarized, horizontal, b1r, minus_b1r, bell_psi_plus or custom:...)");
    return NamedState::make(*label);
}

inline std::string state_spec(const NamedState& s)
{
    if (s.label != StateLabel::custom)
        return s.name();
    std::string out = "custom:";
    for (std::size_t i = 0; i < s.stokes.size(); ++i) {
        if (i)
            out += ',';
        out += std::to_string(s.stokes[i]);
    }
    return out;
}

inline constexpr std::int64_t kDefaultAsymptoteEvents = 500'000;
inline constexpr int kDefaultGridResolution = 64;

struct ExperimentConfig {
    Recipe recipe = Recipe::custom;
    std::optional<NamedState> state;
    std::optional<std::int64_t> events;
    std::optional<std::int64_t> runs;
    std::uint64_t seed = 1;
    std::optional<std::int64_t> n_min;
    std::optional<std::int64_t> n_max;
    std::filesystem::path output_path;
    bool project = false;
    std::optional<bool> asymptote;
    std::int64_t asymptote_events = kDefaultAsymptoteEvents;
    int grid_resolution = kDefaultGridResolution;
    double threshold_delta = kDefaultThresholdDelta;
    bool canonical_tetrahedron = false;
    int threads = 0;
};

/// States a recipe covers when no state is given.
inline std::vector<NamedState> default_states(Recipe r)
{
    using L = StateLabel;
    switch (r) {
    case Recipe::converge: return {NamedState::make(L::b1r)};
    case Recipe::accuracy_1q: return {NamedState::make(L::unpolarized), NamedState::make(L::b1r),
                                      NamedState::make(L::minus_b1r)};
    case Recipe::fit_table: return {NamedState::make(L::unpolarized), NamedState::make(L::horizontal),
                                    NamedState::make(L::b1r), NamedState::make(L::minus_b1r)};
    case Recipe::accuracy_2q: return {NamedState::make(L::bell_psi_plus)};
    case Recipe::custom: return {};
    }
    return {};
}

/// Fills every unset field with the recipe's defaults and validates the
/// combination.
inline ExperimentConfig apply_defaults(ExperimentConfig cfg)
{
    switch (cfg.recipe) {
    case Recipe::converge:
        cfg.events = cfg.events.value_or(200);
        cfg.runs = cfg.runs.value_or(1);
        cfg.asymptote = cfg.asymptote.value_or(false);
        break;
    case Recipe::accuracy_1q:
        cfg.events = cfg.events.value_or(150);
        cfg.runs = cfg.runs.value_or(40);
        cfg.asymptote = cfg.asymptote.value_or(true);
        break;
    case Recipe::fit_table:
        cfg.n_min = cfg.n_min.value_or(10);
        cfg.n_max = cfg.n_max.value_or(cfg.events.value_or(150));
        cfg.events = cfg.events.value_or(*cfg.n_max);
        cfg.runs = cfg.runs.value_or(0);
        cfg.asymptote = cfg.asymptote.value_or(false);
        break;
    case Recipe::accuracy_2q:
        cfg.events = cfg.events.value_or(5000);
        cfg.runs = cfg.runs.value_or(5);
        cfg.asymptote = cfg.asymptote.value_or(true);
        cfg.n_min = cfg.n_min.value_or(100);
        break;
    case Recipe::custom:
        cfg.events = cfg.events.value_or(150);
        cfg.runs = cfg.runs.value_or(40);
        cfg.asymptote = cfg.asymptote.value_or(false);
        break;
    }
    cfg.n_min = cfg.n_min.value_or(std::min<std::int64_t>(10, *cfg.events));
    cfg.n_max = cfg.n_max.value_or(*cfg.events);

    if (*cfg.events < 1)
        throw UsageError("--events must be positive");
    if (*cfg.n_min < 1 || *cfg.n_max < *cfg.n_min)
        throw UsageError("need 1 <= nmin <= nmax");
    if (cfg.recipe != Recipe::converge && cfg.recipe != Recipe::fit_table && *cfg.runs < 2)
        throw UsageError("--runs must be at least 2 for Monte-Carlo recipes");
    if (cfg.grid_resolution < 16)
        throw UsageError("grid resolution must be at least 16");
    if (!(cfg.threshold_delta > 0.0))
        throw UsageError("threshold delta must be positive");
    if (*cfg.asymptote && cfg.asymptote_events < 1)
        throw UsageError("asymptote event count must be positive");
    if (cfg.recipe == Recipe::custom && !cfg.state)
        throw UsageError("recipe custom needs --state");

    if (cfg.state) {
        const int q = cfg.state->qubit_count();
        const bool wants_two = cfg.recipe == Recipe::accuracy_2q;
        const bool wants_one = cfg.recipe == Recipe::converge || cfg.recipe == Recipe::accuracy_1q ||
                               cfg.recipe == Recipe::fit_table;
        if ((wants_two && q != 2) || (wants_one && q != 1))
            throw UsageError("state '" + state_spec(*cfg.state) + "' does not fit recipe " +
                             std::string(to_string(cfg.recipe)));
    }
    return cfg;
}

} // namespace tetratomo::harness
