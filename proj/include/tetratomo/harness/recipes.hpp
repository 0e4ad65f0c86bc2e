#pragma once

// Named experiment recipes. Each recipe writes its data files plus a
// manifest.json into the configured output directory. Data files depend only
// on the configuration (thread count included in neither), so rerunning a
// recipe reproduces them byte for byte; the manifest carries wall time and a
// timestamp and is excluded from that guarantee.

#include "tetratomo/accuracy.hpp"
#include "tetratomo/estimate.hpp"
#include "tetratomo/harness/config.hpp"
#include "tetratomo/harness/io.hpp"
#include "tetratomo/povm.hpp"
#include "tetratomo/sim.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <limits>
#include <numbers>
#include <filesystem>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace tetratomo::harness {

inline constexpr std::string_view kVersion = "1.0.0";

inline Tetrahedron tetrahedron_for(const ExperimentConfig& cfg)
{
    return cfg.canonical_tetrahedron ? canonical_tetrahedron() : paper_tetrahedron();
}

/// Reference state for trace distances: the true state, or the unconstrained
/// reconstruction from a large simulated sample when `asymptote` is set.
inline DensityMatrix reference_state(const NamedState& state, const InstrumentMatrix& b, bool asymptote,
                                     std::int64_t asymptote_events, std::uint64_t seed)
{
    if (!asymptote)
        return stokes_to_density(state.stokes);
    const auto counts = asymptote_counts(state, b, asymptote_events, derive_seed(seed, state.name() + "/asymptote"));
    return stokes_to_density(linear_reconstruct(counts, b));
}

// Convergence ----------------------------------------------------------------

struct ConvergenceStep {
    std::int64_t n = 0;
    StokesVector estimate;      // nearest physical state
    double distance = 0.0;      // to the true state
    std::size_t region_members = 0;
    Vec3 max_point{};
};

struct ConvergenceTrace {
    EventStream events;
    std::vector<ConvergenceStep> steps;
    std::vector<std::pair<std::int64_t, LikelihoodRegion>> checkpoints;
};

inline std::vector<std::int64_t> default_checkpoints(std::int64_t events)
{
    std::vector<std::int64_t> out;
    for (std::int64_t n : {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000})
        if (n < events)
            out.push_back(n);
    out.push_back(events);
    return out;
}

/// Follows one event stream copy by copy: after each event the state is
/// linearly reconstructed, projected to the nearest physical state and the
/// likelihood region over pure states is recomputed.
inline ConvergenceTrace run_convergence(const NamedState& state, const InstrumentMatrix& b, std::int64_t events,
                                        std::uint64_t seed, int grid_resolution, double threshold_delta,
                                        std::span<const std::int64_t> checkpoints = {})
{
    if (state.qubit_count() != 1)
        throw UsageError("convergence runs are defined for one-qubit states");
    ConvergenceTrace trace;
    trace.events = stream_events(state, b, events, derive_seed(seed, state.name()));
    const PureStateGrid grid(b, grid_resolution);
    const DensityMatrix truth = stokes_to_density(state.stokes);
    CountVector counts(b.outcomes());
    std::size_t next_cp = 0;
    for (std::int64_t n = 1; n <= events; ++n) {
        counts.add(trace.events.outcomes[static_cast<std::size_t>(n - 1)]);
        ConvergenceStep step;
        step.n = n;
        step.estimate = project_to_physical(linear_reconstruct(counts, b));
        step.distance = trace_distance(truth, stokes_to_density(step.estimate));
        auto region = grid.evaluate(counts, threshold_delta);
        step.region_members = region.member_count();
        step.max_point = region.max_point;
        trace.steps.push_back(step);
        while (next_cp < checkpoints.size() && checkpoints[next_cp] < n)
            ++next_cp;
        if (next_cp < checkpoints.size() && checkpoints[next_cp] == n)
            trace.checkpoints.emplace_back(n, std::move(region));
    }
    return trace;
}

// Recipe bodies --------------------------------------------------------------

struct OutputFile {
    std::string name;
    std::string content;
};

struct RecipeOutput {
    std::vector<OutputFile> files;
    json summary = json::object();
};

inline std::string region_file_name(std::int64_t n)
{
    std::ostringstream os;
    os << "region_N" << std::setw(4) << std::setfill('0') << n << ".csv";
    return os.str();
}

inline RecipeOutput recipe_converge(const ExperimentConfig& cfg, const NamedState& state)
{
    const InstrumentMatrix b(tetrahedron_for(cfg), 1);
    const auto cps = default_checkpoints(*cfg.events);
    const auto trace =
        run_convergence(state, b, *cfg.events, cfg.seed, cfg.grid_resolution, cfg.threshold_delta, cps);

    RecipeOutput out;
    std::ostringstream ev;
    write_events_csv(ev, trace.events);
    out.files.push_back({"events.csv", ev.str()});

    std::ostringstream cs;
    cs << "event_index,s1,s2,s3,trace_distance,region_members,max_longitude,max_latitude,region_file\n";
    std::size_t cp = 0;
    for (const auto& st : trace.steps) {
        const double lon = std::atan2(st.max_point[1], st.max_point[0]) * 180.0 / std::numbers::pi;
        const double lat = std::asin(std::clamp(st.max_point[2], -1.0, 1.0)) * 180.0 / std::numbers::pi;
        cs << st.n << ',' << format_double(st.estimate[1]) << ',' << format_double(st.estimate[2]) << ','
           << format_double(st.estimate[3]) << ',' << format_double(st.distance) << ',' << st.region_members << ','
           << format_double(lon < 0 ? lon + 360.0 : lon) << ',' << format_double(lat) << ',';
        if (cp < trace.checkpoints.size() && trace.checkpoints[cp].first == st.n) {
            cs << region_file_name(st.n);
            ++cp;
        }
        cs << '\n';
    }
    out.files.push_back({"converge.csv", cs.str()});
    for (const auto& [n, region] : trace.checkpoints) {
        std::ostringstream rs;
        write_region_csv(rs, region);
        out.files.push_back({region_file_name(n), rs.str()});
    }
    const auto& last = trace.steps.back();
    out.summary = json{{"state", state_spec(state)},
                       {"events", *cfg.events},
                       {"final_estimate", stokes_to_json(last.estimate)},
                       {"final_trace_distance", last.distance},
                       {"final_region_members", last.region_members}};
    return out;
}

inline RecipeOutput recipe_accuracy_1q(const ExperimentConfig& cfg, std::span<const NamedState> states)
{
    const InstrumentMatrix b(tetrahedron_for(cfg), 1);
    std::vector<AccuracyCurve> curves;
    json summary = json::array();
    for (const auto& st : states) {
        const DensityMatrix truth = stokes_to_density(st.stokes);
        ExactOptions eo;
        eo.project = cfg.project;
        eo.threads = cfg.threads;
        curves.push_back(exact_curve(st, b, truth, 1, *cfg.events, eo));
        const DensityMatrix ref = reference_state(st, b, *cfg.asymptote, cfg.asymptote_events, cfg.seed);
        McOptions mo{static_cast<int>(*cfg.runs), derive_seed(cfg.seed, st.name()), cfg.project, cfg.threads};
        curves.push_back(mc_cumulative_curve(st, b, *cfg.events, ref, mo));
        summary.push_back(json{{"state", state_spec(st)},
                               {"exact_final", curves[curves.size() - 2].points().back().d_avg},
                               {"mc_final", curves.back().points().back().d_avg}});
    }
    std::ostringstream os;
    write_curves_csv(os, curves);
    RecipeOutput out;
    out.files.push_back({"accuracy_1q.csv", os.str()});
    out.summary = json{{"states", summary}};
    return out;
}

struct FitTableRow {
    NamedState state;
    AccuracyCurve curve;
    PowerLawFit fit;
};

inline std::vector<FitTableRow> compute_fit_table(const ExperimentConfig& cfg, std::span<const NamedState> states)
{
    const InstrumentMatrix b(tetrahedron_for(cfg), 1);
    std::vector<FitTableRow> rows;
    for (const auto& st : states) {
        ExactOptions eo;
        eo.project = cfg.project;
        eo.threads = cfg.threads;
        auto curve = exact_curve(st, b, stokes_to_density(st.stokes), 1, *cfg.n_max, eo);
        const auto fit = fit_power_law(curve, *cfg.n_min, *cfg.n_max);
        rows.push_back({st, std::move(curve), fit});
    }
    return rows;
}

inline RecipeOutput recipe_fit_table(const ExperimentConfig& cfg, std::span<const NamedState> states)
{
    const auto rows = compute_fit_table(cfg, states);
    std::vector<AccuracyCurve> curves;
    json fits = json::array();
    for (const auto& r : rows) {
        curves.push_back(r.curve);
        json j = fit_to_json(r.fit);
        j["state"] = state_spec(r.state);
        fits.push_back(std::move(j));
    }
    std::ostringstream os;
    write_curves_csv(os, curves);
    RecipeOutput out;
    out.files.push_back({"fit_table.csv", os.str()});
    out.files.push_back({"fit_table.json", json{{"fits", fits}}.dump(2) + "\n"});
    out.summary = json{{"fits", fits}};
    return out;
}

struct TwoQubitComparison {
    AccuracyCurve two_qubit;
    AccuracyCurve one_qubit;
    AccuracyCurve two_qubit_normalized;
    AccuracyCurve one_qubit_normalized;
    PowerLawFit fit_two_qubit;
    double ratio_min = 0.0; // normalized two-qubit / one-qubit over [n_min, events]
    double ratio_max = 0.0;
};

/// Two-qubit Monte-Carlo curve next to the horizontal one-qubit curve
/// obtained with the same protocol (runs, events, reference mode).
inline TwoQubitComparison compute_two_qubit(const ExperimentConfig& cfg, const NamedState& state)
{
    const Tetrahedron t = tetrahedron_for(cfg);
    const InstrumentMatrix b2(t, 2);
    const InstrumentMatrix b1(t, 1);
    const NamedState horizontal = NamedState::make(StateLabel::horizontal);

    auto curve_for = [&](const NamedState& st, const InstrumentMatrix& b) {
        const DensityMatrix ref = reference_state(st, b, *cfg.asymptote, cfg.asymptote_events, cfg.seed);
        McOptions mo{static_cast<int>(*cfg.runs), derive_seed(cfg.seed, st.name()), cfg.project, cfg.threads};
        return mc_cumulative_curve(st, b, *cfg.events, ref, mo);
    };
    AccuracyCurve two = curve_for(state, b2);
    AccuracyCurve one = curve_for(horizontal, b1);
    AccuracyCurve two_n = normalize_curve(two, 2);
    AccuracyCurve one_n = normalize_curve(one, 1);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < two_n.size(); ++i) {
        if (two_n[i].n < *cfg.n_min || two_n[i].n > *cfg.n_max)
            continue;
        const double r = two_n[i].d_avg / one_n[i].d_avg;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    const auto fit = fit_power_law(two, *cfg.n_min, *cfg.n_max);
    return {std::move(two), std::move(one), std::move(two_n), std::move(one_n), fit, lo, hi};
}

inline RecipeOutput recipe_accuracy_2q(const ExperimentConfig& cfg, const NamedState& state)
{
    const auto cmp = compute_two_qubit(cfg, state);
    std::vector<AccuracyCurve> curves{cmp.two_qubit, cmp.one_qubit, cmp.two_qubit_normalized,
                                      cmp.one_qubit_normalized};
    std::ostringstream os;
    write_curves_csv(os, curves);
    RecipeOutput out;
    out.files.push_back({"accuracy_2q.csv", os.str()});
    out.summary = json{{"state", state_spec(state)},
                       {"fit_two_qubit", fit_to_json(cmp.fit_two_qubit)},
                       {"normalized_ratio_min", cmp.ratio_min},
                       {"normalized_ratio_max", cmp.ratio_max}};
    out.files.push_back({"accuracy_2q.json", out.summary.dump(2) + "\n"});
    return out;
}

inline RecipeOutput recipe_custom(const ExperimentConfig& cfg, const NamedState& state)
{
    const InstrumentMatrix b(tetrahedron_for(cfg), state.qubit_count());
    const DensityMatrix ref = reference_state(state, b, *cfg.asymptote, cfg.asymptote_events, cfg.seed);
    McOptions mo{static_cast<int>(*cfg.runs), derive_seed(cfg.seed, state.name()), cfg.project, cfg.threads};
    std::vector<AccuracyCurve> curves{mc_cumulative_curve(state, b, *cfg.events, ref, mo)};
    RecipeOutput out;
    if (pattern_count(*cfg.events, b.outcomes()) <= kDefaultPatternCap) {
        ExactOptions eo;
        eo.project = cfg.project;
        eo.threads = cfg.threads;
        curves.push_back(exact_curve(state, b, stokes_to_density(state.stokes), 1, *cfg.events, eo));
    }
    json fits = json::array();
    for (const auto& c : curves) {
        if (*cfg.n_max - *cfg.n_min + 1 < 3)
            break;
        json j = fit_to_json(fit_power_law(c, *cfg.n_min, *cfg.n_max));
        j["method"] = std::string(to_string(c.method()));
        fits.push_back(std::move(j));
    }
    std::ostringstream os;
    write_curves_csv(os, curves);
    out.files.push_back({"custom.csv", os.str()});
    out.summary = json{{"state", state_spec(state)}, {"fits", fits}};
    out.files.push_back({"custom.json", out.summary.dump(2) + "\n"});
    return out;
}

// Orchestration --------------------------------------------------------------

struct RecipeResult {
    std::filesystem::path directory;
    std::vector<std::filesystem::path> files; // data files, manifest last
    json summary;
};

inline std::string utc_timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Runs a recipe and writes its files plus manifest.json into
/// cfg.output_path.
inline RecipeResult run_recipe(const ExperimentConfig& input)
{
    const ExperimentConfig cfg = apply_defaults(input);
    if (cfg.output_path.empty())
        throw UsageError("no output directory given");
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_path, ec);
    if (ec || !std::filesystem::is_directory(cfg.output_path))
        throw std::runtime_error("cannot create output directory " + cfg.output_path.string());

    std::vector<NamedState> states = cfg.state ? std::vector<NamedState>{*cfg.state} : default_states(cfg.recipe);
    const auto start = std::chrono::steady_clock::now();
    RecipeOutput out;
    switch (cfg.recipe) {
    case Recipe::converge: out = recipe_converge(cfg, states.front()); break;
    case Recipe::accuracy_1q: out = recipe_accuracy_1q(cfg, states); break;
    case Recipe::fit_table: out = recipe_fit_table(cfg, states); break;
    case Recipe::accuracy_2q: out = recipe_accuracy_2q(cfg, states.front()); break;
    case Recipe::custom: out = recipe_custom(cfg, states.front()); break;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    RecipeResult result;
    result.directory = cfg.output_path;
    result.summary = out.summary;
    json files = json::array();
    for (const auto& f : out.files) {
        const auto path = cfg.output_path / f.name;
        write_file(path, f.content);
        result.files.push_back(path);
        files.push_back(json{{"name", f.name}, {"sha256", sha256_hex(f.content)}, {"bytes", f.content.size()}});
    }
    json manifest;
    manifest["tool"] = "tetratomo";
    manifest["version"] = std::string(kVersion);
    manifest["compiler"] = __VERSION__;
    manifest["recipe"] = std::string(to_string(cfg.recipe));
    manifest["seed"] = cfg.seed;
    manifest["config"] = config_to_json(cfg);
    manifest["threads"] = resolve_threads(cfg.threads);
    manifest["created_utc"] = utc_timestamp();
    manifest["wall_time_s"] = wall;
    manifest["files"] = files;
    manifest["summary"] = out.summary;
    const auto mpath = cfg.output_path / "manifest.json";
    write_file(mpath, manifest.dump(2) + "\n");
    result.files.push_back(mpath);
    return result;
}

} // namespace tetratomo::harness
