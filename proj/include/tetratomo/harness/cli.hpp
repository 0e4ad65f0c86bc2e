#pragma once

// Command-line front end. Exit codes: 0 success, 1 runtime error, 2 usage
// error.

#include "tetratomo/accuracy.hpp"
#include "tetratomo/estimate.hpp"
#include "tetratomo/harness/config.hpp"
#include "tetratomo/harness/io.hpp"
#include "tetratomo/harness/recipes.hpp"
#include "tetratomo/povm.hpp"
#include "tetratomo/sim.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace tetratomo::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default recipe output directory.
inline constexpr const char* kOutputDirEnv = "TETRATOMO_OUT";

/// Raw flag values shared by the subcommands.
struct CliOptions {
    std::string state;
    std::optional<std::int64_t> events;
    std::optional<std::int64_t> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> n_min;
    std::optional<std::int64_t> n_max;
    bool project = false;
    std::string out;
    std::string format;
    int qubits = 1;
    bool canonical = false;
    int threads = 0;
    std::string counts;
    std::string input;
    int grid = kDefaultGridResolution;
    double delta = kDefaultThresholdDelta;
    std::optional<std::int64_t> asymptote_events;
    bool no_asymptote = false;
    bool independent = false;
    std::string recipe;
};

/// Translates recipe flags into an ExperimentConfig (unset fields left for
/// apply_defaults).
inline ExperimentConfig config_from_options(const CliOptions& o)
{
    ExperimentConfig cfg;
    cfg.recipe = parse_recipe(o.recipe);
    if (!o.state.empty())
        cfg.state = parse_state(o.state);
    cfg.events = o.events;
    cfg.runs = o.runs;
    cfg.seed = o.seed.value_or(1);
    cfg.n_min = o.n_min;
    cfg.n_max = o.n_max;
    cfg.project = o.project;
    if (o.no_asymptote)
        cfg.asymptote = false;
    else if (o.asymptote_events)
        cfg.asymptote = true;
    cfg.asymptote_events = o.asymptote_events.value_or(kDefaultAsymptoteEvents);
    cfg.grid_resolution = o.grid;
    cfg.threshold_delta = o.delta;
    cfg.canonical_tetrahedron = o.canonical;
    cfg.threads = o.threads;
    if (!o.out.empty()) {
        cfg.output_path = o.out;
    } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
        cfg.output_path = std::filesystem::path(env) / std::string(to_string(cfg.recipe));
    } else {
        cfg.output_path = std::filesystem::path("results") / std::string(to_string(cfg.recipe));
    }
    return cfg;
}

namespace detail {

inline std::vector<std::int64_t> parse_counts(const std::string& text)
{
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size())
                throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("invalid count '" + item + "'");
        }
    }
    return out;
}

/// Writes to --out when given, otherwise to `out`.
inline void emit(const CliOptions& o, std::ostream& out, const std::string& content)
{
    if (o.out.empty())
        out << content;
    else
        write_file(o.out, content);
}

inline CountVector counts_from_options(const CliOptions& o)
{
    if (!o.counts.empty() == !o.input.empty())
        throw UsageError("give exactly one of --counts or --input");
    const int m = o.qubits == 2 ? 16 : 4;
    if (!o.counts.empty()) {
        auto v = parse_counts(o.counts);
        if (static_cast<int>(v.size()) != m)
            throw UsageError("--counts needs " + std::to_string(m) + " values");
        for (auto c : v)
            if (c < 0)
                throw UsageError("counts must be nonnegative");
        return CountVector(std::move(v));
    }
    std::ifstream in(o.input);
    if (!in)
        throw std::runtime_error("cannot read " + o.input);
    return read_events_csv(in, m);
}

inline NamedState require_state(const CliOptions& o)
{
    if (o.state.empty())
        throw UsageError("--state is required");
    return parse_state(o.state);
}

inline void check_format(const CliOptions& o, std::initializer_list<std::string_view> allowed)
{
    if (o.format.empty())
        return;
    for (auto a : allowed)
        if (o.format == a)
            return;
    throw UsageError("unsupported --format '" + o.format + "' for this command");
}

inline std::string povm_show(const CliOptions& o)
{
    check_format(o, {"csv", "json"});
    const Tetrahedron t = o.canonical ? canonical_tetrahedron() : paper_tetrahedron();
    if (o.qubits != 1 && o.qubits != 2)
        throw UsageError("--qubits must be 1 or 2");
    const InstrumentMatrix b(t, o.qubits);
    if (o.format == "json") {
        json j;
        json verts = json::array();
        for (const auto& v : t.vertices)
            verts.push_back(json::array({v[0], v[1], v[2]}));
        j["vertices"] = verts;
        json rows = json::array();
        for (int i = 0; i < b.outcomes(); ++i) {
            json row = json::array();
            for (int k = 0; k < b.outcomes(); ++k)
                row.push_back(b(i, k));
            rows.push_back(row);
        }
        j["instrument_matrix"] = rows;
        return j.dump(2) + "\n";
    }
    std::ostringstream os;
    os << "vertex,x,y,z\n";
    for (int j = 0; j < 4; ++j)
        os << (j + 1) << ',' << format_double(t.vertices[j][0]) << ',' << format_double(t.vertices[j][1]) << ','
           << format_double(t.vertices[j][2]) << '\n';
    os << '\n' << "row";
    for (int k = 0; k < b.outcomes(); ++k)
        os << ",c" << k;
    os << '\n';
    for (int i = 0; i < b.outcomes(); ++i) {
        os << i;
        for (int k = 0; k < b.outcomes(); ++k)
            os << ',' << format_double(b(i, k));
        os << '\n';
    }
    return os.str();
}

inline std::string simulate(const CliOptions& o)
{
    check_format(o, {"csv"});
    const NamedState st = require_state(o);
    if (!o.events)
        throw UsageError("--events is required");
    const InstrumentMatrix b(o.canonical ? canonical_tetrahedron() : paper_tetrahedron(), st.qubit_count());
    const auto stream = stream_events(st, b, *o.events, o.seed.value_or(1));
    std::ostringstream os;
    write_events_csv(os, stream);
    return os.str();
}

inline std::string reconstruct(const CliOptions& o)
{
    check_format(o, {"json", "csv"});
    const CountVector counts = counts_from_options(o);
    const InstrumentMatrix b(o.canonical ? canonical_tetrahedron() : paper_tetrahedron(), o.qubits);
    const StokesVector s = linear_reconstruct(counts, b);
    const StokesVector out = o.project ? project_to_physical(s) : s;
    if (o.format == "csv") {
        std::ostringstream os;
        for (std::size_t i = 0; i < out.size(); ++i)
            os << (i ? "," : "") << 's' << i;
        os << '\n';
        for (std::size_t i = 0; i < out.size(); ++i)
            os << (i ? "," : "") << format_double(out[i]);
        os << '\n';
        return os.str();
    }
    json j;
    j["qubits"] = out.qubit_count();
    j["total"] = counts.total();
    j["stokes"] = stokes_to_json(out);
    j["projected"] = o.project;
    j["physical"] = out.is_physical();
    return j.dump(2) + "\n";
}

inline std::string region(const CliOptions& o)
{
    check_format(o, {"csv"});
    if (o.qubits != 1)
        throw UsageError("likelihood regions are one-qubit only");
    const CountVector counts = counts_from_options(o);
    const InstrumentMatrix b(o.canonical ? canonical_tetrahedron() : paper_tetrahedron(), 1);
    if (o.grid < 16)
        throw UsageError("--grid must be at least 16");
    if (!(o.delta > 0.0))
        throw UsageError("--delta must be positive");
    const auto r = likelihood_region(counts, b, o.grid, o.delta);
    std::ostringstream os;
    write_region_csv(os, r);
    return os.str();
}

inline std::string curves_output(const CliOptions& o, const std::vector<AccuracyCurve>& curves)
{
    if (o.format == "json") {
        json arr = json::array();
        for (const auto& c : curves)
            for (const auto& pt : c.points())
                arr.push_back(json{{"N", pt.n},
                                   {"d_avg", pt.d_avg},
                                   {"std_error", pt.std_error},
                                   {"method", std::string(to_string(c.method()))},
                                   {"state", c.state_label()},
                                   {"normalized", c.normalized()}});
        return arr.dump(2) + "\n";
    }
    std::ostringstream os;
    write_curves_csv(os, curves);
    return os.str();
}

inline std::string accuracy_exact(const CliOptions& o, std::ostream& err)
{
    check_format(o, {"csv", "json"});
    if (o.seed)
        err << "warning: --seed has no effect on exact enumeration\n";
    const NamedState st = require_state(o);
    const std::int64_t n_min = o.n_min.value_or(1);
    const std::int64_t n_max = o.n_max.value_or(o.events.value_or(150));
    if (n_min < 1 || n_max < n_min)
        throw UsageError("need 1 <= nmin <= nmax");
    const InstrumentMatrix b(o.canonical ? canonical_tetrahedron() : paper_tetrahedron(), st.qubit_count());
    ExactOptions eo;
    eo.project = o.project;
    eo.threads = o.threads;
    const auto curve = exact_curve(st, b, stokes_to_density(st.stokes), n_min, n_max, eo);
    return curves_output(o, {curve});
}

inline std::string accuracy_mc(const CliOptions& o)
{
    check_format(o, {"csv", "json"});
    const NamedState st = require_state(o);
    const std::int64_t events = o.events.value_or(150);
    const std::int64_t runs = o.runs.value_or(40);
    if (events < 1)
        throw UsageError("--events must be positive");
    if (runs < 2)
        throw UsageError("--runs must be at least 2");
    const std::uint64_t seed = o.seed.value_or(1);
    const InstrumentMatrix b(o.canonical ? canonical_tetrahedron() : paper_tetrahedron(), st.qubit_count());
    const bool asym = o.asymptote_events.has_value() && !o.no_asymptote;
    const DensityMatrix ref = reference_state(st, b, asym, o.asymptote_events.value_or(kDefaultAsymptoteEvents), seed);
    const McOptions mo{static_cast<int>(runs), derive_seed(seed, st.name()), o.project, o.threads};
    if (o.independent) {
        const auto est = average_trace_distance_mc(st.stokes, b, events, ref, mo);
        AccuracyCurve c(CurveMethod::monte_carlo, st.name());
        c.push_back({events, est.mean, est.std_error});
        return curves_output(o, {c});
    }
    const auto full = mc_cumulative_curve(st, b, events, ref, mo);
    AccuracyCurve c(CurveMethod::monte_carlo, st.name());
    for (const auto& pt : full.points())
        if (pt.n >= o.n_min.value_or(1) && pt.n <= o.n_max.value_or(events))
            c.push_back(pt);
    return curves_output(o, {c});
}

inline std::string fit(const CliOptions& o)
{
    check_format(o, {"json"});
    if (o.input.empty())
        throw UsageError("--input curve CSV is required");
    std::ifstream in(o.input);
    if (!in)
        throw std::runtime_error("cannot read " + o.input);
    auto curves = read_curves_csv(in);
    if (!o.state.empty())
        std::erase_if(curves, [&](const AccuracyCurve& c) { return c.state_label() != o.state; });
    if (curves.size() != 1)
        throw UsageError("input holds " + std::to_string(curves.size()) +
                         " curves; select one with --state");
    const auto f = fit_power_law(curves.front(), o.n_min.value_or(10), o.n_max.value_or(150));
    return fit_to_json(f).dump(2) + "\n";
}

inline std::string recipe(const CliOptions& o, std::ostream& err)
{
    check_format(o, {"csv"});
    const auto result = run_recipe(config_from_options(o));
    std::ostringstream os;
    for (const auto& f : result.files)
        os << f.string() << '\n';
    err << "recipe " << o.recipe << " wrote " << result.files.size() << " files to " << result.directory.string()
        << '\n';
    return os.str();
}

} // namespace detail

/// Parses `args` (without the program name) and runs the selected command.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Tetrahedron-measurement qubit tomography toolkit", "tomo"};
    app.require_subcommand(1);
    CliOptions o;

    auto add_state = [&](CLI::App* c) {
        c->add_option("--state", o.state, "unpolarized|horizontal|b1r|minus_b1r|bell_psi_plus|custom:s0,s1,...");
    };
    auto add_out = [&](CLI::App* c, const char* what) { c->add_option("--out", o.out, what); };
    auto add_format = [&](CLI::App* c) { c->add_option("--format", o.format, "csv or json"); };
    auto add_tetra = [&](CLI::App* c) {
        c->add_flag("--canonical", o.canonical, "use the cube-corner tetrahedron instead of the default frame");
    };
    auto add_threads = [&](CLI::App* c) { c->add_option("--threads", o.threads, "worker threads (0 = all cores)"); };

    auto* povm = app.add_subcommand("povm", "measurement geometry");
    auto* show = povm->add_subcommand("show", "print tetrahedron vertices and instrument matrix");
    povm->require_subcommand(1);
    show->add_option("--qubits", o.qubits, "1 or 2");
    add_tetra(show);
    add_format(show);
    add_out(show, "output file");

    auto* sim = app.add_subcommand("simulate", "emit a simulated event stream as CSV");
    add_state(sim);
    sim->add_option("--events", o.events, "number of detected copies");
    sim->add_option("--seed", o.seed, "random seed");
    add_tetra(sim);
    add_format(sim);
    add_out(sim, "output file");

    auto* rec = app.add_subcommand("reconstruct", "linear reconstruction from counts");
    rec->add_option("--counts", o.counts, "comma-separated detector counts");
    rec->add_option("--input", o.input, "event stream CSV");
    rec->add_option("--qubits", o.qubits, "1 or 2");
    rec->add_flag("--project", o.project, "project onto the nearest physical state");
    add_tetra(rec);
    add_format(rec);
    add_out(rec, "output file");

    auto* reg = app.add_subcommand("region", "likelihood grid over pure states as CSV");
    reg->add_option("--counts", o.counts, "comma-separated detector counts");
    reg->add_option("--input", o.input, "event stream CSV");
    reg->add_option("--grid", o.grid, "grid resolution R (R*R points)");
    reg->add_option("--delta", o.delta, "log-likelihood threshold below the maximum");
    add_tetra(reg);
    add_format(reg);
    add_out(reg, "output file");

    auto* acc = app.add_subcommand("accuracy", "average trace distance curves");
    acc->require_subcommand(1);
    auto* exact = acc->add_subcommand("exact", "exact multinomial enumeration");
    add_state(exact);
    exact->add_option("--events", o.events, "largest N (alias of --nmax)");
    exact->add_option("--nmin", o.n_min, "smallest N");
    exact->add_option("--nmax", o.n_max, "largest N");
    exact->add_option("--seed", o.seed, "ignored");
    exact->add_flag("--project", o.project, "project estimates onto physical states");
    add_threads(exact);
    add_tetra(exact);
    add_format(exact);
    add_out(exact, "output file");

    auto* mc = acc->add_subcommand("mc", "Monte-Carlo estimate");
    add_state(mc);
    mc->add_option("--events", o.events, "copies per run");
    mc->add_option("--runs", o.runs, "number of runs");
    mc->add_option("--seed", o.seed, "master seed");
    mc->add_option("--nmin", o.n_min, "first N to report");
    mc->add_option("--nmax", o.n_max, "last N to report");
    mc->add_option("--asymptote", o.asymptote_events, "reference from a simulated sample of this size");
    mc->add_flag("--independent", o.independent, "independent count vectors at N = events only");
    mc->add_flag("--project", o.project, "project estimates onto physical states");
    add_threads(mc);
    add_tetra(mc);
    add_format(mc);
    add_out(mc, "output file");

    auto* fitc = app.add_subcommand("fit", "power-law fit of a curve CSV");
    fitc->add_option("--input", o.input, "curve CSV")->required();
    add_state(fitc);
    fitc->add_option("--nmin", o.n_min, "fit range start (default 10)");
    fitc->add_option("--nmax", o.n_max, "fit range end (default 150)");
    add_format(fitc);
    add_out(fitc, "output file");

    auto* rc = app.add_subcommand("recipe", "run a named experiment");
    rc->add_option("name", o.recipe, "converge|accuracy_1q|fit_table|accuracy_2q|custom")->required();
    add_state(rc);
    rc->add_option("--events", o.events, "copies per run");
    rc->add_option("--runs", o.runs, "number of runs");
    rc->add_option("--seed", o.seed, "master seed");
    rc->add_option("--nmin", o.n_min, "fit/comparison range start");
    rc->add_option("--nmax", o.n_max, "fit/comparison range end");
    rc->add_flag("--project", o.project, "project estimates onto physical states");
    rc->add_option("--asymptote-events", o.asymptote_events, "size of the simulated asymptote sample");
    rc->add_flag("--no-asymptote", o.no_asymptote, "use the true state as reference");
    rc->add_option("--grid", o.grid, "likelihood grid resolution");
    rc->add_option("--delta", o.delta, "likelihood region threshold");
    add_threads(rc);
    add_tetra(rc);
    add_format(rc);
    add_out(rc, std::string("output directory (default $" + std::string(kOutputDirEnv) + "/<recipe> or results/<recipe>)").c_str());

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (show->parsed())
            detail::emit(o, out, detail::povm_show(o));
        else if (sim->parsed())
            detail::emit(o, out, detail::simulate(o));
        else if (rec->parsed())
            detail::emit(o, out, detail::reconstruct(o));
        else if (reg->parsed())
            detail::emit(o, out, detail::region(o));
        else if (exact->parsed())
            detail::emit(o, out, detail::accuracy_exact(o, err));
        else if (mc->parsed())
            detail::emit(o, out, detail::accuracy_mc(o));
        else if (fitc->parsed())
            detail::emit(o, out, detail::fit(o));
        else if (rc->parsed())
            out << detail::recipe(o, err);
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace tetratomo::harness
