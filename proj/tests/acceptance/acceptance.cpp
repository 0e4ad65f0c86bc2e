// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any criterion fails. Tolerances are fixed here and never tuned.

#include "tetratomo/harness/recipes.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace tetratomo;
using namespace tetratomo::harness;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::filesystem::path scratch(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("tetratomo_acceptance_" + name);
    std::filesystem::remove_all(p);
    return p;
}

const InstrumentMatrix& b1()
{
    static const InstrumentMatrix b(paper_tetrahedron(), 1);
    return b;
}

const std::vector<StateLabel> kOneQubitStates{StateLabel::unpolarized, StateLabel::horizontal, StateLabel::b1r,
                                              StateLabel::minus_b1r};

// Curves from criterion 1, reused by criterion 5.
std::vector<AccuracyCurve> g_fit_table_curves;

Outcome fit_table_reproduction()
{
    struct Expected {
        const char* state;
        double a, c;
    };
    const Expected table[] = {
        {"unpolarized", 1.417, 0.506}, {"horizontal", 1.312, 0.505}, {"b1r", 1.323, 0.505}, {"minus_b1r", 1.288, 0.506}};

    ExperimentConfig cfg;
    cfg.recipe = Recipe::fit_table;
    cfg.n_min = 10;
    cfg.n_max = 150;
    cfg.output_path = scratch("fit_table");
    const auto res = run_recipe(cfg);
    const auto j = json::parse(read_file(res.directory / "fit_table.json"));
    {
        std::ifstream in(res.directory / "fit_table.csv");
        g_fit_table_curves = read_curves_csv(in);
    }

    Outcome o{true, ""};
    for (const auto& e : table) {
        bool found = false;
        for (const auto& f : j["fits"]) {
            if (f["state"] != e.state)
                continue;
            found = true;
            const double a = f["a"], c = f["c"];
            const bool ok = std::abs(a - e.a) <= 0.05 && std::abs(c - e.c) <= 0.01;
            o.pass &= ok;
            o.detail += fmt("%s a=%.4f c=%.4f; ", e.state, a, c);
        }
        o.pass &= found;
    }
    return o;
}

// Soft property: exact curves are expected to decrease with N, but this is
// reported rather than asserted.
std::string monotonicity_note()
{
    std::string out;
    for (const auto& c : g_fit_table_curves) {
        int rises = 0;
        for (std::size_t i = 1; i < c.size(); ++i)
            rises += c[i].d_avg > c[i - 1].d_avg;
        out += fmt("%s %d increases; ", c.state_label().c_str(), rises);
    }
    return out;
}

Outcome exact_single_event()
{
    const auto s = NamedState::make(StateLabel::unpolarized).stokes;
    const double d = average_trace_distance_exact(s, b1(), 1, stokes_to_density(s));
    return {std::abs(d - 1.5) <= 1e-12, fmt("D(1)=%.17g", d)};
}

Outcome oracle_equivalence()
{
    double worst = 0.0;
    for (auto label : kOneQubitStates) {
        const auto s = NamedState::make(label).stokes;
        const auto ref = stokes_to_density(s);
        for (std::int64_t n = 1; n <= 8; ++n)
            worst = std::max(worst, std::abs(average_trace_distance_exact(s, b1(), n, ref) -
                                             brute_force_average(s, b1(), n, ref)));
    }
    // 16^N sequences: N = 5 is the largest count that brute force covers in
    // seconds; the one-qubit states take the full N = 1..8.
    constexpr std::int64_t kBellMaxN = 5;
    const InstrumentMatrix b2(paper_tetrahedron(), 2);
    const auto bell = NamedState::make(StateLabel::bell_psi_plus).stokes;
    const auto ref = stokes_to_density(bell);
    for (std::int64_t n = 1; n <= kBellMaxN; ++n)
        worst = std::max(worst, std::abs(average_trace_distance_exact(bell, b2, n, ref) -
                                         brute_force_average(bell, b2, n, ref, 1u << 20)));
    return {worst <= 1e-12, fmt("max |enum - brute| = %.3g (one-qubit N<=8, bell N<=%d)", worst, int(kBellMaxN))};
}

Outcome mc_consistency()
{
    Outcome o{true, ""};
    for (auto label : {StateLabel::unpolarized, StateLabel::b1r}) {
        const auto s = NamedState::make(label).stokes;
        const auto ref = stokes_to_density(s);
        for (std::int64_t n : {5, 20, 100}) {
            const double exact = average_trace_distance_exact(s, b1(), n, ref);
            int within = 0;
            for (std::uint64_t seed = 1; seed <= 100; ++seed) {
                McOptions mo;
                mo.runs = 100000;
                mo.seed = seed;
                const auto mc = average_trace_distance_mc(s, b1(), n, ref, mo);
                within += std::abs(mc.mean - exact) <= 3.0 * mc.std_error;
            }
            o.pass &= within >= 99;
            o.detail += fmt("%s/N=%d %d/100; ", std::string(to_string(label)).c_str(), int(n), within);
        }
    }
    return o;
}

Outcome state_ordering()
{
    const AccuracyCurve* up = nullptr;
    const AccuracyCurve* down = nullptr;
    for (const auto& c : g_fit_table_curves) {
        if (c.state_label() == "b1r")
            up = &c;
        if (c.state_label() == "minus_b1r")
            down = &c;
    }
    if (up == nullptr || down == nullptr)
        return {false, "fit_table curves missing"};
    int violations = 0;
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::int64_t n = 2; n <= 150; ++n) {
        const double gap = up->at(n) - down->at(n);
        if (gap < 0.0 || (n >= 3 && gap <= 0.0))
            ++violations;
        if (n >= 3)
            min_gap = std::min(min_gap, gap);
    }
    return {violations == 0, fmt("violations=%d, min gap for N>=3 = %.3g", violations, min_gap)};
}

Outcome unbiasedness()
{
    double worst = 0.0;
    for (auto label : kOneQubitStates)
        for (std::int64_t n : {1, 5, 25}) {
            const auto s = NamedState::make(label).stokes;
            const auto mean = mean_linear_estimate(s, b1(), n);
            for (int i = 0; i < 4; ++i)
                worst = std::max(worst, std::abs(mean[i] - s[i]));
        }
    return {worst <= 1e-10, fmt("max deviation %.3g", worst)};
}

Outcome geometry()
{
    const auto t = paper_tetrahedron();
    double worst = tetrahedron_defect(t);
    // frame completeness: sum_j b_j b_j^T = (4/3) I
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (const auto& v : t.vertices)
                s += v[r] * v[c];
            worst = std::max(worst, std::abs(s - (r == c ? 4.0 / 3.0 : 0.0)));
        }
    const auto b1r = NamedState::make(StateLabel::b1r).stokes;
    const bool first = t.vertices[0][0] == b1r[1] && t.vertices[0][1] == b1r[2] && t.vertices[0][2] == b1r[3] &&
                       t.vertices[0][0] == std::sqrt(1.0 / 3.0) && t.vertices[0][1] == std::sqrt(2.0 / 3.0) &&
                       t.vertices[0][2] == 0.0;
    return {worst <= 1e-12 && first, fmt("max invariant defect %.3g, b1 exact=%s", worst, first ? "yes" : "no")};
}

Outcome two_qubit_scaling()
{
    ExperimentConfig cfg;
    cfg.recipe = Recipe::accuracy_2q;
    cfg.seed = 1;
    cfg.n_min = 100;
    cfg.n_max = 5000;
    const auto full = apply_defaults(cfg);
    const auto cmp = compute_two_qubit(full, NamedState::make(StateLabel::bell_psi_plus));
    const bool overlap = cmp.ratio_min >= 1.0 / 1.5 && cmp.ratio_max <= 1.5;
    const double c = cmp.fit_two_qubit.c;
    const bool slope = c >= 0.45 && c <= 0.55;
    return {overlap && slope, fmt("normalized ratio in [%.3f, %.3f] (need [0.667, 1.5]), c=%.4f (need [0.45, 0.55])",
                                  cmp.ratio_min, cmp.ratio_max, c)};
}

Outcome convergence()
{
    const auto state = NamedState::make(StateLabel::b1r);
    std::vector<double> members10, members200;
    int closer = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto trace = run_convergence(state, b1(), 200, seed, 64, 3.0);
        const auto& s10 = trace.steps[9];
        const auto& s200 = trace.steps[199];
        members10.push_back(static_cast<double>(s10.region_members));
        members200.push_back(static_cast<double>(s200.region_members));
        closer += s200.distance < s10.distance;
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return 0.5 * (v[49] + v[50]);
    };
    const double m10 = median(members10), m200 = median(members200);
    return {m200 < m10 && closer >= 90,
            fmt("median members N=10: %.1f, N=200: %.1f; closer at N=200 in %d/100 seeds", m10, m200, closer)};
}

Outcome determinism()
{
    Outcome o{true, ""};
    for (auto r : {Recipe::converge, Recipe::accuracy_1q, Recipe::accuracy_2q}) {
        ExperimentConfig cfg;
        cfg.recipe = r;
        cfg.seed = 7;
        std::vector<std::vector<std::string>> contents;
        for (int threads : {1, 4, 4}) {
            cfg.threads = threads;
            cfg.output_path = scratch(std::string(to_string(r)) + "_" + std::to_string(contents.size()));
            const auto res = run_recipe(cfg);
            std::vector<std::string> files;
            for (const auto& f : res.files)
                if (f.extension() == ".csv")
                    files.push_back(read_file(f));
            contents.push_back(std::move(files));
        }
        const bool same = contents[0] == contents[1] && contents[1] == contents[2] && !contents[0].empty();
        o.pass &= same;
        o.detail += fmt("%s %zu csv %s; ", std::string(to_string(r)).c_str(), contents[0].size(),
                        same ? "identical" : "DIFFER");
    }
    return o;
}

} // namespace

// Usage: acceptance [--allow-fail ID]... [--only ID]...
// --allow-fail keeps a criterion's [FAIL] line but leaves it out of the exit
// status; --only restricts the run to the listed criteria.
int main(int argc, char** argv)
{
    std::set<int> allowed, only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if ((arg == "--allow-fail" || arg == "--only") && i + 1 < argc)
            (arg == "--only" ? only : allowed).insert(std::atoi(argv[++i]));
        else {
            std::cerr << "usage: acceptance [--allow-fail ID]... [--only ID]...\n";
            return 2;
        }
    }

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria{
        {1, "power-law fit table", fit_table_reproduction},
        {2, "exact N=1 value", exact_single_event},
        {3, "enumeration equals brute force", oracle_equivalence},
        {4, "Monte Carlo agrees with exact", mc_consistency},
        {5, "anti-aligned state is never worse", state_ordering},
        {6, "linear estimator unbiased", unbiasedness},
        {7, "tetrahedron geometry", geometry},
        {8, "two-qubit scaling", two_qubit_scaling},
        {9, "convergence over seeds", convergence},
        {10, "byte-identical reruns", determinism},
    };
    // Lines go to stdout and to acceptance_report.txt in the working directory.
    std::ostringstream report;
    auto line = [&](const std::string& text) {
        std::cout << text << std::endl;
        report << text << '\n';
    };
    int failures = 0, blocking = 0, ran = 0;
    for (const auto& c : criteria) {
        // criterion 5 reads the curves produced by criterion 1
        if (!only.empty() && !only.contains(c.id) && !(c.id == 1 && only.contains(5)))
            continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.pass;
        blocking += !o.pass && !allowed.contains(c.id);
        line((o.pass ? "[PASS] " : "[FAIL] ") + std::to_string(c.id) + ". " + c.name + " -- " + o.detail +
             fmt(" (%.1fs)", secs) + (!o.pass && allowed.contains(c.id) ? " [known failure]" : ""));
        if (c.id == 5)
            line("[INFO] exact curves N=1..150 monotone check -- " + monotonicity_note());
    }
    line(std::to_string(ran - failures) + "/" + std::to_string(ran) + " criteria passed");
    std::ofstream("acceptance_report.txt") << report.str();
    return blocking == 0 ? 0 : 1;
}
