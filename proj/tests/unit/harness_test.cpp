#include "tetratomo/harness/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sys/wait.h>

using namespace tetratomo;
using namespace tetratomo::harness;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path fresh_dir(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("tetratomo_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

TEST(ParseState, NamesAndCustom)
{
    EXPECT_EQ(parse_state("b1r").label, StateLabel::b1r);
    EXPECT_EQ(parse_state("bell_psi_plus").qubit_count(), 2);
    const auto c = parse_state("custom:1,0,0.5,0");
    EXPECT_EQ(c.label, StateLabel::custom);
    EXPECT_EQ(c.stokes, (StokesVector{1.0, 0.0, 0.5, 0.0}));
    EXPECT_EQ(parse_state(state_spec(c)).stokes, c.stokes);
}

TEST(ParseState, Rejections)
{
    EXPECT_THROW(parse_state("vertical"), UsageError);
    EXPECT_THROW(parse_state("custom:1,0,0"), UsageError);
    EXPECT_THROW(parse_state("custom:2,0,0,0"), UsageError);
    EXPECT_THROW(parse_state("custom:1,1,1,0"), UsageError);
    EXPECT_THROW(parse_state("custom:1,x,0,0"), UsageError);
}

TEST(ApplyDefaults, RecipeDefaults)
{
    ExperimentConfig c;
    c.recipe = Recipe::accuracy_2q;
    const auto d = apply_defaults(c);
    EXPECT_EQ(*d.events, 5000);
    EXPECT_EQ(*d.runs, 5);
    EXPECT_TRUE(*d.asymptote);
    EXPECT_EQ(*d.n_min, 100);

    c.recipe = Recipe::fit_table;
    const auto f = apply_defaults(c);
    EXPECT_EQ(*f.n_min, 10);
    EXPECT_EQ(*f.n_max, 150);
}

TEST(ApplyDefaults, Validation)
{
    ExperimentConfig c;
    c.recipe = Recipe::custom;
    EXPECT_THROW(apply_defaults(c), UsageError);
    c.recipe = Recipe::accuracy_2q;
    c.state = NamedState::make(StateLabel::horizontal);
    EXPECT_THROW(apply_defaults(c), UsageError);
    c.recipe = Recipe::accuracy_1q;
    c.runs = 1;
    EXPECT_THROW(apply_defaults(c), UsageError);
    c.runs = 10;
    c.events = 0;
    EXPECT_THROW(apply_defaults(c), UsageError);
}

TEST(CurveCsv, RoundTrip)
{
    AccuracyCurve a(CurveMethod::exact, "b1r");
    a.push_back({1, 1.3660254037844386, 0.0});
    a.push_back({2, 0.1 + 0.2, 0.0});
    AccuracyCurve b(CurveMethod::monte_carlo, "custom:1,0,0.5,0", true);
    b.push_back({5, 1e-300, 3.25e-7});
    std::ostringstream os;
    write_curves_csv(os, std::vector<AccuracyCurve>{a, b});
    EXPECT_EQ(os.str().substr(0, kCurveHeader.size()), kCurveHeader);
    EXPECT_NE(os.str().find("\"custom:1,0,0.5,0\""), std::string::npos);
    std::istringstream is(os.str());
    const auto back = read_curves_csv(is);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].state_label(), "b1r");
    EXPECT_EQ(back[0].method(), CurveMethod::exact);
    EXPECT_EQ(back[0][1].d_avg, 0.1 + 0.2);
    EXPECT_EQ(back[1].state_label(), "custom:1,0,0.5,0");
    EXPECT_TRUE(back[1].normalized());
    EXPECT_EQ(back[1][0].d_avg, 1e-300);
    EXPECT_EQ(back[1][0].std_error, 3.25e-7);
}

TEST(CurveCsv, RejectsMalformed)
{
    std::istringstream bad_header("n,d\n1,2\n");
    EXPECT_THROW(read_curves_csv(bad_header), std::runtime_error);
    std::istringstream bad_row(std::string(kCurveHeader) + "\n1,abc,0,exact,x,false\n");
    EXPECT_THROW(read_curves_csv(bad_row), std::runtime_error);
    std::istringstream open_quote(std::string(kCurveHeader) + "\n1,0.5,0,exact,\"x,false\n");
    EXPECT_THROW(read_curves_csv(open_quote), FormatError);
}

TEST(EventsCsv, RoundTripToCounts)
{
    const std::array<double, 4> p{0.1, 0.2, 0.3, 0.4};
    const auto s = stream_events(p, 500, 3);
    std::ostringstream os;
    write_events_csv(os, s);
    std::istringstream is(os.str());
    EXPECT_EQ(read_events_csv(is, 4), s.collapse());
}

TEST(Sha256, KnownVector)
{
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FormatDouble, ShortestRoundTrip)
{
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(std::stod(format_double(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(cli({"--help"}).code, 0);
    EXPECT_EQ(cli({}).code, 2);
    EXPECT_EQ(cli({"nonsense"}).code, 2);
    EXPECT_EQ(cli({"simulate", "--state", "vertical", "--events", "3"}).code, 2);
    EXPECT_EQ(cli({"simulate", "--events", "3"}).code, 2);
    EXPECT_EQ(cli({"reconstruct", "--counts", "1,2,3"}).code, 2);
    EXPECT_EQ(cli({"fit", "--input", "/nonexistent/curve.csv"}).code, 1);
    EXPECT_EQ(cli({"reconstruct", "--counts", "0,0,0,0"}).code, 1);
}

TEST(Cli, ReconstructJson)
{
    const auto r = cli({"reconstruct", "--counts", "3,1,1,1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["total"], 6);
    EXPECT_NEAR(j["stokes"][1].get<double>(), std::sqrt(1.0 / 3.0), 1e-14);
    EXPECT_TRUE(j["physical"].get<bool>());
}

TEST(Cli, SimulateIsSeeded)
{
    const auto a = cli({"simulate", "--state", "b1r", "--events", "50", "--seed", "9"});
    const auto b = cli({"simulate", "--state", "b1r", "--events", "50", "--seed", "9"});
    const auto c = cli({"simulate", "--state", "b1r", "--events", "50", "--seed", "10"});
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out, c.out);
    EXPECT_EQ(a.out.substr(0, 20), "event_index,outcome\n");
}

TEST(Cli, ExactWarnsAboutSeed)
{
    const auto r = cli({"accuracy", "exact", "--state", "unpolarized", "--nmax", "3", "--seed", "4"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("warning"), std::string::npos);
    std::istringstream is(r.out);
    const auto curves = read_curves_csv(is);
    ASSERT_EQ(curves.size(), 1u);
    EXPECT_NEAR(curves[0].at(1), 1.5, 1e-12);
}

TEST(Cli, FitReadsCurveFile)
{
    const auto dir = fresh_dir("fit");
    std::filesystem::create_directories(dir);
    const auto file = (dir / "curve.csv").string();
    ASSERT_EQ(cli({"accuracy", "exact", "--state", "unpolarized", "--nmax", "40", "--out", file}).code, 0);
    const auto r = cli({"fit", "--input", file, "--nmin", "10", "--nmax", "40"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_GT(j["a"].get<double>(), 1.0);
    EXPECT_NEAR(j["c"].get<double>(), 0.5, 0.05);
}

TEST(Recipe, ManifestHashesMatchFiles)
{
    ExperimentConfig cfg;
    cfg.recipe = Recipe::converge;
    cfg.events = 30;
    cfg.grid_resolution = 16;
    cfg.output_path = fresh_dir("manifest");
    const auto res = run_recipe(cfg);
    const auto manifest = json::parse(read_file(res.directory / "manifest.json"));
    EXPECT_EQ(manifest["recipe"], "converge");
    EXPECT_EQ(manifest["seed"], 1);
    ASSERT_FALSE(manifest["files"].empty());
    for (const auto& f : manifest["files"]) {
        const auto content = read_file(res.directory / f["name"].get<std::string>());
        EXPECT_EQ(f["sha256"], sha256_hex(content));
        EXPECT_EQ(f["bytes"].get<std::size_t>(), content.size());
    }
    EXPECT_TRUE(std::filesystem::exists(res.directory / "region_N0030.csv"));
}

TEST(Recipe, DataFilesIndependentOfThreadCount)
{
    for (auto r : {Recipe::accuracy_1q, Recipe::accuracy_2q}) {
        ExperimentConfig cfg;
        cfg.recipe = r;
        cfg.events = r == Recipe::accuracy_1q ? 20 : 150;
        cfg.runs = 6;
        cfg.n_min = 10;
        cfg.asymptote_events = 20000;
        cfg.seed = 3;
        cfg.threads = 1;
        cfg.output_path = fresh_dir("threads1");
        const auto a = run_recipe(cfg);
        cfg.threads = 4;
        cfg.output_path = fresh_dir("threads4");
        const auto b = run_recipe(cfg);
        ASSERT_EQ(a.files.size(), b.files.size());
        for (std::size_t i = 0; i + 1 < a.files.size(); ++i)
            EXPECT_EQ(read_file(a.files[i]), read_file(b.files[i])) << a.files[i];
    }
}

TEST(Binary, ExitCodesFromSubprocess)
{
    const char* bin = std::getenv("TOMO_BIN");
    if (bin == nullptr)
        GTEST_SKIP() << "TOMO_BIN not set";
    auto status = [&](const std::string& args) {
        const int s = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(s);
    };
    EXPECT_EQ(status("povm show"), 0);
    EXPECT_EQ(status("--bogus"), 2);
    EXPECT_EQ(status("reconstruct --counts 0,0,0,0"), 1);
}
