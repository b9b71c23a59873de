#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include <bergspec/config.hpp>
#include <bergspec/properties.hpp>
#include <bergspec/runner.hpp>

using namespace bergspec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() / ("bergspec-test-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::vector<std::string> errors_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const config_error& e) {
        return e.errors();
    }
    return {};
}

bool mentions(const std::vector<std::string>& errs, const std::string& needle)
{
    for (const auto& e : errs)
        if (e.find(needle) != std::string::npos)
            return true;
    return false;
}

json strip_timings(json j)
{
    if (j.is_object()) {
        j.erase("timings");
        j.erase("seconds");
        for (auto& [k, v] : j.items())
            v = strip_timings(v);
    } else if (j.is_array()) {
        for (auto& v : j)
            v = strip_timings(v);
    }
    return j;
}

}  // namespace

TEST(Config, MinimalTheoremConfig)
{
    const auto c = parse_config(R"({"kind": "theorem1", "gamma": 1,
        "symbol": {"type": "trigpoly", "coefficients": [1]}, "sizes": [100, 200]})");
    EXPECT_EQ(c.kind, ExperimentKind::theorem1);
    ASSERT_TRUE(c.symbol);
    EXPECT_TRUE(c.symbol->is_trig_poly());
    EXPECT_EQ(c.sizes, (std::vector<std::size_t>{100, 200}));
}

TEST(Config, GammaMustBePositive)
{
    const auto errs = errors_of(R"({"kind": "theorem1", "gamma": 0,
        "symbol": {"type": "trigpoly", "coefficients": [1]}, "sizes": [100]})");
    ASSERT_EQ(errs.size(), 1u);
    EXPECT_NE(errs[0].find("gamma must be > 0"), std::string::npos) << errs[0];
}

TEST(Config, OverlappingArcsAreNamed)
{
    const auto errs = errors_of(R"({"kind": "theorem1", "gamma": 1, "sizes": [100],
        "symbol": {"type": "step", "arcs": [{"start": 0, "end": 2, "value": 1}, {"start": 1, "end": 3, "value": 1}]}})");
    ASSERT_FALSE(errs.empty());
    EXPECT_TRUE(mentions(errs, "arcs 0 and 1 overlap"));
}

TEST(Config, AllErrorsAreListed)
{
    const auto errs = errors_of(R"({"kind": "theorem1", "gamma": -1, "tolerance": 0, "sizes": [], "bogus": 3})");
    EXPECT_TRUE(mentions(errs, "gamma"));
    EXPECT_TRUE(mentions(errs, "tolerance"));
    EXPECT_TRUE(mentions(errs, "sizes"));
    EXPECT_TRUE(mentions(errs, "symbol"));
    EXPECT_TRUE(mentions(errs, "bogus"));
    EXPECT_GE(errs.size(), 5u);
}

TEST(Config, ParseErrorsCarryLineAndColumn)
{
    const auto errs = errors_of("{\n  \"kind\": \"theorem1\",\n  \"gamma\": ,\n}");
    ASSERT_EQ(errs.size(), 1u);
    EXPECT_NE(errs[0].find("line 3"), std::string::npos) << errs[0];
}

TEST(Config, HashIgnoresOutputLocations)
{
    const std::string base = R"({"kind": "theorem1", "gamma": 1, "symbol": {"type": "trigpoly", "coefficients": [1]},
        "sizes": [100])";
    const auto a = parse_config(base + "}");
    const auto b = parse_config(base + R"(, "output_dir": "elsewhere"})");
    const auto c = parse_config(base + R"(, "tolerance": 0.2})");
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_NE(a.hash(), c.hash());
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Config, SymbolRoundTrip)
{
    const AngularSymbol g(StepSymbol({StepSymbol::arc(0.5, 2.0, complex{1, -2}), StepSymbol::arc(3.0, 4.0, 0.25)}));
    const auto back = symbol_from_json(symbol_to_json(g));
    for (double t : {0.1, 0.7, 3.5, 5.0})
        EXPECT_EQ(back(t), g(t));
}

TEST(Runner, RadialRunPassesAndRerunHitsTheCache)
{
    TempDir tmp;
    auto c = parse_config(R"({"kind": "theorem1", "gamma": 1,
        "symbol": {"type": "trigpoly", "coefficients": [1]}, "sizes": [200, 400], "tolerance": 0.05})");
    c.output_dir = (tmp.path / "out").string();
    c.cache_dir = (tmp.path / "cache").string();
    const auto first = run(c);
    EXPECT_EQ(first.exit_status(), 0);
    ASSERT_TRUE(first.pass);
    EXPECT_TRUE(*first.pass);
    EXPECT_EQ(first.cache_hits(), 0u);
    const auto report1 = json::parse(read_file(tmp.path / "out" / "report.json"));

    const auto second = run(c);
    EXPECT_GT(second.cache_hits(), 0u);
    const auto report2 = json::parse(read_file(tmp.path / "out" / "report.json"));
    EXPECT_EQ(strip_timings(report1), strip_timings(report2));
    EXPECT_TRUE(fs::exists(tmp.path / "out" / "manifest.json"));
}

TEST(Runner, SpectrumOnlyHasNoVerdict)
{
    TempDir tmp;
    auto c = parse_config(R"({"kind": "spectrum-only", "gamma": 0.5,
        "symbol": {"type": "step", "arcs": [{"start": 0, "end": 2, "value": [0, 1]}]}, "sizes": [50]})");
    c.output_dir = (tmp.path / "out").string();
    c.cache_dir = (tmp.path / "cache").string();
    const auto m = run(c);
    EXPECT_FALSE(m.pass.has_value());
    EXPECT_EQ(m.exit_status(), 0);
    const auto values = parse_spectrum_csv(read_file(tmp.path / "out" / "spectra" / "spectrum_N50.csv"));
    EXPECT_EQ(values.size(), 50u);
}

TEST(Runner, CacheRoundTripsBitExactly)
{
    TempDir tmp;
    SpectrumCache cache(tmp.path);
    Spectrum s;
    s.values = {1.0 / 3.0, 0.1, 1e-300, 0.0};
    s.n = 4;
    s.solver_id = solver_ids::dense_svd;
    cache.store("abc", s);
    const auto back = cache.load("abc", solver_ids::dense_svd);
    ASSERT_TRUE(back);
    EXPECT_EQ(back->values, s.values);
    EXPECT_FALSE(cache.load("abc", solver_ids::banded));
    EXPECT_FALSE(cache.load("missing", solver_ids::dense_svd));
}

TEST(PropertySuite, SeedZeroPasses)
{
    const auto r = property_suite(0, {20, 50});
    EXPECT_TRUE(r.pass()) << r.to_json().dump(2);
}

TEST(PropertySuite, EmptySizesPassVacuously)
{
    const auto r = property_suite(1, {});
    EXPECT_TRUE(r.pass());
}

TEST(PropertySuite, InjectedFaultIsReported)
{
    PropertySuiteOptions o;
    o.pairs_per_size = 3;
    // Corrupt every product spectrum the suite computes (third hook call per pair).
    int calls = 0;
    o.hook = [&](Spectrum& s) {
        if (++calls % 3 == 0)
            for (auto& v : s.values)
                v *= 1e6;
    };
    const auto r = property_suite(0, {20}, o);
    EXPECT_FALSE(r.pass());
}
