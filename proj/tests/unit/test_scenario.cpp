#include "metamap/errors.hpp"
#include "metamap/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace metamap;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("metamap_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::size_t line_count(const fs::path& p) {
    const auto s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

std::vector<std::string> issues_of(const std::string& json) {
    try {
        parse_scenario_json(json);
    } catch (const ScenarioError& e) {
        return e.issues();
    }
    return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

// Family A branches with only the right-half perturbation.
const char* kRightOnly = R"({
  "name": "right_only",
  "branches": [
    {"domain": [0, "1/6"], "slope": 3, "intercept": 0},
    {"domain": ["1/6", "1/3"], "slope": 3, "intercept": "-1/2"},
    {"domain": ["1/3", "1/2"], "slope": -3, "intercept": "3/2"},
    {"domain": ["1/2", "2/3"], "slope": -3, "intercept": "5/2"},
    {"domain": ["2/3", "5/6"], "slope": 3, "intercept": "-3/2", "intercept_eps": -1},
    {"domain": ["5/6", 1], "slope": 3, "intercept": -2}
  ],
  "boundary": "1/2",
  "eps": [0.02, 0.01],
  "grid": 960,
  "lebesgue_halves": true,
  "toggles": {"escape_rates": false}
})";

}  // namespace

TEST(Builtins, Defaults) {
    const auto a = builtin_scenario("family_a");
    EXPECT_EQ(a.kind, Scenario::Kind::map_family);
    ASSERT_TRUE(a.family.has_value());
    EXPECT_EQ(a.grid, 3840u);
    EXPECT_EQ(a.grid_alignment, 6);
    EXPECT_EQ(a.eps_list, (std::vector<double>{0.02, 0.01, 0.005, 0.0025}));
    EXPECT_TRUE(a.lebesgue_halves);
    EXPECT_NO_THROW(check_grid_rule(a));
    EXPECT_NO_THROW(check_grid_rule(builtin_scenario("family_b")));
    const auto m = builtin_scenario("markov2");
    EXPECT_EQ(m.kind, Scenario::Kind::markov);
    EXPECT_EQ(m.markov_pairs.size(), 4u);
    EXPECT_THROW(builtin_scenario("nope"), ScenarioError);
}

TEST(LoadScenario, BuiltinPrefixAndFile) {
    EXPECT_EQ(load_scenario("builtin:markov2").kind, Scenario::Kind::markov);
    const auto dir = scratch_dir("load");
    fs::create_directories(dir);
    std::ofstream(dir / "s.json") << R"({"builtin": "family_a", "grid": 1920, "eps": [0.02, 0.01], "output": "here"})";
    const auto s = load_scenario((dir / "s.json").string());
    EXPECT_EQ(s.grid, 1920u);
    EXPECT_EQ(s.output_dir, dir / "here");
    EXPECT_THROW(load_scenario((dir / "missing.json").string()), ScenarioError);
}

TEST(ParseScenario, CustomFamily) {
    const auto s = parse_scenario_json(kRightOnly);
    EXPECT_EQ(s.name, "right_only");
    ASSERT_TRUE(s.family.has_value());
    EXPECT_EQ(s.family->base().branches().size(), 6u);
    EXPECT_FALSE(s.family->has_hole_coefficients());
    EXPECT_FALSE(s.toggles.escape_rates);
    EXPECT_EQ(s.grid_alignment, 6);
}

TEST(ParseScenario, SyntaxErrorReportsPosition) {
    const auto issues = issues_of("{\n  \"builtin\": \"family_a\",\n  \"grid\": ]\n}");
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_NE(issues[0].find("line 3"), std::string::npos) << issues[0];
}

TEST(ParseScenario, SchemaPaths) {
    auto issues = issues_of(R"({"branches": [{"domain": [0, 1], "slope": "x", "intercept": 0}], "boundary": "1/2", "grid": 6})");
    EXPECT_TRUE(any_contains(issues, "$.branches[0].slope")) << issues.front();
    issues = issues_of(R"({"branches": [{"domain": [0, 1], "intercept": 0}], "boundary": "1/2", "grid": 6})");
    EXPECT_TRUE(any_contains(issues, "$.branches[0].slope: missing"));
    issues = issues_of(R"({"builtin": "family_a", "grid": -4})");
    EXPECT_TRUE(any_contains(issues, "$.grid"));
    issues = issues_of(R"({"builtin": "family_a", "toggles": {"saltus": 3}})");
    EXPECT_TRUE(any_contains(issues, "$.toggles.saltus"));
    issues = issues_of(R"({"builtin": "family_a", "markov_pairs": [[0.1, 0.2]]})");
    EXPECT_TRUE(any_contains(issues, "$.markov_pairs"));
    issues = issues_of(R"({"name": "x"})");
    EXPECT_TRUE(any_contains(issues, "builtin"));
    issues = issues_of("[1, 2]");
    EXPECT_TRUE(any_contains(issues, "JSON object"));
}

TEST(ParseScenario, OverlapAndGap) {
    auto issues = issues_of(R"({"branches": [
        {"domain": [0, "1/2"], "slope": 2, "intercept": 0},
        {"domain": ["1/4", 1], "slope": 2, "intercept": -1}], "boundary": "1/2", "grid": 8})");
    EXPECT_TRUE(any_contains(issues, "$.branches[0] and $.branches[1] overlap"));
    issues = issues_of(R"({"branches": [
        {"domain": [0, "1/4"], "slope": 2, "intercept": 0},
        {"domain": ["1/2", 1], "slope": 2, "intercept": -1}], "boundary": "1/2", "grid": 8})");
    EXPECT_TRUE(any_contains(issues, "$.branches[0] and $.branches[1] leave a gap"));
}

TEST(GridRule, Violations) {
    auto s = builtin_scenario("family_a");
    s.grid = 3841;
    EXPECT_THROW(check_grid_rule(s), ScenarioError);
    s.grid = 600;  // 600 * 0.0025 < 9
    EXPECT_THROW(check_grid_rule(s), ScenarioError);
    s.grid = 3840;
    s.eps_list = {0.01, 0.02};
    EXPECT_THROW(check_grid_rule(s), ScenarioError);
    s.eps_list = {0.01, -0.01};
    EXPECT_THROW(check_grid_rule(s), ScenarioError);
    s.eps_list = {0.02, 0.01};
    s.grid = 960;
    EXPECT_NO_THROW(check_grid_rule(s));
}

TEST(Run, FamilyAWritesAllArtifacts) {
    auto s = builtin_scenario("family_a");
    s.grid = 960;
    s.eps_list = {0.02, 0.01};
    const auto out1 = scratch_dir("run1"), out2 = scratch_dir("run2");
    std::ostringstream log;
    ASSERT_EQ(run(s, RunOptions{.out = out1}, log), kExitOk) << log.str();
    for (const char* f : {"hypotheses.json", "sweep.csv", "sweep.json", "density_eps0.02.csv", "density_eps0.01.csv",
                          "saltus_eps0.01.csv", "densities.svg", "l1_distance.svg", "rho.svg"})
        EXPECT_TRUE(fs::exists(out1 / f)) << f;
    EXPECT_EQ(line_count(out1 / "sweep.csv"), 3u);
    EXPECT_EQ(line_count(out1 / "density_eps0.01.csv"), 961u);
    ASSERT_EQ(run(s, RunOptions{.jobs = 2, .out = out2}, log), kExitOk);
    for (const auto& e : fs::directory_iterator(out1))
        EXPECT_EQ(slurp(e.path()), slurp(out2 / e.path().filename())) << e.path().filename();
}

TEST(Run, Markov) {
    const auto out = scratch_dir("markov");
    std::ostringstream log;
    ASSERT_EQ(run(builtin_scenario("markov2"), RunOptions{.out = out}, log), kExitOk) << log.str();
    const auto csv = slurp(out / "markov.csv");
    EXPECT_NE(csv.find("0.01,0.03,0.75"), std::string::npos) << csv;
    EXPECT_EQ(line_count(out / "markov.csv"), 5u);
    EXPECT_TRUE(fs::exists(out / "markov.json"));
}

TEST(Run, UnwritableOutputIsFatal) {
    const auto dir = scratch_dir("blocked");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    std::ostringstream log;
    EXPECT_EQ(run(builtin_scenario("markov2"), RunOptions{.out = dir / "file" / "sub"}, log), kExitFatal);
    EXPECT_FALSE(log.str().empty());
}

TEST(Run, FamilyBWarnsButSucceeds) {
    auto s = builtin_scenario("family_b");
    s.grid = 960;
    s.eps_list = {0.02, 0.01};
    std::ostringstream log;
    EXPECT_EQ(run(s, RunOptions{.out = scratch_dir("famb")}, log), kExitOk);
    EXPECT_NE(log.str().find("boundary violation"), std::string::npos) << log.str();
}

TEST(Run, DegradedRowsGiveExitTwo) {
    auto s = parse_scenario_json(kRightOnly);
    std::ostringstream log;
    const auto out = scratch_dir("degraded");
    EXPECT_EQ(run(s, RunOptions{.out = out}, log), kExitDegraded) << log.str();
    EXPECT_TRUE(fs::exists(out / "sweep.json"));
}

TEST(Validate, HypothesisReports) {
    const auto a = validate_scenario(builtin_scenario("family_a"));
    EXPECT_TRUE(a.passes_I2);
    EXPECT_TRUE(a.passes_I4a);
    EXPECT_TRUE(a.passes_P2);
    const auto b = validate_scenario(builtin_scenario("family_b"));
    EXPECT_FALSE(b.passes_P2);
    EXPECT_THROW(validate_scenario(builtin_scenario("markov2")), Error);
}
