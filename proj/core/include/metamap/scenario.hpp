#pragma once

#include "metamap/map_model.hpp"
#include "metamap/metastability.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace metamap {

/// Minimum number of grid cells per unit of the smallest eps.
inline constexpr double kMinCellsPerEps = 9.0;

struct ScenarioToggles {
    bool second_eigenpair = true;
    bool escape_rates = true;
    bool saltus = true;
    int hypothesis_depth = kDefaultHypothesisDepth;
};

struct Scenario {
    enum class Kind { map_family, markov };

    std::string name;
    Kind kind = Kind::map_family;
    std::optional<PerturbationFamily> family;
    std::vector<double> eps_list;
    std::vector<std::pair<double, double>> markov_pairs;
    std::size_t grid = 0;
    /// Least common denominator of the critical points; the grid must be a multiple.
    std::int64_t grid_alignment = 1;
    bool lebesgue_halves = false;
    ScenarioToggles toggles;
    std::filesystem::path output_dir = "out";
};

/// "family_a", "family_b" or "markov2".
Scenario builtin_scenario(std::string_view name);

/// `spec` is "builtin:<name>" or a path to a JSON scenario file.
Scenario load_scenario(const std::string& spec);
Scenario parse_scenario_json(std::string_view text, const std::filesystem::path& base_dir = {});

/// Throws ScenarioError when the grid is misaligned or too coarse for the eps list.
void check_grid_rule(const Scenario& s);

struct RunOptions {
    unsigned jobs = 1;
    std::optional<std::filesystem::path> out;
};

/// Exit codes of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitDegraded = 2;

/// Writes sweep/density/saltus CSVs, a JSON mirror and SVG plots.
/// Returns kExitOk, kExitDegraded (some rows failed) or kExitFatal.
int run(const Scenario& scenario, const RunOptions& options, std::ostream& log);

/// Hypothesis report of a map scenario (densities from the eps = 0 reference).
HypothesisReport validate_scenario(const Scenario& scenario);

}  // namespace metamap
