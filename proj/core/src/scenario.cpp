#include "metamap/scenario.hpp"

#include "metamap/errors.hpp"
#include "metamap/rational.hpp"
#include "metamap/report.hpp"
#include "metamap/svg_plot.hpp"

#include <fmt/core.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace metamap {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct AffineSpec {
    Rational lo, hi, slope, intercept, slope_eps, intercept_eps;
};

Rational r(std::string_view s) { return Rational::parse(s); }

PerturbationFamily make_affine_family(const std::vector<AffineSpec>& specs, Rational b,
                                      std::vector<HoleCoefficient> holes) {
    std::vector<Branch> branches;
    std::vector<BranchPerturbation> perts;
    for (const auto& s : specs) {
        branches.push_back(Branch::affine({s.lo.to_double(), s.hi.to_double()}, s.slope.to_double(), s.intercept.to_double()));
        perts.push_back({s.slope_eps.to_double(), s.intercept_eps.to_double(), {}, {}, {}});
    }
    return PerturbationFamily(PiecewiseMap(std::move(branches)), std::move(perts), b.to_double(), std::move(holes));
}

std::int64_t alignment_of(const std::vector<AffineSpec>& specs, Rational b) {
    std::vector<Rational> pts{b};
    for (const auto& s : specs) {
        pts.push_back(s.lo);
        pts.push_back(s.hi);
    }
    return lcm_of_denominators(pts.data(), pts.data() + pts.size());
}

Scenario family_a() {
    // Left half: three full branches onto [0,1/2]; right half: three onto [1/2,1].
    // eps opens (1/3 - eps, 1/3] in I_l and [2/3, 2/3 + eps/3) in I_r.
    const std::vector<AffineSpec> specs{
        {r("0"), r("1/6"), r("3"), r("0"), r("0"), r("0")},
        {r("1/6"), r("1/3"), r("3"), r("-1/2"), r("0"), r("3")},
        {r("1/3"), r("1/2"), r("-3"), r("3/2"), r("0"), r("0")},
        {r("1/2"), r("2/3"), r("-3"), r("5/2"), r("0"), r("0")},
        {r("2/3"), r("5/6"), r("3"), r("-3/2"), r("0"), r("-1")},
        {r("5/6"), r("1"), r("3"), r("-2"), r("0"), r("0")},
    };
    Scenario s;
    s.name = "family_a";
    s.family = make_affine_family(specs, r("1/2"),
                                  {{1.0 / 3.0, Side::left, 1.0, 0.0}, {2.0 / 3.0, Side::right, 0.0, 1.0 / 3.0}});
    s.grid_alignment = alignment_of(specs, r("1/2"));
    s.eps_list = {0.02, 0.01, 0.005, 0.0025};
    s.grid = 3840;
    s.lebesgue_halves = true;
    s.output_dir = "out/family_a";
    return s;
}

Scenario family_b() {
    // T(x) = [(3x mod 1/2) + 3eps] on x < 1/2, [(-3x mod 1/2) + 1/2 - eps] on x > 1/2
    const std::vector<AffineSpec> specs{
        {r("0"), r("1/6"), r("3"), r("0"), r("0"), r("3")},
        {r("1/6"), r("1/3"), r("3"), r("-1/2"), r("0"), r("3")},
        {r("1/3"), r("1/2"), r("3"), r("-1"), r("0"), r("3")},
        {r("1/2"), r("2/3"), r("-3"), r("5/2"), r("0"), r("-1")},
        {r("2/3"), r("5/6"), r("-3"), r("3"), r("0"), r("-1")},
        {r("5/6"), r("1"), r("-3"), r("7/2"), r("0"), r("-1")},
    };
    Scenario s;
    s.name = "family_b";
    s.family = make_affine_family(specs, r("1/2"),
                                  {{1.0 / 6.0, Side::left, 1.0, 0.0},
                                   {1.0 / 3.0, Side::left, 1.0, 0.0},
                                   {0.5, Side::left, 1.0, 0.0},
                                   {2.0 / 3.0, Side::right, 1.0 / 3.0, 0.0},
                                   {5.0 / 6.0, Side::right, 1.0 / 3.0, 0.0},
                                   {1.0, Side::right, 1.0 / 3.0, 0.0}});
    s.grid_alignment = alignment_of(specs, r("1/2"));
    s.eps_list = {0.02, 0.01, 0.005, 0.0025};
    s.grid = 3840;
    s.lebesgue_halves = true;
    s.output_dir = "out/family_b";
    return s;
}

Scenario markov2() {
    Scenario s;
    s.name = "markov2";
    s.kind = Scenario::Kind::markov;
    s.markov_pairs = {{0.01, 0.03}, {0.03, 0.01}, {0.02, 0.02}, {0.0, 0.03}};
    s.grid = 2;
    s.output_dir = "out/markov2";
    return s;
}

// ------------------------------------------------------------ JSON parsing

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

class Reader {
public:
    std::vector<std::string> issues;

    std::optional<Rational> rational(const json& obj, const std::string& key, const std::string& path,
                                     bool required = true) {
        if (!obj.contains(key)) {
            if (required) issues.push_back(path + "." + key + ": missing");
            return std::nullopt;
        }
        return rational_value(obj.at(key), path + "." + key);
    }

    std::optional<Rational> rational_value(const json& v, const std::string& path) {
        try {
            if (v.is_string()) return Rational::parse(v.get<std::string>());
            if (v.is_number_integer()) return Rational::from_integer(v.get<std::int64_t>());
            if (v.is_number_float()) return Rational::parse(fmt::format("{}", v.get<double>()));
        } catch (const Error& e) {
            issues.push_back(path + ": " + e.what());
            return std::nullopt;
        }
        issues.push_back(path + ": expected a number or a rational string like \"1/6\"");
        return std::nullopt;
    }

    template <class T>
    std::optional<T> get(const json& obj, const std::string& key, const std::string& path) {
        if (!obj.contains(key)) return std::nullopt;
        try {
            return obj.at(key).get<T>();
        } catch (const json::exception&) {
            issues.push_back(path + "." + key + ": wrong type");
            return std::nullopt;
        }
    }
};

void parse_family(const json& j, Scenario& s, Reader& rd) {
    const auto& arr = j.at("branches");
    if (!arr.is_array() || arr.empty()) {
        rd.issues.push_back("$.branches: expected a non-empty array");
        return;
    }
    std::vector<AffineSpec> specs;
    bool ok = true;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = fmt::format("$.branches[{}]", i);
        const auto& b = arr[i];
        if (!b.is_object()) {
            rd.issues.push_back(path + ": expected an object");
            ok = false;
            continue;
        }
        AffineSpec spec;
        const auto& dom = b.contains("domain") ? b.at("domain") : json();
        if (!dom.is_array() || dom.size() != 2) {
            rd.issues.push_back(path + ".domain: expected [lo, hi]");
            ok = false;
        } else {
            auto lo = rd.rational_value(dom[0], path + ".domain[0]");
            auto hi = rd.rational_value(dom[1], path + ".domain[1]");
            if (lo && hi) {
                spec.lo = *lo;
                spec.hi = *hi;
            } else {
                ok = false;
            }
        }
        auto slope = rd.rational(b, "slope", path);
        auto icpt = rd.rational(b, "intercept", path);
        auto se = rd.rational(b, "slope_eps", path, false);
        auto ie = rd.rational(b, "intercept_eps", path, false);
        if (!slope || !icpt) {
            ok = false;
            continue;
        }
        spec.slope = *slope;
        spec.intercept = *icpt;
        spec.slope_eps = se.value_or(Rational{});
        spec.intercept_eps = ie.value_or(Rational{});
        specs.push_back(spec);
    }
    if (!ok) return;

    for (std::size_t i = 0; i + 1 < specs.size(); ++i) {
        const double hi = specs[i].hi.to_double();
        const double lo = specs[i + 1].lo.to_double();
        if (lo < hi - kEndpointTol)
            rd.issues.push_back(fmt::format("$.branches[{}] and $.branches[{}] overlap: [{}, {}] vs [{}, {}]", i, i + 1,
                                            specs[i].lo.str(), specs[i].hi.str(), specs[i + 1].lo.str(),
                                            specs[i + 1].hi.str()));
        else if (lo > hi + kEndpointTol)
            rd.issues.push_back(fmt::format("$.branches[{}] and $.branches[{}] leave a gap between {} and {}", i, i + 1,
                                            specs[i].hi.str(), specs[i + 1].lo.str()));
    }

    auto b = rd.rational(j, "boundary", "$");
    std::vector<HoleCoefficient> holes;
    if (j.contains("holes")) {
        const auto& ha = j.at("holes");
        if (!ha.is_array()) rd.issues.push_back("$.holes: expected an array");
        for (std::size_t i = 0; ha.is_array() && i < ha.size(); ++i) {
            const std::string path = fmt::format("$.holes[{}]", i);
            auto pt = rd.rational(ha[i], "point", path);
            auto a = rd.rational(ha[i], "a", path);
            auto bb = rd.rational(ha[i], "b", path);
            auto side = rd.get<std::string>(ha[i], "side", path);
            if (!side || (*side != "left" && *side != "right" && *side != "l" && *side != "r")) {
                rd.issues.push_back(path + ".side: expected \"left\" or \"right\"");
                continue;
            }
            if (pt && a && bb)
                holes.push_back({pt->to_double(), side->front() == 'l' ? Side::left : Side::right, a->to_double(),
                                 bb->to_double()});
        }
    }
    if (!rd.issues.empty() || !b) return;
    try {
        s.family = make_affine_family(specs, *b, std::move(holes));
        s.grid_alignment = alignment_of(specs, *b);
    } catch (const Error& e) {
        rd.issues.push_back(std::string("$.branches: ") + e.what());
    }
}

}  // namespace

Scenario builtin_scenario(std::string_view name) {
    if (name == "family_a") return family_a();
    if (name == "family_b") return family_b();
    if (name == "markov2") return markov2();
    throw ScenarioError({fmt::format("unknown builtin scenario '{}' (known: family_a, family_b, markov2)", name)});
}

Scenario parse_scenario_json(std::string_view text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ScenarioError({fmt::format("line {}, column {}: {}", line, col, e.what())});
    }
    if (!j.is_object()) throw ScenarioError({"$: expected a JSON object"});

    Reader rd;
    Scenario s;
    if (auto b = rd.get<std::string>(j, "builtin", "$")) {
        try {
            s = builtin_scenario(*b);
        } catch (const ScenarioError& e) {
            rd.issues.push_back("$.builtin: " + e.issues().front());
        }
    } else if (!j.contains("branches")) {
        rd.issues.push_back("$: need either \"builtin\" or \"branches\"");
    }
    if (auto n = rd.get<std::string>(j, "name", "$")) s.name = *n;
    if (s.name.empty()) s.name = "scenario";

    if (j.contains("branches")) {
        s.kind = Scenario::Kind::map_family;
        parse_family(j, s, rd);
        if (!s.eps_list.empty() && !j.contains("eps")) s.eps_list.clear();
    }
    if (auto v = rd.get<bool>(j, "lebesgue_halves", "$")) s.lebesgue_halves = *v;
    if (auto v = rd.get<std::vector<double>>(j, "eps", "$")) s.eps_list = *v;
    if (auto v = rd.get<std::vector<std::pair<double, double>>>(j, "markov_pairs", "$")) {
        if (s.kind != Scenario::Kind::markov) rd.issues.push_back("$.markov_pairs: only valid for the markov2 builtin");
        s.markov_pairs = *v;
    }
    if (auto v = rd.get<std::int64_t>(j, "grid", "$")) {
        if (*v <= 0)
            rd.issues.push_back("$.grid: must be positive");
        else
            s.grid = static_cast<std::size_t>(*v);
    }
    if (j.contains("toggles")) {
        const auto& t = j.at("toggles");
        if (!t.is_object()) {
            rd.issues.push_back("$.toggles: expected an object");
        } else {
            if (auto v = rd.get<bool>(t, "second_eigenpair", "$.toggles")) s.toggles.second_eigenpair = *v;
            if (auto v = rd.get<bool>(t, "escape_rates", "$.toggles")) s.toggles.escape_rates = *v;
            if (auto v = rd.get<bool>(t, "saltus", "$.toggles")) s.toggles.saltus = *v;
            if (auto v = rd.get<int>(t, "hypothesis_depth", "$.toggles")) {
                if (*v < 1) rd.issues.push_back("$.toggles.hypothesis_depth: must be >= 1");
                s.toggles.hypothesis_depth = *v;
            }
        }
    }
    if (auto v = rd.get<std::string>(j, "output", "$")) {
        fs::path p(*v);
        s.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (s.kind == Scenario::Kind::map_family && s.grid == 0 && rd.issues.empty())
        rd.issues.push_back("$.grid: missing");
    if (!rd.issues.empty()) throw ScenarioError(std::move(rd.issues));
    check_grid_rule(s);
    return s;
}

Scenario load_scenario(const std::string& spec) {
    constexpr std::string_view prefix = "builtin:";
    if (spec.rfind(prefix, 0) == 0) {
        Scenario s = builtin_scenario(std::string_view(spec).substr(prefix.size()));
        check_grid_rule(s);
        return s;
    }
    std::ifstream in(spec);
    if (!in) throw ScenarioError({fmt::format("cannot open scenario file '{}'", spec)});
    std::stringstream ss;
    ss << in.rdbuf();
    // relative output paths resolve against the scenario file's directory
    return parse_scenario_json(ss.str(), fs::path(spec).parent_path());
}

void check_grid_rule(const Scenario& s) {
    if (s.kind == Scenario::Kind::markov) {
        std::vector<std::string> issues;
        for (std::size_t i = 0; i < s.markov_pairs.size(); ++i) {
            const auto [a, b] = s.markov_pairs[i];
            if (a < 0.0 || b < 0.0 || a + b > 1.0 || (a == 0.0 && b == 0.0))
                issues.push_back(fmt::format("$.markov_pairs[{}]: rates ({}, {}) invalid", i, a, b));
        }
        if (!issues.empty()) throw ScenarioError(std::move(issues));
        return;
    }
    std::vector<std::string> issues;
    if (!s.family) issues.push_back("$: map scenario without a family");
    if (s.grid == 0) issues.push_back("$.grid: must be positive");
    if (s.grid_alignment > 0 && s.grid % static_cast<std::size_t>(s.grid_alignment) != 0)
        issues.push_back(fmt::format("$.grid: {} is not a multiple of {} (common denominator of the critical points)",
                                     s.grid, s.grid_alignment));
    if (s.family && s.grid < 2 * s.family->base().branch_count())
        issues.push_back(fmt::format("$.grid: {} is below twice the branch count", s.grid));
    for (std::size_t i = 0; i < s.eps_list.size(); ++i) {
        if (!(s.eps_list[i] > 0.0)) issues.push_back(fmt::format("$.eps[{}]: must be positive", i));
        if (i > 0 && !(s.eps_list[i] < s.eps_list[i - 1]))
            issues.push_back(fmt::format("$.eps[{}]: eps values must be strictly decreasing", i));
    }
    if (!s.eps_list.empty() && s.grid > 0) {
        const double eps_min = *std::min_element(s.eps_list.begin(), s.eps_list.end());
        if (static_cast<double>(s.grid) * eps_min < kMinCellsPerEps - 1e-9)
            issues.push_back(fmt::format("$.grid: {} cells resolve eps = {} with only {:.3g} cells (need >= {})", s.grid,
                                         eps_min, static_cast<double>(s.grid) * eps_min, kMinCellsPerEps));
    }
    if (!issues.empty()) throw ScenarioError(std::move(issues));
}

HypothesisReport validate_scenario(const Scenario& scenario) {
    if (scenario.kind != Scenario::Kind::map_family || !scenario.family)
        throw DomainError("hypothesis validation needs a map scenario");
    const auto& fam = *scenario.family;
    auto [pl, pr] = reference_densities(fam, scenario.grid, scenario.lebesgue_halves);
    HoleDensities dens{
        [pl = pl, il = fam.left_interval()](double x) { return density_value_near(pl, x, il); },
        [pr = pr, ir = fam.right_interval()](double x) { return density_value_near(pr, x, ir); },
    };
    return validate_hypotheses(fam, scenario.toggles.hypothesis_depth, dens);
}

// ------------------------------------------------------------------ running

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << content;
    if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

template <class F>
std::string to_string_with(F&& f) {
    std::ostringstream os;
    f(os);
    return os.str();
}

std::string eps_tag(double eps) { return fmt::format("eps{:g}", eps); }

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

svg::Series grid_series(const std::string& label, const DensityGrid& g, const char* color) {
    svg::Series s{label, {}, {}, color, false};
    const std::size_t stride = std::max<std::size_t>(1, g.size() / 960);
    for (std::size_t i = 0; i < g.size(); i += stride) {
        s.x.push_back(g.cell_center(i));
        s.y.push_back(g[i]);
    }
    return s;
}

int run_family(const Scenario& sc, const RunOptions& opt, const fs::path& out, std::ostream& log) {
    check_grid_rule(sc);
    const auto& fam = *sc.family;

    HypothesisReport hyp = validate_scenario(sc);
    log << fmt::format("[{}] hypotheses: I2={} I4a={} P2={} ({})\n", sc.name, hyp.passes_I2, hyp.passes_I4a,
                       hyp.passes_P2, hyp.p2_variant);
    for (const auto& d : hyp.diagnostics) log << "  - " << d << '\n';
    write_file(out / "hypotheses.json", hypothesis_report_json(hyp));

    StudyOptions so;
    so.second_eigenpair = sc.toggles.second_eigenpair;
    so.escape_rates = sc.toggles.escape_rates;
    so.saltus = sc.toggles.saltus;
    so.lebesgue_halves = sc.lebesgue_halves;
    so.jobs = opt.jobs;
    const StudyResult study = convergence_study(fam, sc.eps_list, sc.grid, so);

    std::set<std::string> seen;
    bool degraded = false;
    for (const auto& row : study.rows) {
        for (const auto& w : row.warnings)
            if (seen.insert(w).second) log << "warning: " << w << '\n';
        for (const auto& f : row.failures) log << fmt::format("row eps={:g} failed: {}\n", row.eps, f);
        degraded = degraded || !row.ok;
    }

    write_file(out / "sweep.csv", to_string_with([&](std::ostream& os) { write_sweep_csv(os, study.rows); }));
    write_file(out / "sweep.json", study_json(sc.name, study, &hyp));
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
        const auto& art = study.artifacts[i];
        const std::string tag = eps_tag(study.rows[i].eps);
        if (art.phi.size())
            write_file(out / ("density_" + tag + ".csv"),
                       to_string_with([&](std::ostream& os) { write_density_csv(os, art.phi, art.mixture, art.psi); }));
        if (art.saltus)
            write_file(out / ("saltus_" + tag + ".csv"),
                       to_string_with([&](std::ostream& os) { write_saltus_csv(os, *art.saltus); }));
    }

    // plots
    std::vector<svg::Series> dens;
    for (std::size_t i = 0; i < study.rows.size(); ++i)
        if (study.artifacts[i].phi.size())
            dens.push_back(grid_series("phi, eps=" + fmt::format("{:g}", study.rows[i].eps), study.artifacts[i].phi,
                                       kPalette[i % 8]));
    if (!study.artifacts.empty() && study.artifacts.front().mixture.size())
        dens.push_back(grid_series(fmt::format("mixture, alpha={:.4g}", study.alpha_pred),
                                   study.artifacts.front().mixture, "#000000"));
    write_file(out / "densities.svg", svg::render({sc.name + ": invariant densities", "x", "density"}, dens));

    svg::Series l1phi{"|phi - mixture|_1", {}, {}, kPalette[0], true};
    svg::Series l1psi{"|psi - (phi_l - phi_r)/2|_1", {}, {}, kPalette[1], true};
    svg::Series rho{"rho", {}, {}, kPalette[2], true};
    for (const auto& r : study.rows) {
        l1phi.x.push_back(r.eps);
        l1phi.y.push_back(r.l1_phi_vs_mixture);
        l1psi.x.push_back(r.eps);
        l1psi.y.push_back(r.l1_psi_vs_half_diff);
        rho.x.push_back(r.eps);
        rho.y.push_back(r.rho);
    }
    svg::Plot l1plot{sc.name + ": L1 distance vs eps", "eps", "L1 distance", true, true};
    write_file(out / "l1_distance.svg", svg::render(l1plot, {l1phi, l1psi}));
    svg::Plot rplot{sc.name + ": second eigenvalue vs eps", "eps", "rho", true, false};
    write_file(out / "rho.svg", svg::render(rplot, {rho}));

    log << fmt::format("[{}] {} rows written to {}\n", sc.name, study.rows.size(), out.string());
    return degraded ? kExitDegraded : kExitOk;
}

int run_markov(const Scenario& sc, const fs::path& out, std::ostream& log) {
    check_grid_rule(sc);
    std::vector<MarkovRow> rows;
    bool degraded = false;
    for (const auto& [lr, rl] : sc.markov_pairs) {
        MarkovRow row{lr, rl, std::nan(""), std::nan(""), std::nan(""), std::nan("")};
        try {
            const auto m = markov_stationary(lr, rl);
            row.alpha = m.alpha;
            row.rho = m.rho;
            const UlamMatrix q = UlamMatrix::from_dense({{1.0 - lr, lr}, {rl, 1.0 - rl}});
            const auto inv = invariant_density(q, 1e-14);
            row.alpha_numeric = inv.phi[0] / 2.0;
            row.rho_numeric = second_eigenpair(q, inv.phi, Interval{0.0, 0.5}, 1e-14).rho;
        } catch (const Error& e) {
            degraded = true;
            log << fmt::format("pair ({}, {}) failed: {}\n", lr, rl, e.what());
        }
        rows.push_back(row);
    }
    write_file(out / "markov.csv", to_string_with([&](std::ostream& os) { write_markov_csv(os, rows); }));
    write_file(out / "markov.json", markov_json(sc.name, rows));
    log << fmt::format("[{}] {} rows written to {}\n", sc.name, rows.size(), out.string());
    return degraded ? kExitDegraded : kExitOk;
}

}  // namespace

int run(const Scenario& scenario, const RunOptions& options, std::ostream& log) {
    const fs::path out = options.out.value_or(scenario.output_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) {
        log << fmt::format("fatal: cannot create output directory '{}': {}\n", out.string(), ec.message());
        return kExitFatal;
    }
    {
        const fs::path probe = out / ".write_probe";
        std::ofstream test(probe);
        if (!test) {
            log << fmt::format("fatal: output directory '{}' is not writable\n", out.string());
            return kExitFatal;
        }
        test.close();
        fs::remove(probe, ec);
    }
    try {
        return scenario.kind == Scenario::Kind::markov ? run_markov(scenario, out, log)
                                                       : run_family(scenario, options, out, log);
    } catch (const std::exception& e) {
        log << "fatal: " << e.what() << '\n';
        return kExitFatal;
    }
}

}  // namespace metamap
