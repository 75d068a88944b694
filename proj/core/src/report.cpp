#include "metamap/report.hpp"

#include <fmt/core.h>
#include <json.hpp>

#include <cmath>
#include <ostream>

namespace metamap {

using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json intervals_json(const std::vector<Interval>& v) {
    json a = json::array();
    for (const auto& i : v) a.push_back({i.lo, i.hi});
    return a;
}

json hypotheses_to_json(const HypothesisReport& rep) {
    json j;
    j["min_expansion"] = rep.min_expansion;
    j["distortion"] = rep.distortion;
    j["passes_I2"] = rep.passes_I2;
    j["I2_depth"] = rep.i2_depth;
    j["passes_I3"] = rep.passes_I3 ? json(*rep.passes_I3) : json(nullptr);
    j["passes_I4a"] = rep.passes_I4a;
    j["passes_P2"] = rep.passes_P2;
    j["P2_variant"] = rep.p2_variant;
    j["infinitesimal_holes"] = rep.holes;
    j["postcritical"] = rep.postcritical;
    j["diagnostics"] = rep.diagnostics;
    return j;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);  // shortest round-trip form
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "eps,lhr_emp,alpha_pred,l1_phi_vs_mixture,l1_psi_vs_half_diff,rho,flux_gap,escape_ratio_l,escape_ratio_r\n";
    for (const auto& r : rows) {
        os << format_number(r.eps) << ',' << format_number(r.lhr_emp) << ',' << format_number(r.alpha_pred) << ','
           << format_number(r.l1_phi_vs_mixture) << ',' << format_number(r.l1_psi_vs_half_diff) << ','
           << format_number(r.rho) << ',' << format_number(r.flux_gap) << ',' << format_number(r.escape_ratio_l)
           << ',' << format_number(r.escape_ratio_r) << '\n';
    }
}

void write_density_csv(std::ostream& os, const DensityGrid& phi, const DensityGrid& mixture, const DensityGrid& psi) {
    os << "x,phi,mixture,psi\n";
    auto col = [](const DensityGrid& g, std::size_t i) { return i < g.size() ? format_number(g[i]) : std::string(); };
    for (std::size_t i = 0; i < phi.size(); ++i)
        os << format_number(phi.cell_center(i)) << ',' << col(phi, i) << ',' << col(mixture, i) << ',' << col(psi, i)
           << '\n';
}

std::string hypothesis_report_json(const HypothesisReport& rep) { return hypotheses_to_json(rep).dump(2) + "\n"; }

std::string study_json(const std::string& name, const StudyResult& study, const HypothesisReport* hypotheses) {
    json j;
    j["scenario"] = name;
    j["lhr_limit"] = number_or_null(study.lhr_limit);
    j["lhr_source"] = study.lhr_analytic ? "hole coefficients" : "smallest-eps empirical ratio";
    j["alpha_pred"] = number_or_null(study.alpha_pred);
    if (hypotheses) j["hypotheses"] = hypotheses_to_json(*hypotheses);
    json rows = json::array();
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
        const auto& r = study.rows[i];
        json row;
        row["eps"] = r.eps;
        row["lhr_emp"] = number_or_null(r.lhr_emp);
        row["alpha_pred"] = number_or_null(r.alpha_pred);
        row["l1_phi_vs_mixture"] = number_or_null(r.l1_phi_vs_mixture);
        row["l1_psi_vs_half_diff"] = number_or_null(r.l1_psi_vs_half_diff);
        row["rho"] = number_or_null(r.rho);
        row["flux_gap"] = number_or_null(r.flux_gap);
        row["escape_ratio_l"] = number_or_null(r.escape_ratio_l);
        row["escape_ratio_r"] = number_or_null(r.escape_ratio_r);
        row["ok"] = r.ok;
        row["failures"] = r.failures;
        row["warnings"] = r.warnings;
        row["leading_simple"] = r.leading_simple;
        row["mu_eps_Il"] = r.mu_eps_Il;
        row["tv_phi"] = r.tv_phi;
        row["sup_phi"] = r.sup_phi;
        row["psi_integral"] = r.psi_integral;
        row["psi_left_integral"] = r.psi_left_integral;
        row["lipschitz_regular"] = r.lipschitz_regular;
        row["jumps"] = r.jumps;
        row["unmatched_jumps"] = r.unmatched_jumps;
        row["saltus_near_hole_l"] = r.saltus_near_hole_l;
        row["saltus_near_hole_r"] = r.saltus_near_hole_r;
        row["residual_phi"] = r.residual_phi;
        row["residual_psi"] = r.residual_psi;
        if (i < study.artifacts.size()) {
            const auto& h = study.artifacts[i].holes;
            row["holes"] = {{"H_l", intervals_json(h.H_l)}, {"H_r", intervals_json(h.H_r)},
                            {"leb_l", h.leb_l},              {"leb_r", h.leb_r},
                            {"mu_l_Hl", h.mu_l_Hl},          {"mu_r_Hr", h.mu_r_Hr},
                            {"boundary_violation", h.boundary_violation}};
        }
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

void write_markov_csv(std::ostream& os, const std::vector<MarkovRow>& rows) {
    os << "eps_lr,eps_rl,alpha,rho,alpha_numeric,rho_numeric\n";
    for (const auto& r : rows)
        os << format_number(r.eps_lr) << ',' << format_number(r.eps_rl) << ',' << format_number(r.alpha) << ','
           << format_number(r.rho) << ',' << format_number(r.alpha_numeric) << ',' << format_number(r.rho_numeric)
           << '\n';
}

std::string markov_json(const std::string& name, const std::vector<MarkovRow>& rows) {
    json j;
    j["scenario"] = name;
    json a = json::array();
    for (const auto& r : rows)
        a.push_back({{"eps_lr", r.eps_lr},
                     {"eps_rl", r.eps_rl},
                     {"alpha", r.alpha},
                     {"rho", r.rho},
                     {"alpha_numeric", number_or_null(r.alpha_numeric)},
                     {"rho_numeric", number_or_null(r.rho_numeric)}});
    j["rows"] = std::move(a);
    return j.dump(2) + "\n";
}

}  // namespace metamap
