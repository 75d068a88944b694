#pragma once

#include "metamap/map_model.hpp"
#include "metamap/metastability.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace metamap {

/// Comma separated, '.' decimals, LF endings, %.17g numbers.
std::string format_number(double v);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// x (cell center), phi, mixture, psi. Empty grids are written as blank columns.
void write_density_csv(std::ostream& os, const DensityGrid& phi, const DensityGrid& mixture, const DensityGrid& psi);

std::string hypothesis_report_json(const HypothesisReport& rep);
std::string study_json(const std::string& name, const StudyResult& study, const HypothesisReport* hypotheses);

struct MarkovRow {
    double eps_lr = 0.0;
    double eps_rl = 0.0;
    double alpha = 0.0;
    double rho = 0.0;
    double alpha_numeric = 0.0;
    double rho_numeric = 0.0;
};

void write_markov_csv(std::ostream& os, const std::vector<MarkovRow>& rows);
std::string markov_json(const std::string& name, const std::vector<MarkovRow>& rows);

}  // namespace metamap
