#pragma once

#include "metamap/bv_analysis.hpp"
#include "metamap/density_grid.hpp"
#include "metamap/map_model.hpp"
#include "metamap/spectral.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace metamap {

/// H_l = I_l ∩ T^{-1} I_r and H_r = I_r ∩ T^{-1} I_l, with their measures.
struct HoleReport {
    std::vector<Interval> H_l;
    std::vector<Interval> H_r;
    double leb_l = 0.0;
    double leb_r = 0.0;
    double mu_l_Hl = 0.0;
    double mu_r_Hr = 0.0;
    double ratio = 0.0;  // mu_r(H_r) / mu_l(H_l)
    bool boundary_violation = false;
    std::vector<std::string> warnings;
};

/// Hole geometry of T_eps (measures left at zero).
HoleReport compute_holes(const PiecewiseMap& map_eps, double b);

/// Fills mu_l(H_l), mu_r(H_r) and their ratio from the eps = 0 densities.
HoleReport hole_measures(HoleReport report, const DensityGrid& phi_l, const DensityGrid& phi_r);

/// First-order limiting hole ratio from the hole coefficients and density
/// values at the infinitesimal holes.
double analytic_lhr(const PerturbationFamily& family, const DensityGrid& phi_l, const DensityGrid& phi_r);

/// Density value near x, averaging the containing cell with its neighbours
/// (both cells when x sits on a boundary), restricted to cells inside `side`.
double density_value_near(const DensityGrid& d, double x, const Interval& side);

struct Mixture {
    double alpha = 0.0;
    DensityGrid density;
};

/// alpha = lhr / (1 + lhr), alpha = 1 for lhr = +inf.
Mixture predict_mixture(double lhr, const DensityGrid& phi_l, const DensityGrid& phi_r);

struct MarkovResult {
    double alpha = 0.0;
    double rho = 0.0;
};

/// Two-state chain with leak rates l->r and r->l.
MarkovResult markov_stationary(double eps_lr, double eps_rl);

/// |mu_eps(H_l) - mu_eps(H_r)|.
double flux_balance(const DensityGrid& phi_eps, const HoleReport& report);

struct SweepRow {
    double eps = 0.0;
    double lhr_emp = 0.0;
    double alpha_pred = 0.0;
    double l1_phi_vs_mixture = 0.0;
    double l1_psi_vs_half_diff = 0.0;
    double rho = 0.0;
    double flux_gap = 0.0;
    double escape_ratio_l = 0.0;
    double escape_ratio_r = 0.0;

    // diagnostics (JSON mirror only)
    bool ok = true;
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
    bool leading_simple = true;
    double mu_eps_Il = 0.0;
    double tv_phi = 0.0;
    double sup_phi = 0.0;
    double psi_integral = 0.0;
    double psi_left_integral = 0.0;
    double lipschitz_regular = 0.0;
    std::size_t jumps = 0;
    std::size_t unmatched_jumps = 0;
    double saltus_near_hole_l = 0.0;
    double saltus_near_hole_r = 0.0;
    double residual_phi = 0.0;
    double residual_psi = 0.0;
};

struct StudyOptions {
    double tol = kDefaultSpectralTol;
    bool second_eigenpair = true;
    bool escape_rates = true;
    bool saltus = true;
    int hierarchy_depth = 6;
    /// Lipschitz scale of the jump threshold.
    double lip_bound = 1.0;
    /// Half-width of the window around each infinitesimal hole for the saltus check.
    double hole_window = 1.0 / 48.0;
    /// phi_l, phi_r are normalized Lebesgue on each half (full-branch affine halves).
    bool lebesgue_halves = false;
    unsigned jobs = 1;
};

/// Per-eps artifacts kept for reporting.
struct SweepArtifacts {
    DensityGrid phi;
    DensityGrid psi;
    DensityGrid mixture;
    std::optional<SaltusDecomposition> saltus;
    HoleReport holes;
};

struct StudyResult {
    std::vector<SweepRow> rows;
    std::vector<SweepArtifacts> artifacts;
    DensityGrid phi_l;
    DensityGrid phi_r;
    double lhr_limit = 0.0;
    bool lhr_analytic = false;
    double alpha_pred = 0.0;
};

/// phi_l, phi_r at eps = 0: closed form when `lebesgue_halves`, otherwise
/// restricted Ulam solves on each half.
std::pair<DensityGrid, DensityGrid> reference_densities(const PerturbationFamily& family, std::size_t n,
                                                        bool lebesgue_halves, double tol = kDefaultSpectralTol);

/// Full pipeline per eps. Rows carry failure flags instead of aborting.
StudyResult convergence_study(const PerturbationFamily& family, const std::vector<double>& eps_list, std::size_t n,
                              const StudyOptions& options = {});

}  // namespace metamap
