#include "metamap/errors.hpp"
#include "metamap/metastability.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace metamap;
using testing_support::family_a;
using testing_support::family_b;

namespace {

double total_length(const std::vector<Interval>& v) {
    double s = 0.0;
    for (const auto& i : v) s += i.length();
    return s;
}

bool in_any(const std::vector<Interval>& v, double x) {
    for (const auto& i : v)
        if (x >= i.lo && x <= i.hi) return true;
    return false;
}

DensityGrid left_lebesgue(std::size_t n) { return DensityGrid::normalized_indicator(n, Interval{0.0, 0.5}); }
DensityGrid right_lebesgue(std::size_t n) { return DensityGrid::normalized_indicator(n, Interval{0.5, 1.0}); }

}  // namespace

TEST(Holes, FamilyA) {
    const auto rep = compute_holes(family_a().instantiate(0.01), 0.5);
    ASSERT_EQ(rep.H_l.size(), 1u);
    ASSERT_EQ(rep.H_r.size(), 1u);
    EXPECT_NEAR(rep.H_l[0].lo, 1.0 / 3.0 - 0.01, 1e-12);
    EXPECT_NEAR(rep.H_l[0].hi, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(rep.H_r[0].lo, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(rep.H_r[0].hi, 2.0 / 3.0 + 0.01 / 3.0, 1e-12);
    EXPECT_NEAR(rep.leb_l, 0.01, 1e-12);
    EXPECT_NEAR(rep.leb_r, 0.01 / 3.0, 1e-12);
    EXPECT_FALSE(rep.boundary_violation);
    EXPECT_TRUE(rep.warnings.empty());
}

TEST(Holes, UnperturbedHasNone) {
    const auto rep = compute_holes(family_a().base(), 0.5);
    EXPECT_EQ(total_length(rep.H_l), 0.0);
    EXPECT_EQ(total_length(rep.H_r), 0.0);
}

TEST(Holes, FamilyBTouchesBoundary) {
    const auto rep = compute_holes(family_b().instantiate(0.01), 0.5);
    EXPECT_NEAR(rep.leb_l, 0.03, 1e-12);
    EXPECT_NEAR(rep.leb_r, 0.01, 1e-12);
    EXPECT_TRUE(rep.boundary_violation);
    ASSERT_FALSE(rep.warnings.empty());
    EXPECT_NE(rep.warnings[0].find("boundary"), std::string::npos);
}

TEST(Holes, BadBoundary) {
    EXPECT_THROW(compute_holes(family_a().base(), 0.0), DomainError);
    EXPECT_THROW(compute_holes(family_a().base(), 1.0), DomainError);
}

TEST(Holes, AgreeWithPointwiseEvaluation) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto* fam : {&family_a(), &family_b()}) {
        const auto map = fam->instantiate(0.013);
        const auto rep = compute_holes(map, 0.5);
        int checked = 0;
        for (int s = 0; s < 1000; ++s) {
            const double x = u(gen);
            const double y = evaluate(map, x).front();
            // skip points within rounding distance of a hole edge
            if (std::abs(y - 0.5) < 1e-9) continue;
            const bool crosses = (x < 0.5) != (y < 0.5);
            const bool listed = x < 0.5 ? in_any(rep.H_l, x) : in_any(rep.H_r, x);
            EXPECT_EQ(crosses, listed) << "x=" << x << " y=" << y;
            ++checked;
        }
        EXPECT_GT(checked, 990);
    }
}

TEST(HoleMeasures, FamilyALebesgueHalves) {
    const std::size_t n = 3840;
    const auto rep = hole_measures(compute_holes(family_a().instantiate(0.01), 0.5), left_lebesgue(n), right_lebesgue(n));
    EXPECT_NEAR(rep.mu_l_Hl, 0.02, 1e-12);
    EXPECT_NEAR(rep.mu_r_Hr, 0.02 / 3.0, 1e-12);
    EXPECT_NEAR(rep.ratio, 1.0 / 3.0, 1e-10);
}

TEST(HoleMeasures, SymmetricHolesGiveOne) {
    HoleReport rep;
    rep.H_l = {Interval{0.1, 0.2}};
    rep.H_r = {Interval{0.8, 0.9}};
    const auto out = hole_measures(rep, left_lebesgue(100), right_lebesgue(100));
    EXPECT_NEAR(out.ratio, 1.0, 1e-12);
}

TEST(HoleMeasures, FamilyB) {
    const auto rep = hole_measures(compute_holes(family_b().instantiate(0.005), 0.5), left_lebesgue(1200), right_lebesgue(1200));
    EXPECT_NEAR(rep.ratio, 1.0 / 3.0, 1e-10);
}

TEST(HoleMeasures, Degenerate) {
    HoleReport empty;
    EXPECT_THROW(hole_measures(empty, left_lebesgue(10), right_lebesgue(10)), DegeneracyError);
    HoleReport right_only;
    right_only.H_r = {Interval{0.6, 0.7}};
    EXPECT_THROW(hole_measures(right_only, left_lebesgue(10), right_lebesgue(10)), DomainError);
}

TEST(AnalyticLhr, FamilyA) {
    EXPECT_NEAR(analytic_lhr(family_a(), left_lebesgue(3840), right_lebesgue(3840)), 1.0 / 3.0, 1e-12);
}

TEST(AnalyticLhr, Variants) {
    const auto& fa = family_a();
    auto with_holes = [&](std::vector<HoleCoefficient> h) {
        return PerturbationFamily(fa.base(), fa.perturbations(), fa.boundary(), std::move(h));
    };
    const auto l = left_lebesgue(600), r = right_lebesgue(600);
    EXPECT_EQ(analytic_lhr(with_holes({{1.0 / 3.0, Side::left, 1.0, 0.0}}), l, r), 0.0);
    EXPECT_NEAR(analytic_lhr(with_holes({{1.0 / 3.0, Side::left, 1.0, 0.0}, {2.0 / 3.0, Side::right, 0.0, 1.0}}), l, r),
                1.0, 1e-12);
    EXPECT_THROW(analytic_lhr(with_holes({{2.0 / 3.0, Side::right, 0.0, 1.0}}), l, r), DomainError);
    EXPECT_THROW(analytic_lhr(with_holes({}), l, r), DomainError);
}

TEST(PredictMixture, Weights) {
    const auto l = left_lebesgue(60), r = right_lebesgue(60);
    const auto m = predict_mixture(1.0 / 3.0, l, r);
    EXPECT_NEAR(m.alpha, 0.25, 1e-15);
    EXPECT_NEAR(m.density[0], 0.5, 1e-14);
    EXPECT_NEAR(m.density[59], 1.5, 1e-14);
    EXPECT_NEAR(m.density.integral(), 1.0, 1e-14);
    EXPECT_NEAR(predict_mixture(1.0, l, r).alpha, 0.5, 1e-15);
    EXPECT_EQ(predict_mixture(std::numeric_limits<double>::infinity(), l, r).alpha, 1.0);
    EXPECT_EQ(predict_mixture(0.0, l, r).alpha, 0.0);
    EXPECT_THROW(predict_mixture(-0.1, l, r), DomainError);
    EXPECT_THROW(predict_mixture(std::nan(""), l, r), DomainError);
}

TEST(MarkovStationary, Examples) {
    auto m = markov_stationary(0.01, 0.03);
    EXPECT_NEAR(m.alpha, 0.75, 1e-15);
    EXPECT_NEAR(m.rho, 0.96, 1e-15);
    m = markov_stationary(0.03, 0.01);
    EXPECT_NEAR(m.alpha, 0.25, 1e-15);
    m = markov_stationary(0.02, 0.02);
    EXPECT_NEAR(m.alpha, 0.5, 1e-15);
    m = markov_stationary(0.0, 0.03);
    EXPECT_EQ(m.alpha, 1.0);
    EXPECT_NEAR(m.rho, 0.97, 1e-15);
}

TEST(MarkovStationary, Errors) {
    EXPECT_THROW(markov_stationary(0.0, 0.0), DegeneracyError);
    EXPECT_THROW(markov_stationary(-0.1, 0.2), DomainError);
    EXPECT_THROW(markov_stationary(0.7, 0.6), DomainError);
}

TEST(FluxBalance, Examples) {
    HoleReport rep;
    rep.H_l = {Interval{0.2, 0.23}};
    rep.H_r = {Interval{0.7, 0.71}};
    EXPECT_NEAR(flux_balance(DensityGrid::uniform(100), rep), 0.02, 1e-14);
    const auto mix = predict_mixture(1.0 / 3.0, left_lebesgue(100), right_lebesgue(100)).density;
    // 0.5 * 0.03 vs 1.5 * 0.01
    EXPECT_NEAR(flux_balance(mix, rep), 0.0, 1e-14);
    EXPECT_EQ(flux_balance(DensityGrid(100), rep), 0.0);
}

TEST(ReferenceDensities, RestrictedSolveMatchesLebesgue) {
    const auto [l, r] = reference_densities(family_a(), 480, false);
    EXPECT_LT(l1_distance(l, left_lebesgue(480)), 1e-8);
    EXPECT_LT(l1_distance(r, right_lebesgue(480)), 1e-8);
}

TEST(ConvergenceStudy, FamilyAConverges) {
    const std::vector<double> eps{0.02, 0.01, 0.005};
    const auto st = convergence_study(family_a(), eps, 1920, StudyOptions{.lebesgue_halves = true});
    ASSERT_EQ(st.rows.size(), 3u);
    EXPECT_TRUE(st.lhr_analytic);
    EXPECT_NEAR(st.lhr_limit, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(st.alpha_pred, 0.25, 1e-12);
    for (std::size_t i = 0; i < st.rows.size(); ++i) {
        const auto& r = st.rows[i];
        EXPECT_TRUE(r.ok) << r.eps;
        EXPECT_LT(r.flux_gap, 1e-9);
        EXPECT_NEAR(r.lhr_emp, 1.0 / 3.0, 0.05);
        EXPECT_NEAR(r.psi_integral, 0.0, 1e-10);
        if (i > 0) {
            EXPECT_LT(r.l1_phi_vs_mixture, st.rows[i - 1].l1_phi_vs_mixture);
            EXPECT_GT(r.rho, st.rows[i - 1].rho);
        }
        // psi points along phi_l - phi_r
        double corr = 0.0;
        for (std::size_t c = 0; c < 1920; ++c) corr += st.artifacts[i].psi[c] * (st.phi_l[c] - st.phi_r[c]);
        EXPECT_GT(corr, 0.0);
    }
}

TEST(ConvergenceStudy, FamilyBMassDriftsRight) {
    const std::vector<double> eps{0.02, 0.01, 0.005};
    const auto st = convergence_study(family_b(), eps, 1920, StudyOptions{.lebesgue_halves = true});
    for (std::size_t i = 0; i < st.rows.size(); ++i) {
        EXPECT_FALSE(st.rows[i].warnings.empty());
        EXPECT_GT(st.rows[i].l1_phi_vs_mixture, 0.45);
        if (i > 0) {
            EXPECT_LT(l1_distance(st.artifacts[i].phi, st.phi_r), l1_distance(st.artifacts[i - 1].phi, st.phi_r));
        }
    }
}

TEST(ConvergenceStudy, InputErrors) {
    EXPECT_TRUE(convergence_study(family_a(), {}, 480).rows.empty());
    EXPECT_THROW(convergence_study(family_a(), {0.01, 0.02}, 480), DomainError);
    EXPECT_THROW(convergence_study(family_a(), {0.01, 0.0}, 480), DomainError);
}

TEST(ConvergenceStudy, ParallelMatchesSerial) {
    const std::vector<double> eps{0.02, 0.01, 0.005};
    StudyOptions serial{.lebesgue_halves = true};
    StudyOptions parallel{.lebesgue_halves = true, .jobs = 3};
    const auto a = convergence_study(family_a(), eps, 960, serial);
    const auto b = convergence_study(family_a(), eps, 960, parallel);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].rho, b.rows[i].rho);
        EXPECT_EQ(a.rows[i].l1_phi_vs_mixture, b.rows[i].l1_phi_vs_mixture);
        EXPECT_EQ(a.rows[i].escape_ratio_l, b.rows[i].escape_ratio_l);
    }
}
