#include "metamap/errors.hpp"
#include "metamap/map_model.hpp"

#include "../oracles/oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace metamap;
using testing_support::affine_map;
using testing_support::family_a;
using testing_support::family_b;

namespace {

std::vector<double> sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

void expect_same_set(std::vector<double> got, std::vector<double> want, double tol = 1e-12) {
    got = sorted(got);
    want = sorted(want);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

bool mentions(const HypothesisReport& r, const std::string& needle) {
    return std::any_of(r.diagnostics.begin(), r.diagnostics.end(),
                       [&](const std::string& d) { return d.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Interval, RejectsReversedOrOutOfRange) {
    EXPECT_THROW(Interval(0.6, 0.4), DomainError);
    EXPECT_THROW(Interval(-0.1, 0.4), DomainError);
    EXPECT_THROW(Interval(0.5, 1.1), DomainError);
    EXPECT_DOUBLE_EQ(Interval(0.25, 0.75).overlap(Interval(0.5, 1.0)), 0.25);
}

TEST(Evaluate, InteriorPointUsesBranchFormula) {
    expect_same_set(evaluate(family_a().base(), 0.25), {0.25});
}

TEST(Evaluate, CriticalPointReturnsBothOneSidedLimits) {
    const auto v = evaluate(family_a().base(), 1.0 / 6.0);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_NEAR(v[0], 0.5, 1e-15);
    EXPECT_NEAR(v[1], 0.0, 1e-15);
}

TEST(Evaluate, FixedEndpoint) { expect_same_set(evaluate(family_a().base(), 0.0), {0.0}); }

TEST(Evaluate, OutsideUnitIntervalIsDomainError) {
    EXPECT_THROW(evaluate(family_a().base(), -1e-3), DomainError);
    EXPECT_THROW(evaluate(family_a().base(), 1.001), DomainError);
}

TEST(Evaluate, InteriorSamplesMatchFormulaExactly) {
    const auto& map = family_a().base();
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const double x = u(gen);
        if (map.critical_index(x)) continue;
        const auto v = evaluate(map, x);
        ASSERT_EQ(v.size(), 1u);
        const auto& brs = map.branches();
        const auto it = std::find_if(brs.begin(), brs.end(), [&](const Branch& b) { return b.domain().contains(x); });
        EXPECT_NEAR(v[0], it->slope() * x + it->intercept(), 1e-14);
    }
}

TEST(MinExpansion, FamilyAIsThree) { EXPECT_DOUBLE_EQ(min_expansion(family_a().base()), 3.0); }

TEST(MinExpansion, DoublingMapIsTwo) { EXPECT_DOUBLE_EQ(min_expansion(testing_support::doubling_map()), 2.0); }

TEST(MinExpansion, WeakBranchSetsMinimumAndFailsExpansionCheck) {
    const auto map = affine_map({{0.0, 0.5, 1.5, 0.0}, {0.5, 0.75, 2.0, -0.5}, {0.75, 1.0, 2.0, -1.0}});
    EXPECT_DOUBLE_EQ(min_expansion(map), 1.5);
    PerturbationFamily fam(map, std::vector<BranchPerturbation>(3), 0.5);
    const auto rep = validate_hypotheses(fam, 4);
    EXPECT_FALSE(rep.passes_I4a);
    EXPECT_TRUE(mentions(rep, "I4a"));
}

TEST(Distortion, AffineMapsHaveNone) {
    EXPECT_EQ(distortion(family_a().base()), 0.0);
    EXPECT_EQ(distortion(family_a().instantiate(0.01)), 0.0);
    EXPECT_EQ(distortion(family_b().instantiate(0.005)), 0.0);
}

TEST(Distortion, QuadraticBranchMatchesDenseSupremum) {
    // x^2 + 2x on [0, 1/3] (derivative >= 2), then an affine branch.
    std::vector<Branch> brs{
        Branch::smooth({0.0, 1.0 / 3.0}, [](double x) { return x * x + 2 * x; }, [](double x) { return 2 * x + 2; },
                       [](double) { return 2.0; }),
        Branch::affine({1.0 / 3.0, 1.0}, 1.5, -0.5),
    };
    PiecewiseMap map(std::move(brs));
    // sup 2/|2x+2| over [0,1/3] is attained at x = 0
    double oracle = 0.0;
    for (int k = 0; k <= 100000; ++k) oracle = std::max(oracle, 2.0 / (2.0 * (k / 300000.0) + 2.0));
    EXPECT_NEAR(distortion(map), oracle, 1e-9);
    EXPECT_NEAR(min_expansion(map), 1.5, 1e-12);
}

TEST(Branch, RejectsNonExpandingAffineSlope) {
    EXPECT_THROW(Branch::affine({0.0, 0.5}, 1.0, 0.0), ModelError);
    EXPECT_THROW(Branch::affine({0.0, 0.5}, -0.5, 0.5), ModelError);
}

TEST(PiecewiseMap, RejectsGapsOverlapsAndEscapingImages) {
    EXPECT_THROW(affine_map({{0.0, 0.4, 2.0, 0.0}, {0.5, 1.0, 2.0, -1.0}}), ModelError);
    EXPECT_THROW(affine_map({{0.0, 0.6, 1.5, 0.0}, {0.5, 1.0, 2.0, -1.0}}), ModelError);
    EXPECT_THROW(affine_map({{0.0, 0.5, 3.0, 0.0}, {0.5, 1.0, 2.0, -1.0}}), ModelError);
    EXPECT_THROW(PiecewiseMap({}), ModelError);
}

TEST(PiecewiseMap, CriticalSetIsBranchEndpoints) {
    const auto& c = family_a().base().critical_set();
    expect_same_set(c, {0.0, 1.0 / 6, 1.0 / 3, 0.5, 2.0 / 3, 5.0 / 6, 1.0});
    const auto& brs = family_a().base().branches();
    for (std::size_t i = 0; i + 1 < brs.size(); ++i) EXPECT_EQ(brs[i].domain().hi, brs[i + 1].domain().lo);
}

TEST(BranchPreimages, FamilyAHalfHasSixPreimages) {
    const auto pre = branch_preimages(family_a().base(), 0.5);
    ASSERT_EQ(pre.size(), 6u);
    const std::vector<double> want{1.0 / 6, 1.0 / 3, 1.0 / 3, 2.0 / 3, 2.0 / 3, 5.0 / 6};
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(pre[i].branch, i);
        EXPECT_NEAR(pre[i].x, want[i], 1e-15);
    }
}

TEST(BranchPreimages, FamilyAZeroHitsOnlyLeftBranches) {
    const auto pre = branch_preimages(family_a().base(), 0.0);
    ASSERT_EQ(pre.size(), 3u);
    EXPECT_NEAR(pre[0].x, 0.0, 1e-15);
    EXPECT_NEAR(pre[1].x, 1.0 / 6, 1e-15);
    EXPECT_NEAR(pre[2].x, 0.5, 1e-15);
}

TEST(BranchPreimages, ValueOutsideEveryImageHasNone) {
    const auto map = affine_map({{0.0, 0.5, 1.5, 0.0}, {0.5, 1.0, 1.5, -0.5}});
    // images [0, 0.75] and [0.25, 1]: 0.9 only from the second branch
    const auto pre = branch_preimages(map, 0.9);
    ASSERT_EQ(pre.size(), 1u);
    EXPECT_EQ(pre[0].branch, 1u);
}

TEST(BranchPreimages, RoundTripThroughEvaluate) {
    std::vector<Branch> brs{
        Branch::smooth({0.0, 1.0 / 3.0}, [](double x) { return x * x + 2 * x; }, [](double x) { return 2 * x + 2; },
                       [](double) { return 2.0; }),
        Branch::affine({1.0 / 3.0, 1.0}, 1.5, -0.5),
    };
    const PiecewiseMap smooth(std::move(brs));
    for (const PiecewiseMap* map : {&family_a().base(), &smooth}) {
        std::mt19937_64 gen(11);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < 1000; ++k) {
            const double x = u(gen);
            if (map->critical_index(x)) continue;
            const auto pre = branch_preimages(*map, evaluate(*map, x).front());
            EXPECT_TRUE(std::any_of(pre.begin(), pre.end(), [&](const Preimage& p) { return std::abs(p.x - x) < 1e-12; }))
                << "x = " << x;
        }
    }
}

TEST(InfinitesimalHoles, FamilyA) {
    expect_same_set(infinitesimal_holes(family_a().base(), 0.5), {1.0 / 6, 1.0 / 3, 2.0 / 3, 5.0 / 6});
}

TEST(InfinitesimalHoles, FamilyBIncludesRightEndpoint) {
    // the last right branch -3x + 7/2 reaches 1/2 at x = 1
    expect_same_set(infinitesimal_holes(family_b().base(), 0.5), {1.0 / 6, 1.0 / 3, 2.0 / 3, 5.0 / 6, 1.0});
}

TEST(InfinitesimalHoles, OnlyBoundaryPreimageGivesEmptySet) {
    const auto map = affine_map(
        {{0.0, 0.25, 1.5, 0.0}, {0.25, 0.5, 2.0, -0.5}, {0.5, 0.75, 2.0, -0.5}, {0.75, 1.0, 1.5, -0.5}});
    EXPECT_TRUE(infinitesimal_holes(map, 0.5).empty());
}

TEST(InfinitesimalHoles, AreCriticalPoints) {
    for (const auto* fam : {&family_a(), &family_b()})
        for (double h : infinitesimal_holes(fam->base(), 0.5)) EXPECT_TRUE(fam->base().critical_index(h).has_value());
}

TEST(InfinitesimalHoles, InteriorPreimageIsHypothesisViolation) {
    EXPECT_THROW(infinitesimal_holes(testing_support::doubling_map(), 0.5), HypothesisViolation);
}

TEST(PerturbationFamily, ZeroEpsReproducesBase) {
    for (const auto* fam : {&family_a(), &family_b()}) {
        const auto m = fam->instantiate(0.0);
        ASSERT_EQ(m.branch_count(), fam->base().branch_count());
        for (std::size_t i = 0; i < m.branch_count(); ++i) {
            EXPECT_EQ(m.branches()[i].slope(), fam->base().branches()[i].slope());
            EXPECT_EQ(m.branches()[i].intercept(), fam->base().branches()[i].intercept());
            EXPECT_EQ(m.branches()[i].domain(), fam->base().branches()[i].domain());
        }
    }
}

TEST(PerturbationFamily, FamilyACoefficientsAtEps) {
    const auto m = family_a().instantiate(0.01);
    EXPECT_NEAR(m.branches()[1].intercept(), -0.5 + 0.03, 1e-15);
    EXPECT_NEAR(m.branches()[4].intercept(), -1.5 - 0.01, 1e-15);
    EXPECT_EQ(m.branches()[0].intercept(), 0.0);
}

TEST(ValidateHypotheses, FamilyAPassesWithFinitePostcriticalSet) {
    const auto rep = validate_hypotheses(family_a(), 8);
    EXPECT_TRUE(rep.passes_I2);
    EXPECT_TRUE(rep.passes_I4a);
    EXPECT_TRUE(rep.passes_P2);
    EXPECT_EQ(rep.p2_variant, "P2b");
    EXPECT_TRUE(rep.all_checked_pass());
    expect_same_set(rep.postcritical, {0.0, 0.5, 1.0});
    EXPECT_TRUE(mentions(rep, "I1/P1 assumed"));
}

TEST(ValidateHypotheses, FamilyBFailsBoundaryCondition) {
    const auto rep = validate_hypotheses(family_b(), 8);
    EXPECT_FALSE(rep.passes_P2);
    EXPECT_TRUE(mentions(rep, "P2b fails"));
    EXPECT_FALSE(rep.all_checked_pass());
}

TEST(ValidateHypotheses, SlopeTwoFailsExpansionCheck) {
    const auto map = affine_map(
        {{0.0, 0.25, 2.0, 0.0}, {0.25, 0.5, 2.0, -0.5}, {0.5, 0.75, 2.0, -0.5}, {0.75, 1.0, 2.0, -1.0}});
    const auto rep = validate_hypotheses(PerturbationFamily(map, std::vector<BranchPerturbation>(4), 0.5), 8);
    EXPECT_FALSE(rep.passes_I4a);
    EXPECT_DOUBLE_EQ(rep.min_expansion, 2.0);
}

TEST(ValidateHypotheses, EveryFailureHasADiagnostic) {
    const auto rep = validate_hypotheses(family_b(), 8);
    if (!rep.passes_I2) {
        EXPECT_TRUE(mentions(rep, "I2"));
    }
    if (!rep.passes_P2) {
        EXPECT_TRUE(mentions(rep, "P2"));
    }
    if (!rep.passes_I4a) {
        EXPECT_TRUE(mentions(rep, "I4a"));
    }
}

TEST(ValidateHypotheses, PostcriticalSetMatchesExactEnumeration) {
    const auto exact = oracle::postcritical(oracle::family_a(oracle::Q(0)), 8);
    std::vector<double> want;
    for (const auto& [q, depth] : exact) want.push_back(q.to_double());
    expect_same_set(validate_hypotheses(family_a(), 8).postcritical, want);
}

TEST(ValidateHypotheses, DepthBelowOneIsRejected) { EXPECT_THROW(validate_hypotheses(family_a(), 0), DomainError); }
