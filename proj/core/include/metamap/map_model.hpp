#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace metamap {

/// Endpoint comparisons for affine data loaded from exact rationals.
inline constexpr double kEndpointTol = 1e-12;

/// Closed subinterval of [0,1].
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    Interval() = default;
    Interval(double lo_, double hi_);

    double length() const noexcept { return hi - lo; }
    bool contains(double x, double tol = 0.0) const noexcept { return x >= lo - tol && x <= hi + tol; }
    double overlap(const Interval& other) const noexcept;

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// One monotone C2 piece of a piecewise expanding map.
///
/// Affine branches keep their coefficients so that preimages and Ulam
/// entries can be computed in closed form. Smooth branches carry user
/// supplied callables for the value and the first two derivatives; they
/// are evaluated on the closed domain, so the callables must extend to
/// the endpoints.
class Branch {
public:
    using Fn = std::function<double(double)>;

    static Branch affine(Interval domain, double slope, double intercept);
    static Branch smooth(Interval domain, Fn value, Fn derivative, Fn second_derivative);

    const Interval& domain() const noexcept { return domain_; }
    bool is_affine() const noexcept { return affine_; }
    double slope() const;      // affine only
    double intercept() const;  // affine only

    double value(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    /// +1 increasing, -1 decreasing.
    int orientation() const noexcept { return orientation_; }

    /// Values at the domain endpoints (one-sided limits of the full map).
    double left_value() const { return value(domain_.lo); }
    double right_value() const { return value(domain_.hi); }
    Interval image() const;

    /// Unique x in the closed domain with value(x) == y, if y lies in the closed image.
    /// Smooth branches use safeguarded Newton/bisection to 1e-13; throws
    /// NumericalError naming `branch_id` on failure.
    std::optional<double> preimage(double y, std::size_t branch_id = 0) const;

private:
    Branch() = default;

    Interval domain_;
    bool affine_ = true;
    double slope_ = 0.0;
    double intercept_ = 0.0;
    Fn f_, df_, d2f_;
    int orientation_ = 1;
};

/// Piecewise C2 uniformly expanding map of [0,1], bi-valued at its critical points.
class PiecewiseMap {
public:
    explicit PiecewiseMap(std::vector<Branch> branches);

    const std::vector<Branch>& branches() const noexcept { return branches_; }
    std::size_t branch_count() const noexcept { return branches_.size(); }
    /// 0 = c_0 < c_1 < ... < c_d = 1
    const std::vector<double>& critical_set() const noexcept { return critical_; }
    bool all_affine() const noexcept;

    /// Index of the critical point equal to x within kEndpointTol.
    std::optional<std::size_t> critical_index(double x) const noexcept;

private:
    std::vector<Branch> branches_;
    std::vector<double> critical_;
};

/// Additive perturbation of one branch. Affine branches use the linear
/// coefficients; smooth branches add g(x, eps) with the given derivatives.
struct BranchPerturbation {
    double slope_eps = 0.0;
    double intercept_eps = 0.0;
    std::function<double(double, double)> smooth_delta;
    std::function<double(double, double)> smooth_delta_dx;
    std::function<double(double, double)> smooth_delta_dxx;
};

enum class Side { left, right };

/// First-order hole germ: near the infinitesimal hole `point`, the hole is
/// (point - a*eps + o(eps), point + b*eps + o(eps)).
struct HoleCoefficient {
    double point = 0.0;
    Side side = Side::left;
    double a = 0.0;
    double b = 0.0;
};

/// eps -> T_eps with fixed branch domains.
class PerturbationFamily {
public:
    PerturbationFamily(PiecewiseMap base, std::vector<BranchPerturbation> perturbations, double boundary,
                       std::vector<HoleCoefficient> holes = {});

    const PiecewiseMap& base() const noexcept { return base_; }
    const std::vector<BranchPerturbation>& perturbations() const noexcept { return perturbations_; }
    double boundary() const noexcept { return boundary_; }
    const std::vector<HoleCoefficient>& hole_coefficients() const noexcept { return holes_; }
    bool has_hole_coefficients() const noexcept { return !holes_.empty(); }

    Interval left_interval() const { return {0.0, boundary_}; }
    Interval right_interval() const { return {boundary_, 1.0}; }

    /// T_eps. instantiate(0) reproduces base() exactly.
    PiecewiseMap instantiate(double eps) const;

private:
    PiecewiseMap base_;
    std::vector<BranchPerturbation> perturbations_;
    double boundary_;
    std::vector<HoleCoefficient> holes_;
};

/// {T(x)} in a branch interior; both one-sided limits at a critical point.
std::vector<double> evaluate(const PiecewiseMap& map, double x);

/// inf |T'|: exact for affine branches, sampled for smooth ones.
double min_expansion(const PiecewiseMap& map);

/// sup |T''| / |T'|: zero for affine maps, refined dense-grid sup otherwise.
double distortion(const PiecewiseMap& map);

struct Preimage {
    double x;
    std::size_t branch;
};

/// One preimage per branch whose closed image contains y.
std::vector<Preimage> branch_preimages(const PiecewiseMap& map, double y);

/// T^{-1}{b} \ {b}, deduplicated. Throws HypothesisViolation if a preimage
/// is not a critical point.
std::vector<double> infinitesimal_holes(const PiecewiseMap& map, double b);

/// Structural checks on the unperturbed map and the boundary condition.
/// I1/P1 (uniqueness of the ACIMs) are not decided here.
struct HypothesisReport {
    double min_expansion = 0.0;
    double distortion = 0.0;
    bool passes_I2 = false;
    int i2_depth = 0;
    std::optional<bool> passes_I3;  // needs densities
    bool passes_I4a = false;
    bool passes_P2 = false;
    std::string p2_variant;  // "P2a" or "P2b"
    std::vector<double> holes;
    std::vector<double> postcritical;
    std::vector<std::string> diagnostics;

    bool all_checked_pass() const noexcept {
        return passes_I2 && passes_I4a && passes_P2 && passes_I3.value_or(true);
    }
};

/// Point-evaluation densities for the I3 check: phi_l, phi_r as functions on [0,1].
struct HoleDensities {
    std::function<double(double)> phi_l;
    std::function<double(double)> phi_r;
};

inline constexpr int kDefaultHypothesisDepth = 8;
inline constexpr double kI2Tolerance = 1e-9;

HypothesisReport validate_hypotheses(const PerturbationFamily& family, int depth = kDefaultHypothesisDepth,
                                     const std::optional<HoleDensities>& densities = std::nullopt);

}  // namespace metamap
