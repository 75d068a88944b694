#include "metamap/map_model.hpp"

#include "metamap/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace metamap {

namespace {

constexpr int kExpansionSamples = 2048;

bool near(double a, double b, double tol = kEndpointTol) { return std::abs(a - b) <= tol; }

bool push_unique(std::vector<double>& out, double v, double tol = kEndpointTol) {
    for (double w : out)
        if (near(v, w, tol)) return false;
    out.push_back(v);
    return true;
}

}  // namespace

// ---------------------------------------------------------------- Interval

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo <= hi)) throw DomainError(fmt::format("interval with lo > hi: [{}, {}]", lo, hi));
    if (lo < -kEndpointTol || hi > 1.0 + kEndpointTol)
        throw DomainError(fmt::format("interval [{}, {}] leaves [0,1]", lo, hi));
}

double Interval::overlap(const Interval& other) const noexcept {
    return std::max(0.0, std::min(hi, other.hi) - std::max(lo, other.lo));
}

// ------------------------------------------------------------------ Branch

Branch Branch::affine(Interval domain, double slope, double intercept) {
    if (!(std::abs(slope) > 1.0))
        throw ModelError(fmt::format("affine branch on [{}, {}] is not expanding (slope {})", domain.lo, domain.hi, slope));
    Branch br;
    br.domain_ = domain;
    br.affine_ = true;
    br.slope_ = slope;
    br.intercept_ = intercept;
    br.orientation_ = slope > 0 ? 1 : -1;
    return br;
}

Branch Branch::smooth(Interval domain, Fn value, Fn derivative, Fn second_derivative) {
    if (!value || !derivative || !second_derivative) throw ModelError("smooth branch needs value and two derivatives");
    Branch br;
    br.domain_ = domain;
    br.affine_ = false;
    br.f_ = std::move(value);
    br.df_ = std::move(derivative);
    br.d2f_ = std::move(second_derivative);
    const double d0 = br.df_(domain.lo);
    br.orientation_ = d0 > 0 ? 1 : -1;
    for (int k = 0; k <= kExpansionSamples; ++k) {
        const double x = domain.lo + domain.length() * k / kExpansionSamples;
        const double d = br.df_(x);
        if (!(std::abs(d) > 1.0) || (d > 0) != (br.orientation_ > 0))
            throw ModelError(fmt::format("smooth branch on [{}, {}] is not monotone expanding near x={}", domain.lo,
                                         domain.hi, x));
    }
    return br;
}

double Branch::slope() const {
    if (!affine_) throw ModelError("slope() requested on a smooth branch");
    return slope_;
}

double Branch::intercept() const {
    if (!affine_) throw ModelError("intercept() requested on a smooth branch");
    return intercept_;
}

double Branch::value(double x) const { return affine_ ? slope_ * x + intercept_ : f_(x); }
double Branch::derivative(double x) const { return affine_ ? slope_ : df_(x); }
double Branch::second_derivative(double x) const { return affine_ ? 0.0 : d2f_(x); }

Interval Branch::image() const {
    const double a = left_value();
    const double b = right_value();
    return {std::clamp(std::min(a, b), 0.0, 1.0), std::clamp(std::max(a, b), 0.0, 1.0)};
}

std::optional<double> Branch::preimage(double y, std::size_t branch_id) const {
    const double ya = left_value();
    const double yb = right_value();
    const double ymin = std::min(ya, yb);
    const double ymax = std::max(ya, yb);
    if (y < ymin - kEndpointTol || y > ymax + kEndpointTol) return std::nullopt;

    if (affine_) {
        const double x = (y - intercept_) / slope_;
        return std::clamp(x, domain_.lo, domain_.hi);
    }

    // Endpoint hits first so bi-valued critical values resolve exactly.
    if (near(y, ya)) return domain_.lo;
    if (near(y, yb)) return domain_.hi;

    double lo = domain_.lo;
    double hi = domain_.hi;
    double x = lo + (hi - lo) * (y - ya) / (yb - ya);
    for (int it = 0; it < 200; ++it) {
        const double g = f_(x) - y;
        if (g == 0.0 || hi - lo < 1e-13) return x;
        // keep the bracket: orientation tells which side the root lies on
        if ((g > 0) == (orientation_ > 0))
            hi = x;
        else
            lo = x;
        const double d = df_(x);
        double next = x - g / d;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) < 1e-15) return next;
        x = next;
    }
    throw NumericalError(fmt::format("preimage solve did not converge on branch {}", branch_id), hi - lo);
}

// ------------------------------------------------------------ PiecewiseMap

PiecewiseMap::PiecewiseMap(std::vector<Branch> branches) : branches_(std::move(branches)) {
    if (branches_.empty()) throw ModelError("a piecewise map needs at least one branch");
    if (!near(branches_.front().domain().lo, 0.0)) throw ModelError("first branch must start at 0");
    if (!near(branches_.back().domain().hi, 1.0)) throw ModelError("last branch must end at 1");
    critical_.push_back(0.0);
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        const auto& d = branches_[i].domain();
        if (!(d.hi - d.lo > kEndpointTol)) throw ModelError(fmt::format("branch {} has an empty domain", i));
        if (i + 1 < branches_.size() && !near(d.hi, branches_[i + 1].domain().lo))
            throw ModelError(fmt::format("branches {} and {} do not share an endpoint ({} vs {})", i, i + 1, d.hi,
                                         branches_[i + 1].domain().lo));
        const double a = branches_[i].left_value();
        const double b = branches_[i].right_value();
        if (std::min(a, b) < -kEndpointTol || std::max(a, b) > 1.0 + kEndpointTol)
            throw ModelError(fmt::format("branch {} maps outside [0,1]: image [{}, {}]", i, std::min(a, b),
                                         std::max(a, b)));
        critical_.push_back(i + 1 < branches_.size() ? d.hi : 1.0);
    }
}

bool PiecewiseMap::all_affine() const noexcept {
    return std::all_of(branches_.begin(), branches_.end(), [](const Branch& b) { return b.is_affine(); });
}

std::optional<std::size_t> PiecewiseMap::critical_index(double x) const noexcept {
    auto it = std::lower_bound(critical_.begin(), critical_.end(), x - kEndpointTol);
    if (it != critical_.end() && near(*it, x)) return static_cast<std::size_t>(it - critical_.begin());
    return std::nullopt;
}

// -------------------------------------------------------- PerturbationFamily

PerturbationFamily::PerturbationFamily(PiecewiseMap base, std::vector<BranchPerturbation> perturbations,
                                       double boundary, std::vector<HoleCoefficient> holes)
    : base_(std::move(base)), perturbations_(std::move(perturbations)), boundary_(boundary), holes_(std::move(holes)) {
    if (perturbations_.empty()) perturbations_.resize(base_.branch_count());
    if (perturbations_.size() != base_.branch_count())
        throw ModelError(fmt::format("{} perturbations for {} branches", perturbations_.size(), base_.branch_count()));
    if (!(boundary_ > 0.0 && boundary_ < 1.0)) throw DomainError("boundary point must lie in (0,1)");
    for (const auto& h : holes_) {
        if (h.a < 0.0 || h.b < 0.0) throw ModelError("hole coefficients must be nonnegative");
        if (h.point < -kEndpointTol || h.point > 1.0 + kEndpointTol) throw ModelError("hole point outside [0,1]");
    }
    for (std::size_t i = 0; i < perturbations_.size(); ++i) {
        const auto& p = perturbations_[i];
        if (!base_.branches()[i].is_affine() && (p.slope_eps != 0.0 || p.intercept_eps != 0.0))
            throw ModelError(fmt::format("branch {} is smooth; use smooth_delta for its perturbation", i));
        if (p.smooth_delta && !(p.smooth_delta_dx && p.smooth_delta_dxx))
            throw ModelError(fmt::format("branch {}: smooth perturbation needs both derivatives", i));
    }
}

PiecewiseMap PerturbationFamily::instantiate(double eps) const {
    if (eps == 0.0) return base_;
    std::vector<Branch> out;
    out.reserve(base_.branch_count());
    for (std::size_t i = 0; i < base_.branch_count(); ++i) {
        const Branch& br = base_.branches()[i];
        const BranchPerturbation& p = perturbations_[i];
        if (br.is_affine() && !p.smooth_delta) {
            out.push_back(Branch::affine(br.domain(), br.slope() + p.slope_eps * eps, br.intercept() + p.intercept_eps * eps));
            continue;
        }
        Branch::Fn f = [br, p, eps](double x) {
            double v = br.value(x) + p.slope_eps * eps * x + p.intercept_eps * eps;
            return p.smooth_delta ? v + p.smooth_delta(x, eps) : v;
        };
        Branch::Fn df = [br, p, eps](double x) {
            double v = br.derivative(x) + p.slope_eps * eps;
            return p.smooth_delta_dx ? v + p.smooth_delta_dx(x, eps) : v;
        };
        Branch::Fn d2f = [br, p, eps](double x) {
            double v = br.second_derivative(x);
            return p.smooth_delta_dxx ? v + p.smooth_delta_dxx(x, eps) : v;
        };
        out.push_back(Branch::smooth(br.domain(), std::move(f), std::move(df), std::move(d2f)));
    }
    return PiecewiseMap(std::move(out));
}

// --------------------------------------------------------------- operations

std::vector<double> evaluate(const PiecewiseMap& map, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError(fmt::format("evaluate: x = {} outside [0,1]", x));
    const auto& brs = map.branches();
    if (auto ci = map.critical_index(x)) {
        std::vector<double> out;
        if (*ci > 0) out.push_back(brs[*ci - 1].right_value());
        if (*ci < brs.size()) push_unique(out, brs[*ci].left_value());
        return out;
    }
    const auto& crit = map.critical_set();
    const auto it = std::upper_bound(crit.begin(), crit.end(), x);
    const auto idx = static_cast<std::size_t>(it - crit.begin()) - 1;
    return {brs[idx].value(x)};
}

double min_expansion(const PiecewiseMap& map) {
    double lam = std::numeric_limits<double>::infinity();
    for (const auto& br : map.branches()) {
        if (br.is_affine()) {
            lam = std::min(lam, std::abs(br.slope()));
            continue;
        }
        const auto& d = br.domain();
        for (int k = 0; k <= kExpansionSamples; ++k)
            lam = std::min(lam, std::abs(br.derivative(d.lo + d.length() * k / kExpansionSamples)));
    }
    return lam;
}

double distortion(const PiecewiseMap& map) {
    double sup = 0.0;
    for (const auto& br : map.branches()) {
        if (br.is_affine()) continue;
        const auto& d = br.domain();
        double prev = -1.0;
        for (int samples = 256; samples <= (1 << 20); samples *= 2) {
            double s = 0.0;
            for (int k = 0; k <= samples; ++k) {
                const double x = d.lo + d.length() * k / samples;
                s = std::max(s, std::abs(br.second_derivative(x)) / std::abs(br.derivative(x)));
            }
            if (prev >= 0.0 && std::abs(s - prev) <= 1e-9 * std::max(1.0, s)) {
                prev = s;
                break;
            }
            prev = s;
        }
        sup = std::max(sup, prev);
    }
    return sup;
}

std::vector<Preimage> branch_preimages(const PiecewiseMap& map, double y) {
    if (!(y >= 0.0 && y <= 1.0)) throw DomainError(fmt::format("branch_preimages: y = {} outside [0,1]", y));
    std::vector<Preimage> out;
    const auto& brs = map.branches();
    for (std::size_t i = 0; i < brs.size(); ++i)
        if (auto x = brs[i].preimage(y, i)) out.push_back({*x, i});
    return out;
}

std::vector<double> infinitesimal_holes(const PiecewiseMap& map, double b) {
    if (!(b > 0.0 && b < 1.0)) throw DomainError("infinitesimal_holes: b must lie in (0,1)");
    std::vector<double> holes;
    for (const auto& pre : branch_preimages(map, b)) {
        if (near(pre.x, b)) continue;
        if (!map.critical_index(pre.x))
            throw HypothesisViolation(fmt::format(
                "preimage {} of the boundary point {} lies inside branch {}; [0,b] and [b,1] are not invariant", pre.x,
                b, pre.branch));
        push_unique(holes, pre.x);
    }
    std::sort(holes.begin(), holes.end());
    return holes;
}

HypothesisReport validate_hypotheses(const PerturbationFamily& family, int depth,
                                     const std::optional<HoleDensities>& densities) {
    if (depth < 1) throw DomainError("validate_hypotheses: depth must be >= 1");
    const PiecewiseMap& t0 = family.base();
    const double b = family.boundary();

    HypothesisReport rep;
    rep.min_expansion = min_expansion(t0);
    rep.distortion = distortion(t0);
    rep.i2_depth = depth;

    // I4a
    rep.passes_I4a = rep.min_expansion > 2.0;
    if (!rep.passes_I4a)
        rep.diagnostics.push_back(fmt::format("I4a fails: minimum expansion {} is not > 2", rep.min_expansion));

    // Infinitesimal holes and I2
    bool holes_ok = true;
    try {
        rep.holes = infinitesimal_holes(t0, b);
    } catch (const HypothesisViolation& e) {
        holes_ok = false;
        rep.diagnostics.push_back(std::string("I2 not checkable: ") + e.what());
    }
    if (holes_ok) {
        rep.passes_I2 = true;
        std::vector<double> visited;
        std::vector<double> hit_holes;
        std::vector<double> frontier(t0.critical_set());
        for (int k = 1; k <= depth && !frontier.empty(); ++k) {
            std::vector<double> next;
            for (double x : frontier)
                for (double y : evaluate(t0, std::clamp(x, 0.0, 1.0))) {
                    for (double h : rep.holes)
                        if (std::abs(y - h) <= kI2Tolerance) {
                            // report each hole once, at its shallowest hit
                            if (push_unique(hit_holes, h))
                                rep.diagnostics.push_back(
                                    fmt::format("I2 fails: T0^{} of a critical point hits the infinitesimal hole {}", k, h));
                            rep.passes_I2 = false;
                        }
                    const bool seen = std::any_of(visited.begin(), visited.end(),
                                                  [&](double v) { return near(v, y); });
                    if (!seen) {
                        visited.push_back(y);
                        push_unique(next, y);
                    }
                }
            frontier = std::move(next);
        }
        std::sort(visited.begin(), visited.end());
        rep.postcritical = std::move(visited);
    }

    // P2
    if (auto ci = t0.critical_index(b)) {
        rep.p2_variant = "P2b";
        const auto& brs = t0.branches();
        const double left = brs[*ci - 1].right_value();
        const double right = brs[*ci].left_value();
        rep.passes_P2 = left < b - kEndpointTol && right > b + kEndpointTol;
        if (!rep.passes_P2)
            rep.diagnostics.push_back(
                fmt::format("P2b fails: need T0(b-) < b < T0(b+), got T0(b-) = {}, T0(b+) = {} at b = {}", left, right, b));
    } else {
        rep.p2_variant = "P2a";
        rep.passes_P2 = true;
        for (double eps : {0.0, 1e-4, 1e-3, 1e-2}) {
            double tb = 0.0;
            try {
                tb = evaluate(family.instantiate(eps), b).front();
            } catch (const ModelError& e) {
                rep.diagnostics.push_back(fmt::format("P2a not checkable at eps = {}: {}", eps, e.what()));
                rep.passes_P2 = false;
                continue;
            }
            if (!near(tb, b)) {
                rep.passes_P2 = false;
                rep.diagnostics.push_back(fmt::format("P2a fails: T_eps(b) = {} != b at eps = {}", tb, eps));
            }
        }
    }

    // I3
    if (densities && holes_ok) {
        bool ok = true;
        for (double h : rep.holes) {
            const double v = h < b ? densities->phi_l(h) : densities->phi_r(h);
            if (!(v > 0.0)) {
                ok = false;
                rep.diagnostics.push_back(fmt::format("I3 fails: density {} at infinitesimal hole {}", v, h));
            }
        }
        rep.passes_I3 = ok;
    }

    rep.diagnostics.push_back("I1/P1 assumed; verify via spectral simplicity");
    return rep;
}

}  // namespace metamap
