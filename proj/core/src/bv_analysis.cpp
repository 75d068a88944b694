#include "metamap/bv_analysis.hpp"

#include "metamap/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace metamap {

double total_variation(const DensityGrid& d) { return d.total_variation(); }

const PostcriticalPoint* PostcriticalHierarchy::nearest(double x, double tol) const {
    const PostcriticalPoint* best = nullptr;
    for (const auto& p : points) {
        const double dist = std::abs(p.u - x);
        if (dist > tol) continue;
        if (!best || dist < std::abs(best->u - x) - 1e-15 ||
            (std::abs(dist - std::abs(best->u - x)) <= 1e-15 && p.depth < best->depth))
            best = &p;
    }
    return best;
}

PostcriticalHierarchy postcritical_hierarchy(const PiecewiseMap& map, int depth) {
    if (depth < 1) throw DomainError("postcritical_hierarchy: depth must be >= 1");
    const auto& brs = map.branches();
    const auto& crit = map.critical_set();

    std::vector<PostcriticalPoint> all;
    auto known = [&](double u) {
        return std::any_of(all.begin(), all.end(), [&](const PostcriticalPoint& p) { return std::abs(p.u - u) <= kEndpointTol; });
    };

    std::vector<PostcriticalPoint> frontier;
    for (std::size_t ci = 0; ci < crit.size(); ++ci) {
        // one-sided values: left branch at its right end, right branch at its left end
        if (ci > 0) {
            PostcriticalPoint p{brs[ci - 1].right_value(), 1, crit[ci], {ci - 1}};
            if (!known(p.u)) {
                all.push_back(p);
                frontier.push_back(p);
            }
        }
        if (ci < brs.size()) {
            PostcriticalPoint p{brs[ci].left_value(), 1, crit[ci], {ci}};
            if (!known(p.u)) {
                all.push_back(p);
                frontier.push_back(p);
            }
        }
    }

    for (int k = 2; k <= depth && !frontier.empty(); ++k) {
        std::vector<PostcriticalPoint> next;
        for (const auto& p : frontier) {
            const double x = std::clamp(p.u, 0.0, 1.0);
            // every branch whose closed domain contains x (two at a critical point)
            for (std::size_t b = 0; b < brs.size(); ++b) {
                const auto& dom = brs[b].domain();
                if (x < dom.lo - kEndpointTol || x > dom.hi + kEndpointTol) continue;
                PostcriticalPoint q{brs[b].value(std::clamp(x, dom.lo, dom.hi)), k, p.origin, p.branches};
                q.branches.push_back(b);
                if (known(q.u)) continue;
                all.push_back(q);
                next.push_back(std::move(q));
            }
        }
        frontier = std::move(next);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.u < b.u; });
    return {std::move(all)};
}

std::optional<std::size_t> postcritical_aligned_grid(const PostcriticalHierarchy& hierarchy, std::size_t alignment,
                                                     std::size_t n_min, std::size_t n_max) {
    if (alignment == 0) throw DomainError("postcritical_aligned_grid: alignment must be positive");
    const std::size_t first = (n_min + alignment - 1) / alignment * alignment;
    for (std::size_t n = std::max(first, alignment); n <= n_max; n += alignment) {
        const double dn = static_cast<double>(n);
        const bool aligned = std::all_of(hierarchy.points.begin(), hierarchy.points.end(), [&](const auto& p) {
            const double k = p.u * dn;
            return std::abs(k - std::round(k)) < 1e-7;
        });
        if (aligned) return n;
    }
    return std::nullopt;
}

double replay(const PiecewiseMap& map, const PostcriticalPoint& p) {
    double x = p.origin;
    for (std::size_t b : p.branches) {
        const auto& dom = map.branches()[b].domain();
        x = map.branches()[b].value(std::clamp(x, dom.lo, dom.hi));
    }
    return x;
}

double SaltusDecomposition::saltus_variation() const noexcept {
    double s = 0.0;
    for (const auto& j : jumps) s += std::abs(j.size);
    return s;
}

double SaltusDecomposition::saltus_variation_near(double center, double delta) const noexcept {
    double s = 0.0;
    for (const auto& j : jumps)
        if (std::abs(j.location - center) <= delta) s += std::abs(j.size);
    return s;
}

SaltusDecomposition saltus_decompose(const DensityGrid& d, const PostcriticalHierarchy& hierarchy, double lip_bound,
                                     double kappa) {
    if (!(lip_bound > 0.0)) throw DomainError("saltus_decompose: lip_bound must be positive");
    const std::size_t n = d.size();
    const double dn = static_cast<double>(n);
    const double threshold = kappa * lip_bound / dn;

    SaltusDecomposition dec;
    // boundary k sits at x = (k+1)/n between cells k and k+1
    for (std::size_t k = 0; k + 1 < n;) {
        const double diff = d[k + 1] - d[k];
        if (std::abs(diff) <= threshold) {
            ++k;
            continue;
        }
        double sum = 0.0, weight = 0.0, centroid = 0.0;
        std::size_t r = k;
        for (; r + 1 < n; ++r) {
            const double dr = d[r + 1] - d[r];
            if (std::abs(dr) <= threshold || (dr > 0) != (diff > 0)) break;
            sum += dr;
            weight += std::abs(dr);
            centroid += std::abs(dr) * static_cast<double>(r + 1) / dn;
        }
        Jump j;
        j.location = centroid / weight;
        j.size = sum;
        if (const auto* p = hierarchy.nearest(j.location, 0.5 / dn)) j.depth = p->depth;
        dec.jumps.push_back(j);
        k = r;
    }

    // cell averages of sum s_u H_u with H_u = -1 left of u, 0 right of u
    dec.saltus = DensityGrid(n);
    for (const auto& j : dec.jumps) {
        for (std::size_t i = 0; i < n; ++i) {
            const double covered = cell_overlap_fraction(n, i, Interval{0.0, std::clamp(j.location, 0.0, 1.0)});
            if (covered == 0.0) break;
            dec.saltus[i] -= j.size * covered;
        }
    }
    dec.regular = d - dec.saltus;
    for (std::size_t i = 0; i + 1 < n; ++i)
        dec.lipschitz_estimate = std::max(dec.lipschitz_estimate, std::abs(dec.regular[i + 1] - dec.regular[i]) * dn);
    dec.unmatched = static_cast<std::size_t>(
        std::count_if(dec.jumps.begin(), dec.jumps.end(), [](const Jump& j) { return !j.depth.has_value(); }));
    return dec;
}

std::vector<DecayRow> jump_decay_profile(const SaltusDecomposition& dec, const LYConstants& ly, int m_max,
                                         double slack) {
    std::vector<DecayRow> rows;
    for (int m = 0; m <= m_max; ++m) {
        DecayRow row;
        row.m = m;
        for (const auto& j : dec.jumps)
            if (!j.depth || *j.depth > m) row.tail += std::abs(j.size);
        row.bound = std::pow(ly.lambda, -m) * ly.C_LY;
        row.pass = row.tail <= slack * row.bound;
        rows.push_back(row);
    }
    return rows;
}

void write_saltus_csv(std::ostream& os, const SaltusDecomposition& dec) {
    os << "location,size,depth\n";
    for (const auto& j : dec.jumps)
        os << fmt::format("{},{},{}\n", j.location, j.size, j.depth ? std::to_string(*j.depth) : "");
}

}  // namespace metamap
