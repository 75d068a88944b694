#pragma once

#include "metamap/density_grid.hpp"
#include "metamap/map_model.hpp"
#include "metamap/transfer_operator.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

namespace metamap {

double total_variation(const DensityGrid& d);

/// One point of the postcritical orbits with its depth #(u) = min{k >= 1 : u in T^k C}.
struct PostcriticalPoint {
    double u = 0.0;
    int depth = 0;
    double origin = 0.0;               // generating critical point
    std::vector<std::size_t> branches;  // branch applied at each step, length == depth
};

struct PostcriticalHierarchy {
    std::vector<PostcriticalPoint> points;  // sorted by u

    /// Nearest point within `tol`, if any.
    const PostcriticalPoint* nearest(double x, double tol) const;
};

/// Breadth-first forward images of all one-sided critical values.
PostcriticalHierarchy postcritical_hierarchy(const PiecewiseMap& map, int depth);

/// Smallest multiple of `alignment` in [n_min, n_max] that puts every
/// hierarchy point on a cell boundary. On such a grid the Ulam matrix of a
/// piecewise affine map acts exactly on cell step functions, so jumps are
/// not smeared across cells.
std::optional<std::size_t> postcritical_aligned_grid(const PostcriticalHierarchy& hierarchy, std::size_t alignment,
                                                     std::size_t n_min, std::size_t n_max);

/// Recompute T^{depth}(origin) along the stored branch path.
double replay(const PiecewiseMap& map, const PostcriticalPoint& p);

struct Jump {
    double location = 0.0;
    double size = 0.0;         // right limit minus left limit
    std::optional<int> depth;  // empty when unmatched
};

struct SaltusDecomposition {
    std::vector<Jump> jumps;
    DensityGrid regular;
    DensityGrid saltus;  // cell averages of sum s_u H_u, zero at the right end
    double lipschitz_estimate = 0.0;
    std::size_t unmatched = 0;

    double saltus_variation() const noexcept;
    /// sum |s_u| over jumps located in [center - delta, center + delta].
    double saltus_variation_near(double center, double delta) const noexcept;
};

inline constexpr double kJumpKappa = 5.0;

/// Boundaries whose difference exceeds kappa * lip_bound / n carry jumps.
/// Runs of adjacent same-sign boundaries are merged into one jump placed
/// at their |difference|-weighted centroid, then matched to the hierarchy
/// within half a cell.
SaltusDecomposition saltus_decompose(const DensityGrid& d, const PostcriticalHierarchy& hierarchy, double lip_bound,
                                     double kappa = kJumpKappa);

struct DecayRow {
    int m = 0;
    double tail = 0.0;   // sum_{#(u) > m} |s_u|, unmatched jumps always included
    double bound = 0.0;  // lambda^{-m} C_LY
    bool pass = false;   // tail <= slack * bound
};

inline constexpr double kDecaySlack = 1.1;

std::vector<DecayRow> jump_decay_profile(const SaltusDecomposition& dec, const LYConstants& ly, int m_max,
                                         double slack = kDecaySlack);

/// location,size,depth rows (depth empty when unmatched).
void write_saltus_csv(std::ostream& os, const SaltusDecomposition& dec);

}  // namespace metamap
