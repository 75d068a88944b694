#pragma once

#include "metamap/map_model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace metamap {

/// Piecewise-constant function on the uniform n-cell partition of [0,1].
/// values[i] is the average over [i/n, (i+1)/n].
class DensityGrid {
public:
    DensityGrid() = default;
    explicit DensityGrid(std::size_t n, double fill = 0.0);
    explicit DensityGrid(std::vector<double> values);

    static DensityGrid uniform(std::size_t n) { return DensityGrid(n, 1.0); }
    /// 1_J / Leb(J) on the grid (exact partial-cell weights).
    static DensityGrid normalized_indicator(std::size_t n, const Interval& j);
    /// 1_J on the grid (cell averages).
    static DensityGrid indicator(std::size_t n, const Interval& j);

    std::size_t size() const noexcept { return values_.size(); }
    double cell_width() const noexcept { return 1.0 / static_cast<double>(values_.size()); }
    double cell_lo(std::size_t i) const noexcept { return static_cast<double>(i) / static_cast<double>(size()); }
    double cell_center(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) / static_cast<double>(size()); }
    /// Cell containing x; x = 1 belongs to the last cell.
    std::size_t cell_of(double x) const noexcept;

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    /// (1/n) sum values
    double integral() const noexcept;
    /// (1/n) sum |values|
    double l1_norm() const noexcept;
    double sup_norm() const noexcept;
    /// sum |v_{i+1} - v_i| over interior boundaries
    double total_variation() const noexcept;
    /// Integral over [lo, hi] with exact partial-cell weights.
    double integrate(const Interval& j) const;
    double integrate(std::span<const Interval> js) const;

    DensityGrid& operator+=(const DensityGrid& o);
    DensityGrid& operator-=(const DensityGrid& o);
    DensityGrid& operator*=(double s) noexcept;

private:
    std::vector<double> values_;
};

DensityGrid operator+(DensityGrid a, const DensityGrid& b);
DensityGrid operator-(DensityGrid a, const DensityGrid& b);
DensityGrid operator*(double s, DensityGrid a);

double l1_distance(const DensityGrid& a, const DensityGrid& b);

/// Fraction of cell i of an n-grid covered by j.
double cell_overlap_fraction(std::size_t n, std::size_t i, const Interval& j) noexcept;

}  // namespace metamap
