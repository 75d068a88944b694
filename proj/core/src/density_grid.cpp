#include "metamap/density_grid.hpp"

#include "metamap/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

namespace metamap {

DensityGrid::DensityGrid(std::size_t n, double fill) : values_(n, fill) {
    if (n == 0) throw DomainError("density grid needs at least one cell");
}

DensityGrid::DensityGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("density grid needs at least one cell");
}

double cell_overlap_fraction(std::size_t n, std::size_t i, const Interval& j) noexcept {
    const double dn = static_cast<double>(n);
    const double lo = static_cast<double>(i) / dn;
    const double hi = static_cast<double>(i + 1) / dn;
    return std::max(0.0, std::min(hi, j.hi) - std::max(lo, j.lo)) * dn;
}

DensityGrid DensityGrid::indicator(std::size_t n, const Interval& j) {
    DensityGrid g(n);
    for (std::size_t i = 0; i < n; ++i) g.values_[i] = cell_overlap_fraction(n, i, j);
    return g;
}

DensityGrid DensityGrid::normalized_indicator(std::size_t n, const Interval& j) {
    if (!(j.length() > 0.0)) throw DomainError("normalized indicator of an empty interval");
    DensityGrid g = indicator(n, j);
    g *= 1.0 / g.integral();
    return g;
}

std::size_t DensityGrid::cell_of(double x) const noexcept {
    const double n = static_cast<double>(size());
    const auto i = static_cast<std::ptrdiff_t>(std::floor(x * n));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(size()) - 1));
}

double DensityGrid::integral() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(size());
}

double DensityGrid::l1_norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s += std::abs(v);
    return s / static_cast<double>(size());
}

double DensityGrid::sup_norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s = std::max(s, std::abs(v));
    return s;
}

double DensityGrid::total_variation() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) s += std::abs(values_[i + 1] - values_[i]);
    return s;
}

double DensityGrid::integrate(const Interval& j) const {
    if (!(j.length() > 0.0)) return 0.0;
    const std::size_t first = cell_of(j.lo);
    const std::size_t last = cell_of(j.hi);
    double s = 0.0;
    for (std::size_t i = first; i <= last; ++i) s += values_[i] * cell_overlap_fraction(size(), i, j);
    return s / static_cast<double>(size());
}

double DensityGrid::integrate(std::span<const Interval> js) const {
    double s = 0.0;
    for (const auto& j : js) s += integrate(j);
    return s;
}

DensityGrid& DensityGrid::operator+=(const DensityGrid& o) {
    if (o.size() != size()) throw DimensionMismatch(fmt::format("grid sizes {} and {}", size(), o.size()));
    for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
    return *this;
}

DensityGrid& DensityGrid::operator-=(const DensityGrid& o) {
    if (o.size() != size()) throw DimensionMismatch(fmt::format("grid sizes {} and {}", size(), o.size()));
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

DensityGrid& DensityGrid::operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
}

DensityGrid operator+(DensityGrid a, const DensityGrid& b) { return a += b; }
DensityGrid operator-(DensityGrid a, const DensityGrid& b) { return a -= b; }
DensityGrid operator*(double s, DensityGrid a) { return a *= s; }

double l1_distance(const DensityGrid& a, const DensityGrid& b) { return (a - b).l1_norm(); }

}  // namespace metamap
