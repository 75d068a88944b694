#include "metamap/transfer_operator.hpp"

#include "metamap/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <utility>

namespace metamap {

// ------------------------------------------------------------ SparseMatrix

SparseMatrix::SparseMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
                           std::vector<double> vals)
    : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals)) {
    if (row_ptr_.size() != n_ + 1 || row_ptr_.back() != cols_.size() || cols_.size() != vals_.size())
        throw DimensionMismatch("inconsistent CSR arrays");
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            if (cols_[k] >= n_) throw DimensionMismatch(fmt::format("column {} out of range in row {}", cols_[k], i));
            if (k > row_ptr_[i] && cols_[k] <= cols_[k - 1])
                throw DimensionMismatch(fmt::format("row {} columns are not strictly ascending", i));
        }
}

double SparseMatrix::at(std::size_t i, std::size_t j) const noexcept {
    const auto c = row_cols(i);
    const auto it = std::lower_bound(c.begin(), c.end(), j);
    if (it == c.end() || *it != j) return 0.0;
    return row_vals(i)[static_cast<std::size_t>(it - c.begin())];
}

double SparseMatrix::row_sum(std::size_t i) const noexcept {
    double s = 0.0;
    for (double v : row_vals(i)) s += v;
    return s;
}

void SparseMatrix::apply_transpose(std::span<const double> in, std::span<double> out) const {
    if (in.size() != n_ || out.size() != n_)
        throw DimensionMismatch(fmt::format("matrix of dim {} applied to vectors of size {} -> {}", n_, in.size(), out.size()));
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        const double w = in[i];
        if (w == 0.0) continue;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out[cols_[k]] += w * vals_[k];
    }
}

std::vector<double> SparseMatrix::to_dense() const {
    std::vector<double> d(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d[i * n_ + cols_[k]] = vals_[k];
    return d;
}

// -------------------------------------------------------------- UlamMatrix

UlamMatrix::UlamMatrix(SparseMatrix m) : m_(std::move(m)) {
    for (std::size_t i = 0; i < m_.dim(); ++i) {
        for (double v : m_.row_vals(i))
            if (v < 0.0 || v > 1.0 + kRowSumTol) throw ModelError(fmt::format("entry {} in row {} outside [0,1]", v, i));
        const double s = m_.row_sum(i);
        if (std::abs(s - 1.0) > kRowSumTol) throw ModelError(fmt::format("row {} sums to {}", i, s));
    }
}

UlamMatrix UlamMatrix::from_dense(const std::vector<std::vector<double>>& rows) {
    const std::size_t n = rows.size();
    std::vector<std::size_t> ptr{0}, cols;
    std::vector<double> vals;
    for (const auto& r : rows) {
        if (r.size() != n) throw DimensionMismatch("from_dense: matrix is not square");
        for (std::size_t j = 0; j < n; ++j)
            if (r[j] != 0.0) {
                cols.push_back(j);
                vals.push_back(r[j]);
            }
        ptr.push_back(cols.size());
    }
    return UlamMatrix(SparseMatrix(n, std::move(ptr), std::move(cols), std::move(vals)));
}

double UlamMatrix::max_row_sum_error() const noexcept {
    double e = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) e = std::max(e, std::abs(m_.row_sum(i) - 1.0));
    return e;
}

void UlamMatrix::write_triplets(std::ostream& os) const {
    os << "row,col,value\n";
    for (std::size_t i = 0; i < dim(); ++i) {
        const auto c = m_.row_cols(i);
        const auto v = m_.row_vals(i);
        for (std::size_t k = 0; k < c.size(); ++k) os << fmt::format("{},{},{}\n", i, c[k], v[k]);
    }
}

// ---------------------------------------------------------------- assembly

namespace {

using Entry = std::pair<std::size_t, double>;

void check_image(double y, std::size_t branch) {
    if (y < -kEndpointTol || y > 1.0 + kEndpointTol)
        throw ModelError(fmt::format("branch {} image escapes [0,1] (value {})", branch, y));
}

// Cells [k/n, (k+1)/n] hit by the image interval [ylo, yhi], with overlap lengths.
void affine_row_part(const Branch& br, std::size_t branch_id, double x0, double x1, std::size_t n,
                     std::vector<Entry>& row) {
    const double dn = static_cast<double>(n);
    double ya = br.value(x0);
    double yb = br.value(x1);
    check_image(ya, branch_id);
    check_image(yb, branch_id);
    const double ylo = std::clamp(std::min(ya, yb), 0.0, 1.0);
    const double yhi = std::clamp(std::max(ya, yb), 0.0, 1.0);
    const double inv_slope = 1.0 / std::abs(br.slope());
    auto first = static_cast<std::size_t>(std::floor(ylo * dn));
    auto last = static_cast<std::size_t>(std::ceil(yhi * dn));
    first = std::min(first, n - 1);
    last = std::clamp<std::size_t>(last, first + 1, n);
    for (std::size_t j = first; j < last; ++j) {
        const double clo = static_cast<double>(j) / dn;
        const double chi = static_cast<double>(j + 1) / dn;
        const double ov = std::min(yhi, chi) - std::max(ylo, clo);
        if (ov > 0.0) row.emplace_back(j, ov * inv_slope * dn);
    }
}

void smooth_row_part(const Branch& br, std::size_t branch_id, double x0, double x1, std::size_t n,
                     std::vector<Entry>& row) {
    const double dn = static_cast<double>(n);
    const double ya = br.value(x0);
    const double yb = br.value(x1);
    check_image(ya, branch_id);
    check_image(yb, branch_id);
    const double ylo = std::min(ya, yb);
    const double yhi = std::max(ya, yb);
    std::vector<double> cuts{x0, x1};
    for (auto k = static_cast<std::size_t>(std::max(0.0, std::floor(ylo * dn)) + 1);
         static_cast<double>(k) < yhi * dn; ++k) {
        const double y = static_cast<double>(k) / dn;
        if (y <= ylo) continue;
        if (auto x = br.preimage(y, branch_id)) cuts.push_back(std::clamp(*x, x0, x1));
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double w = cuts[k + 1] - cuts[k];
        if (!(w > 0.0)) continue;
        const double ym = std::clamp(br.value(0.5 * (cuts[k] + cuts[k + 1])), 0.0, 1.0);
        const auto j = std::min(static_cast<std::size_t>(ym * dn), n - 1);
        row.emplace_back(j, w * dn);
    }
}

}  // namespace

UlamMatrix build_ulam(const PiecewiseMap& map, std::size_t n) {
    if (n < 2 * map.branch_count())
        throw DomainError(fmt::format("build_ulam: n = {} is below 2 x {} branches", n, map.branch_count()));
    const double dn = static_cast<double>(n);
    const auto& brs = map.branches();

    std::vector<std::size_t> ptr{0}, cols;
    std::vector<double> vals;
    cols.reserve(n * 6);
    vals.reserve(n * 6);
    std::vector<Entry> row;

    std::size_t k = 0;  // first branch that may overlap the current cell
    for (std::size_t i = 0; i < n; ++i) {
        const double xa = static_cast<double>(i) / dn;
        const double xb = static_cast<double>(i + 1) / dn;
        row.clear();
        while (k + 1 < brs.size() && brs[k].domain().hi <= xa) ++k;
        for (std::size_t b = k; b < brs.size() && brs[b].domain().lo < xb; ++b) {
            const double x0 = std::max(xa, brs[b].domain().lo);
            const double x1 = std::min(xb, brs[b].domain().hi);
            if (!(x1 > x0)) continue;
            if (brs[b].is_affine())
                affine_row_part(brs[b], b, x0, x1, n, row);
            else
                smooth_row_part(brs[b], b, x0, x1, n, row);
        }
        std::stable_sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
        for (std::size_t r = 0; r < row.size();) {
            std::size_t col = row[r].first;
            double v = 0.0;
            for (; r < row.size() && row[r].first == col; ++r) v += row[r].second;
            if (v > 0.0) {
                cols.push_back(col);
                vals.push_back(v);
            }
        }
        ptr.push_back(cols.size());
    }
    return UlamMatrix(SparseMatrix(n, std::move(ptr), std::move(cols), std::move(vals)));
}

DensityGrid apply_transfer(const UlamMatrix& p, const DensityGrid& d) {
    if (d.size() != p.dim()) throw DimensionMismatch(fmt::format("grid of {} cells vs matrix of dim {}", d.size(), p.dim()));
    DensityGrid out(d.size());
    p.matrix().apply_transpose(d.values(), out.values());
    return out;
}

LYConstants lasota_yorke_constants(const PiecewiseMap& map) { return lasota_yorke_constants(map, map); }

namespace {

double ly_c(const PiecewiseMap& m, double lambda, double dist) {
    const auto& c = m.critical_set();
    double inv_width = 0.0;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) inv_width = std::max(inv_width, 1.0 / (c[i + 1] - c[i]));
    return dist / lambda + 2.0 * inv_width;
}

}  // namespace

LYConstants lasota_yorke_constants(const PiecewiseMap& map, const PiecewiseMap& base) {
    LYConstants ly;
    ly.lambda = min_expansion(map);
    if (!(ly.lambda > 2.0))
        throw UnsupportedRegime(fmt::format(
            "minimum expansion {} <= 2: uniform Lasota-Yorke constants need the no-periodic-critical-point route (I4b), "
            "which is not implemented",
            ly.lambda));
    ly.distortion = distortion(map);
    ly.C_eps = ly_c(map, ly.lambda, ly.distortion);
    const double lambda0 = min_expansion(base);
    const double c0 = ly_c(base, lambda0, distortion(base));
    ly.beta = 2.0 / ly.lambda;
    ly.C_LY = 2.0 * c0 / (1.0 - ly.beta);
    return ly;
}

DensityGrid cesaro_density(const UlamMatrix& p, std::size_t n_terms) {
    if (n_terms < 1) throw DomainError("cesaro_density: n_terms must be >= 1");
    DensityGrid sum(p.dim());
    DensityGrid v = DensityGrid::uniform(p.dim());
    DensityGrid next(p.dim());
    for (std::size_t k = 0; k < n_terms; ++k) {
        sum += v;
        if (k + 1 < n_terms) {
            p.matrix().apply_transpose(v.values(), next.values());
            std::swap(v, next);
        }
    }
    sum *= 1.0 / static_cast<double>(n_terms);
    return sum;
}

}  // namespace metamap
