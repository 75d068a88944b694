#pragma once

#include "metamap/density_grid.hpp"
#include "metamap/map_model.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace metamap {

/// Compressed sparse rows. Column indices are ascending within each row.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
                 std::vector<double> vals);

    std::size_t dim() const noexcept { return n_; }
    std::size_t nonzeros() const noexcept { return vals_.size(); }
    std::span<const std::size_t> row_cols(std::size_t i) const noexcept {
        return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }
    std::span<const double> row_vals(std::size_t i) const noexcept {
        return {vals_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }
    double at(std::size_t i, std::size_t j) const noexcept;
    double row_sum(std::size_t i) const noexcept;

    /// out_j = sum_i in_i * A[i][j], accumulated in ascending i.
    void apply_transpose(std::span<const double> in, std::span<double> out) const;

    /// Row-major dense copy.
    std::vector<double> to_dense() const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_;
    std::vector<double> vals_;
};

/// Row-stochastic Ulam discretization: P[i][j] = Leb(A_i ∩ T^{-1} A_j) / Leb(A_i).
class UlamMatrix {
public:
    /// Wraps a matrix whose rows sum to 1 within kRowSumTol; throws otherwise.
    explicit UlamMatrix(SparseMatrix m);

    /// Small stochastic matrices, e.g. a two-state Markov chain.
    static UlamMatrix from_dense(const std::vector<std::vector<double>>& rows);

    std::size_t dim() const noexcept { return m_.dim(); }
    const SparseMatrix& matrix() const noexcept { return m_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_.at(i, j); }
    double max_row_sum_error() const noexcept;

    /// (row, col, value) triplets, one per line, for debugging.
    void write_triplets(std::ostream& os) const;

private:
    SparseMatrix m_;
};

inline constexpr double kRowSumTol = 1e-12;

/// Exact interval-overlap assembly for affine branches; root-bracketed
/// preimage endpoints for smooth ones. Requires n >= 2 * branches.
UlamMatrix build_ulam(const PiecewiseMap& map, std::size_t n);

/// Push-forward (L d)_j = sum_i d_i P[i][j].
DensityGrid apply_transfer(const UlamMatrix& p, const DensityGrid& d);

/// Single-map Lasota-Yorke data on the expansion > 2 route.
struct LYConstants {
    double lambda = 0.0;
    double distortion = 0.0;
    double C_eps = 0.0;  // D/lambda + 2 * max_i |c_{i+1} - c_i|^{-1}
    double beta = 0.0;   // 2 / lambda
    double C_LY = 0.0;   // 2 * C_0 / (1 - 2/lambda)
};

/// C_0 taken from `map` itself.
LYConstants lasota_yorke_constants(const PiecewiseMap& map);
/// lambda, D, C_eps from `map`; C_0 from `base`.
LYConstants lasota_yorke_constants(const PiecewiseMap& map, const PiecewiseMap& base);

/// (1/n_terms) sum_{k<n_terms} L^k 1.
DensityGrid cesaro_density(const UlamMatrix& p, std::size_t n_terms);

}  // namespace metamap
