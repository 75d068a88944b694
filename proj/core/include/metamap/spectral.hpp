#pragma once

#include "metamap/density_grid.hpp"
#include "metamap/transfer_operator.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace metamap {

inline constexpr double kDefaultSpectralTol = 1e-10;
/// Largest n for which the dense eigensolver is used as fallback.
inline constexpr std::size_t kDenseFallbackCap = 4096;
/// Seed of the mean-zero restart vector.
inline constexpr std::uint64_t kRestartSeed = 0x5EED;

/// 10 n log n, floored so that tiny chains still get enough sweeps.
std::size_t default_max_iterations(std::size_t n);

struct InvariantDensityResult {
    DensityGrid phi;
    bool leading_simple = true;
    /// Limit reached from the second start when the two limits differ.
    std::optional<DensityGrid> alternate;
    std::size_t iterations = 0;
    double residual = 0.0;  // |L phi - phi|_1
};

/// Power iteration from the uniform density. A second run from the
/// normalized indicator of `probe` decides simplicity: limits differing by
/// more than 10*tol in L1 mean the eigenvalue 1 is not simple.
InvariantDensityResult invariant_density(const UlamMatrix& p, double tol = kDefaultSpectralTol,
                                         const Interval& probe = Interval{0.0, 0.5});

struct SecondEigenpair {
    double rho = 0.0;
    DensityGrid psi;
    std::size_t iterations = 0;
    bool used_dense = false;
    double residual = 0.0;  // |L psi - rho psi|_1
};

/// d - (int d) * 1
DensityGrid project_mean_zero(const DensityGrid& d);

/// Deterministic mean-zero noise with unit L1 norm.
DensityGrid seeded_mean_zero_noise(std::size_t n, std::uint64_t seed = kRestartSeed);

/// Dominant eigenpair of L on the mean-zero subspace. psi has |psi|_1 = 1
/// and positive mass on i_left. Falls back to the dense solver when the
/// iterates oscillate or stall (n <= kDenseFallbackCap).
SecondEigenpair second_eigenpair(const UlamMatrix& p, const DensityGrid& phi, const Interval& i_left,
                                 double tol = kDefaultSpectralTol);

/// Dense Hessenberg-QR route. Throws DegeneracyError for a complex second eigenvalue.
SecondEigenpair dense_second_eigenpair(const UlamMatrix& p, const Interval& i_left);

/// All eigenvalues of L (dense route), for diagnostics and tests.
struct Eigenvalue {
    double re;
    double im;
};
std::vector<Eigenvalue> dense_spectrum(const UlamMatrix& p);

struct SpectralReport {
    DensityGrid phi;
    double rho = 0.0;
    DensityGrid psi;
    bool leading_simple = true;
    double residual_phi = 0.0;
    double residual_psi = 0.0;
};

SpectralReport analyze_spectrum(const UlamMatrix& p, const Interval& i_left, double tol = kDefaultSpectralTol);

/// Invariant density of P restricted to the cells of `sub`, embedded in the
/// full grid with unit mass. `sub` must align with cell boundaries.
DensityGrid restricted_invariant_density(const UlamMatrix& p, const Interval& sub, double tol = kDefaultSpectralTol);

struct EscapeReport {
    double rate = 0.0;          // -log lambda_open
    double hole_measure = 0.0;  // closed-system invariant measure of the hole cells
    double ratio = 0.0;         // hole_measure / rate
    double lambda_open = 1.0;
};

/// Cells of an n-grid covered at least half by the union of `holes`.
std::vector<std::size_t> hole_cells_for(std::size_t n, std::span<const Interval> holes);

/// Open system on `sub_domain` with mass entering `hole_cells` removed.
EscapeReport escape_rate(const UlamMatrix& p, std::span<const std::size_t> hole_cells, const Interval& sub_domain,
                         double tol = 1e-12);

}  // namespace metamap
