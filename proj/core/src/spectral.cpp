#include "metamap/spectral.hpp"

#include "metamap/errors.hpp"

#include <Eigen/Dense>
#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>

namespace metamap {

namespace {

/// Stops a geometric iteration once the tail estimate step*r/(1-r) is below
/// tol, where r is the observed contraction of successive steps.
constexpr int kOscillationStreak = 16;

class ConvergenceMonitor {
public:
    explicit ConvergenceMonitor(double tol) : tol_(tol) {}

    bool update(double step) {
        bool done = step == 0.0 || step < tol_ * 1e-4;
        if (!done && prev_ > 0.0) {
            const double r = step / prev_;
            if (r < 1.0) done = step < tol_ && step * r / (1.0 - r) < tol_;
        }
        prev_ = step;
        return done;
    }

private:
    double tol_;
    double prev_ = -1.0;
};

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct FixedPoint {
    DensityGrid v;
    std::size_t iterations = 0;
};

// Power iteration for the mass-preserving fixed point from `start`.
FixedPoint iterate_fixed_point(const SparseMatrix& m, DensityGrid v, double tol, std::size_t max_it) {
    v *= 1.0 / v.integral();
    DensityGrid w(v.size());
    ConvergenceMonitor mon(tol);
    for (std::size_t it = 1; it <= max_it; ++it) {
        m.apply_transpose(v.values(), w.values());
        const double mass = w.integral();
        if (!(mass > 0.0)) throw DegeneracyError("power iteration lost all mass");
        w *= 1.0 / mass;
        const double step = l1_distance(w, v);
        std::swap(v, w);
        if (mon.update(step)) return {std::move(v), it};
    }
    m.apply_transpose(v.values(), w.values());
    throw NumericalError(fmt::format("power iteration did not converge in {} steps", max_it), l1_distance(w, v));
}

DensityGrid embed(const DensityGrid& local, std::size_t first, std::size_t n) {
    DensityGrid g(n);
    for (std::size_t i = 0; i < local.size(); ++i) g[first + i] = local[i];
    return g;
}

std::pair<std::size_t, std::size_t> aligned_cells(std::size_t n, const Interval& sub) {
    const double dn = static_cast<double>(n);
    const double a = sub.lo * dn;
    const double b = sub.hi * dn;
    if (std::abs(a - std::round(a)) > 1e-9 || std::abs(b - std::round(b)) > 1e-9)
        throw DomainError(fmt::format("interval [{}, {}] is not aligned with the {}-cell grid", sub.lo, sub.hi, n));
    const auto first = static_cast<std::size_t>(std::round(a));
    const auto last = static_cast<std::size_t>(std::round(b));
    if (last <= first) throw DomainError("sub-domain covers no cells");
    return {first, last};
}

// Block of m on cells [first, last); columns flagged in `killed` are dropped.
SparseMatrix restrict_matrix(const SparseMatrix& m, std::size_t first, std::size_t last,
                             const std::vector<bool>& killed) {
    std::vector<std::size_t> ptr{0}, cols;
    std::vector<double> vals;
    for (std::size_t i = first; i < last; ++i) {
        const auto c = m.row_cols(i);
        const auto v = m.row_vals(i);
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (c[k] < first || c[k] >= last || killed[c[k] - first]) continue;
            cols.push_back(c[k] - first);
            vals.push_back(v[k]);
        }
        ptr.push_back(cols.size());
    }
    return SparseMatrix(last - first, std::move(ptr), std::move(cols), std::move(vals));
}

void fix_sign(DensityGrid& psi, const Interval& i_left) {
    if (psi.integrate(i_left) < 0.0) psi *= -1.0;
}

double eigen_residual(const UlamMatrix& p, const DensityGrid& v, double lambda) {
    DensityGrid w = apply_transfer(p, v);
    w -= lambda * v;
    return w.l1_norm();
}

}  // namespace

std::size_t default_max_iterations(std::size_t n) {
    const double dn = static_cast<double>(std::max<std::size_t>(n, 2));
    return std::max<std::size_t>(static_cast<std::size_t>(10.0 * dn * std::log(dn)), 100000);
}

InvariantDensityResult invariant_density(const UlamMatrix& p, double tol, const Interval& probe) {
    const std::size_t n = p.dim();
    const std::size_t max_it = default_max_iterations(n);
    auto main = iterate_fixed_point(p.matrix(), DensityGrid::uniform(n), tol, max_it);

    InvariantDensityResult res;
    res.iterations = main.iterations;
    DensityGrid start = DensityGrid::indicator(n, probe);
    if (start.integral() > 0.0) {
        auto second = iterate_fixed_point(p.matrix(), std::move(start), tol, max_it);
        res.iterations += second.iterations;
        if (l1_distance(main.v, second.v) > 10.0 * tol) {
            res.leading_simple = false;
            res.alternate = std::move(second.v);
        }
    }
    res.phi = std::move(main.v);
    for (double& v : res.phi.values()) v = std::max(v, 0.0);
    res.phi *= 1.0 / res.phi.integral();
    res.residual = eigen_residual(p, res.phi, 1.0);
    return res;
}

DensityGrid project_mean_zero(const DensityGrid& d) {
    DensityGrid out = d;
    const double m = d.integral();
    for (double& v : out.values()) v -= m;
    return out;
}

DensityGrid seeded_mean_zero_noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    DensityGrid g(n);
    // raw 53-bit draws keep the vector identical across standard libraries
    for (double& v : g.values()) v = static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5;
    g = project_mean_zero(g);
    g *= 1.0 / g.l1_norm();
    return g;
}

SecondEigenpair second_eigenpair(const UlamMatrix& p, const DensityGrid& phi, const Interval& i_left, double tol) {
    const std::size_t n = p.dim();
    if (phi.size() != n) throw DimensionMismatch("second_eigenpair: phi and P differ in size");

    DensityGrid v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = phi[i] * cell_overlap_fraction(n, i, i_left);
    v = project_mean_zero(v);
    if (v.l1_norm() < 1e-14) v = seeded_mean_zero_noise(n);
    v *= 1.0 / v.l1_norm();

    const std::size_t max_it = std::min<std::size_t>(default_max_iterations(n), 200000);
    DensityGrid w(n);
    ConvergenceMonitor mon(tol);
    int negative_streak = 0;
    double rho = 0.0;
    bool converged = false;
    std::size_t it = 0;
    for (it = 1; it <= max_it; ++it) {
        p.matrix().apply_transpose(v.values(), w.values());
        w = project_mean_zero(w);
        rho = dot(v.values(), w.values()) / dot(v.values(), v.values());
        // a short negative run is normal while transients decay
        negative_streak = rho < 0.0 ? negative_streak + 1 : 0;
        if (negative_streak >= kOscillationStreak) break;
        const double norm = w.l1_norm();
        if (!(norm > 0.0)) throw DegeneracyError("mean-zero iterate vanished: L has no second eigenvalue on this grid");
        w *= 1.0 / norm;
        const double step = l1_distance(w, v);
        std::swap(v, w);
        if (mon.update(step)) {
            converged = true;
            break;
        }
    }

    if (!converged) {
        if (n > kDenseFallbackCap)
            throw UnsupportedRegime(fmt::format(
                "second eigenpair: iteration oscillates or stalls and n = {} exceeds the dense fallback cap {}", n,
                kDenseFallbackCap));
        return dense_second_eigenpair(p, i_left);
    }

    SecondEigenpair out;
    DensityGrid lv = apply_transfer(p, v);
    out.rho = dot(v.values(), lv.values()) / dot(v.values(), v.values());
    fix_sign(v, i_left);
    out.psi = std::move(v);
    out.iterations = it;
    out.residual = eigen_residual(p, out.psi, out.rho);
    return out;
}

namespace {

Eigen::MatrixXd dense_transfer(const UlamMatrix& p) {
    const std::size_t n = p.dim();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const auto& m = p.matrix();
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = m.row_cols(i);
        const auto v = m.row_vals(i);
        for (std::size_t k = 0; k < c.size(); ++k)
            a(static_cast<Eigen::Index>(c[k]), static_cast<Eigen::Index>(i)) = v[k];
    }
    return a;
}

}  // namespace

std::vector<Eigenvalue> dense_spectrum(const UlamMatrix& p) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(dense_transfer(p), false);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolve failed");
    std::vector<Eigenvalue> out;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        out.push_back({es.eigenvalues()[i].real(), es.eigenvalues()[i].imag()});
    std::sort(out.begin(), out.end(),
              [](const Eigenvalue& a, const Eigenvalue& b) { return std::hypot(a.re, a.im) > std::hypot(b.re, b.im); });
    return out;
}

SecondEigenpair dense_second_eigenpair(const UlamMatrix& p, const Interval& i_left) {
    const std::size_t n = p.dim();
    if (n > kDenseFallbackCap)
        throw UnsupportedRegime(fmt::format("dense eigensolve capped at n = {}", kDenseFallbackCap));
    if (n < 2) throw DegeneracyError("a 1-cell chain has no second eigenvalue");
    Eigen::EigenSolver<Eigen::MatrixXd> es(dense_transfer(p), true);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolve failed");
    const auto& ev = es.eigenvalues();

    Eigen::Index lead = 0;
    for (Eigen::Index i = 1; i < ev.size(); ++i)
        if (std::abs(ev[i] - 1.0) < std::abs(ev[lead] - 1.0)) lead = i;
    Eigen::Index second = -1;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (i == lead) continue;
        if (second < 0 || std::abs(ev[i]) > std::abs(ev[second]) ||
            (std::abs(ev[i]) == std::abs(ev[second]) && ev[i].real() > ev[second].real()))
            second = i;
    }
    const std::complex<double> lam = ev[second];
    if (std::abs(lam.imag()) > 1e-10)
        throw DegeneracyError(fmt::format("second eigenvalue is complex: {} + {}i", lam.real(), lam.imag()));

    SecondEigenpair out;
    out.used_dense = true;
    out.rho = lam.real();
    out.psi = DensityGrid(n);
    const Eigen::VectorXcd vec = es.eigenvectors().col(second);
    for (std::size_t i = 0; i < n; ++i) out.psi[i] = vec[static_cast<Eigen::Index>(i)].real();
    out.psi = project_mean_zero(out.psi);
    out.psi *= 1.0 / out.psi.l1_norm();
    fix_sign(out.psi, i_left);
    out.residual = eigen_residual(p, out.psi, out.rho);
    return out;
}

SpectralReport analyze_spectrum(const UlamMatrix& p, const Interval& i_left, double tol) {
    auto inv = invariant_density(p, tol, i_left);
    SpectralReport rep;
    rep.leading_simple = inv.leading_simple;
    rep.residual_phi = inv.residual;
    rep.phi = std::move(inv.phi);
    if (!rep.leading_simple) {
        rep.rho = 1.0;
        return rep;
    }
    auto second = second_eigenpair(p, rep.phi, i_left, tol);
    rep.rho = second.rho;
    rep.psi = std::move(second.psi);
    rep.residual_psi = second.residual;
    return rep;
}

DensityGrid restricted_invariant_density(const UlamMatrix& p, const Interval& sub, double tol) {
    const auto [first, last] = aligned_cells(p.dim(), sub);
    const SparseMatrix block = restrict_matrix(p.matrix(), first, last, std::vector<bool>(last - first, false));
    auto fp = iterate_fixed_point(block, DensityGrid::uniform(last - first), tol, default_max_iterations(last - first));
    DensityGrid g = embed(fp.v, first, p.dim());
    g *= 1.0 / g.integral();
    return g;
}

std::vector<std::size_t> hole_cells_for(std::size_t n, std::span<const Interval> holes) {
    std::vector<std::size_t> cells;
    for (std::size_t i = 0; i < n; ++i) {
        double cover = 0.0;
        for (const auto& h : holes) cover += cell_overlap_fraction(n, i, h);
        if (cover >= 0.5) cells.push_back(i);
    }
    return cells;
}

EscapeReport escape_rate(const UlamMatrix& p, std::span<const std::size_t> hole_cells, const Interval& sub_domain,
                         double tol) {
    const auto [first, last] = aligned_cells(p.dim(), sub_domain);
    const std::size_t m = last - first;
    std::vector<bool> killed(m, false);
    std::size_t killed_count = 0;
    for (std::size_t c : hole_cells) {
        if (c < first || c >= last)
            throw DomainError(fmt::format("hole cell {} lies outside the sub-domain cells [{}, {})", c, first, last));
        if (!killed[c - first]) ++killed_count;
        killed[c - first] = true;
    }
    EscapeReport rep;
    if (killed_count == 0) {
        rep.ratio = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    if (killed_count == m) throw DegeneracyError("hole covers the whole sub-domain; escape rate undefined");

    // closed system: invariant measure of the hole
    const SparseMatrix closed = restrict_matrix(p.matrix(), first, last, std::vector<bool>(m, false));
    auto mu = iterate_fixed_point(closed, DensityGrid::uniform(m), tol, default_max_iterations(m)).v;
    double hole_mass = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        if (killed[i]) hole_mass += mu[i];
    rep.hole_measure = hole_mass / (mu.integral() * static_cast<double>(m));

    // open system: surviving-mass decay
    const SparseMatrix open = restrict_matrix(p.matrix(), first, last, killed);
    DensityGrid v = DensityGrid::uniform(m);
    DensityGrid w(m);
    ConvergenceMonitor mon(tol);
    double lambda = 1.0;
    double prev_lambda = 2.0;
    const std::size_t max_it = default_max_iterations(m);
    std::size_t it = 0;
    for (it = 1; it <= max_it; ++it) {
        open.apply_transpose(v.values(), w.values());
        lambda = w.integral() / v.integral();
        if (!(lambda > 0.0)) throw DegeneracyError("open system loses all mass in one step");
        w *= 1.0 / w.integral();
        const double step = l1_distance(w, v) + std::abs(lambda - prev_lambda);
        prev_lambda = lambda;
        std::swap(v, w);
        if (mon.update(step)) break;
    }
    if (it > max_it) throw NumericalError("escape-rate iteration did not converge");
    rep.lambda_open = lambda;
    rep.rate = -std::log(lambda);
    rep.ratio = rep.rate > 0.0 ? rep.hole_measure / rep.rate : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

}  // namespace metamap
