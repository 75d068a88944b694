#include "metamap/metastability.hpp"

#include "metamap/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace metamap {

namespace {

constexpr double kMinHoleLength = 1e-13;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void append_merged(std::vector<Interval>& out, Interval piece) {
    if (!(piece.length() > kMinHoleLength)) return;
    if (!out.empty() && std::abs(out.back().hi - piece.lo) <= kEndpointTol) {
        out.back().hi = piece.hi;
        return;
    }
    out.push_back(piece);
}

// Sub-interval of [p, q] where the branch lies strictly above (above = true)
// or strictly below b. Monotone branches give a single interval.
std::optional<Interval> level_set(const Branch& br, std::size_t id, double p, double q, double b, bool above) {
    const double vp = br.value(p);
    const double vq = br.value(q);
    auto side = [&](double v) { return above ? v > b : v < b; };
    const bool sp = side(vp);
    const bool sq = side(vq);
    if (!sp && !sq) return std::nullopt;
    if (sp && sq) return Interval{p, q};
    double x = 0.0;
    if (br.is_affine()) {
        x = (b - br.intercept()) / br.slope();
    } else {
        auto pre = br.preimage(b, id);
        if (!pre) return std::nullopt;
        x = *pre;
    }
    x = std::clamp(x, p, q);
    return sp ? Interval{p, x} : Interval{x, q};
}

}  // namespace

HoleReport compute_holes(const PiecewiseMap& map_eps, double b) {
    if (!(b > 0.0 && b < 1.0)) throw DomainError("compute_holes: b must lie in (0,1)");
    HoleReport rep;
    const auto& brs = map_eps.branches();
    for (std::size_t i = 0; i < brs.size(); ++i) {
        const auto& dom = brs[i].domain();
        if (dom.lo < b - kEndpointTol) {
            const double q = std::min(dom.hi, b);
            if (auto h = level_set(brs[i], i, dom.lo, q, b, true)) append_merged(rep.H_l, *h);
        }
        if (dom.hi > b + kEndpointTol) {
            const double p = std::max(dom.lo, b);
            if (auto h = level_set(brs[i], i, p, dom.hi, b, false)) append_merged(rep.H_r, *h);
        }
    }
    for (const auto& h : rep.H_l) rep.leb_l += h.length();
    for (const auto& h : rep.H_r) rep.leb_r += h.length();

    auto touches = [&](const Interval& h) { return std::abs(h.lo - b) <= kEndpointTol || std::abs(h.hi - b) <= kEndpointTol; };
    for (const auto* side : {&rep.H_l, &rep.H_r})
        for (const auto& h : *side)
            if (touches(h)) {
                rep.boundary_violation = true;
                rep.warnings.push_back(fmt::format(
                    "boundary violation: hole [{:.6g}, {:.6g}] touches the boundary point {:.6g}; the mixture "
                    "prediction does not apply",
                    h.lo, h.hi, b));
            }
    return rep;
}

HoleReport hole_measures(HoleReport report, const DensityGrid& phi_l, const DensityGrid& phi_r) {
    report.mu_l_Hl = phi_l.integrate(report.H_l);
    report.mu_r_Hr = phi_r.integrate(report.H_r);
    if (report.mu_l_Hl == 0.0 && report.mu_r_Hr == 0.0)
        throw DegeneracyError("both holes have zero measure: the perturbation does not connect the halves");
    if (report.mu_l_Hl == 0.0)
        throw DomainError("left hole has zero measure; relabel the halves so the positive hole is on the left");
    report.ratio = report.mu_r_Hr / report.mu_l_Hl;
    return report;
}

double density_value_near(const DensityGrid& d, double x, const Interval& side) {
    const std::size_t n = d.size();
    const double pos = x * static_cast<double>(n);
    std::vector<std::ptrdiff_t> cand;
    const double k = std::round(pos);
    if (std::abs(pos - k) <= 1e-9) {
        cand = {static_cast<std::ptrdiff_t>(k) - 1, static_cast<std::ptrdiff_t>(k)};
    } else {
        const auto c = static_cast<std::ptrdiff_t>(d.cell_of(x));
        cand = {c - 1, c, c + 1};
    }
    double sum = 0.0;
    int count = 0;
    for (auto c : cand) {
        if (c < 0 || c >= static_cast<std::ptrdiff_t>(n)) continue;
        if (cell_overlap_fraction(n, static_cast<std::size_t>(c), side) < 0.5) continue;
        sum += d[static_cast<std::size_t>(c)];
        ++count;
    }
    return count ? sum / count : 0.0;
}

double analytic_lhr(const PerturbationFamily& family, const DensityGrid& phi_l, const DensityGrid& phi_r) {
    if (!family.has_hole_coefficients()) throw DomainError("analytic_lhr: family has no hole coefficients");
    double num = 0.0, den = 0.0, left_width = 0.0;
    for (const auto& h : family.hole_coefficients()) {
        if (h.side == Side::left) {
            left_width += h.a + h.b;
            den += density_value_near(phi_l, h.point, family.left_interval()) * (h.a + h.b);
        } else {
            num += density_value_near(phi_r, h.point, family.right_interval()) * (h.a + h.b);
        }
    }
    if (!(left_width > 0.0)) throw DomainError("analytic_lhr: left hole coefficients sum to zero; ratio undefined");
    if (!(den > 0.0)) throw DomainError("analytic_lhr: phi_l vanishes at the left holes; ratio undefined");
    return num / den;
}

Mixture predict_mixture(double lhr, const DensityGrid& phi_l, const DensityGrid& phi_r) {
    if (std::isnan(lhr) || lhr < 0.0) throw DomainError(fmt::format("predict_mixture: invalid hole ratio {}", lhr));
    Mixture m;
    m.alpha = std::isinf(lhr) ? 1.0 : lhr / (1.0 + lhr);
    m.density = m.alpha * phi_l + (1.0 - m.alpha) * phi_r;
    return m;
}

MarkovResult markov_stationary(double eps_lr, double eps_rl) {
    if (eps_lr < 0.0 || eps_rl < 0.0 || eps_lr + eps_rl > 1.0)
        throw DomainError(fmt::format("markov_stationary: rates ({}, {}) must be >= 0 with sum <= 1", eps_lr, eps_rl));
    if (eps_lr == 0.0 && eps_rl == 0.0) throw DegeneracyError("markov_stationary: both rates are zero");
    return {eps_rl / (eps_lr + eps_rl), 1.0 - eps_lr - eps_rl};
}

double flux_balance(const DensityGrid& phi_eps, const HoleReport& report) {
    return std::abs(phi_eps.integrate(report.H_l) - phi_eps.integrate(report.H_r));
}

std::pair<DensityGrid, DensityGrid> reference_densities(const PerturbationFamily& family, std::size_t n,
                                                        bool lebesgue_halves, double tol) {
    if (lebesgue_halves)
        return {DensityGrid::normalized_indicator(n, family.left_interval()),
                DensityGrid::normalized_indicator(n, family.right_interval())};
    const UlamMatrix p0 = build_ulam(family.base(), n);
    return {restricted_invariant_density(p0, family.left_interval(), tol),
            restricted_invariant_density(p0, family.right_interval(), tol)};
}

namespace {

struct RowContext {
    const PerturbationFamily& family;
    std::size_t n;
    const StudyOptions& opt;
    const DensityGrid& phi_l;
    const DensityGrid& phi_r;
    const UlamMatrix* p0;
    std::vector<double> infinitesimal;
};

template <class F>
void guarded(SweepRow& row, const char* stage, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        row.ok = false;
        row.failures.push_back(fmt::format("{}: {}", stage, e.what()));
    }
}

void run_row(const RowContext& ctx, double eps, SweepRow& row, SweepArtifacts& art) {
    row.eps = eps;
    row.lhr_emp = row.l1_psi_vs_half_diff = row.rho = row.flux_gap = kNaN;
    row.escape_ratio_l = row.escape_ratio_r = kNaN;
    const double b = ctx.family.boundary();
    const Interval il = ctx.family.left_interval();
    const Interval ir = ctx.family.right_interval();

    std::optional<PiecewiseMap> map;
    guarded(row, "instantiate", [&] { map.emplace(ctx.family.instantiate(eps)); });
    if (!map) return;

    std::optional<UlamMatrix> p;
    guarded(row, "ulam", [&] { p.emplace(build_ulam(*map, ctx.n)); });
    if (!p) return;

    guarded(row, "invariant density", [&] {
        auto inv = invariant_density(*p, ctx.opt.tol, il);
        row.leading_simple = inv.leading_simple;
        row.residual_phi = inv.residual;
        art.phi = std::move(inv.phi);
        if (!row.leading_simple) throw DegeneracyError("eigenvalue 1 is not simple");
    });
    if (art.phi.size() == 0) return;
    row.mu_eps_Il = art.phi.integrate(il);
    row.tv_phi = art.phi.total_variation();
    row.sup_phi = art.phi.sup_norm();

    if (ctx.opt.second_eigenpair && row.leading_simple)
        guarded(row, "second eigenpair", [&] {
            auto sec = second_eigenpair(*p, art.phi, il, ctx.opt.tol);
            row.rho = sec.rho;
            row.residual_psi = sec.residual;
            art.psi = std::move(sec.psi);
            row.psi_integral = art.psi.integral();
            row.psi_left_integral = art.psi.integrate(il);
            row.l1_psi_vs_half_diff = l1_distance(art.psi, 0.5 * ctx.phi_l - 0.5 * ctx.phi_r);
            if (!(row.rho < 1.0 && row.rho > 0.0))
                row.warnings.push_back(fmt::format("second eigenvalue {} outside (0,1)", row.rho));
        });

    bool have_holes = false;
    guarded(row, "holes", [&] {
        art.holes = compute_holes(*map, b);
        for (const auto& w : art.holes.warnings) row.warnings.push_back(w);
        art.holes = hole_measures(art.holes, ctx.phi_l, ctx.phi_r);
        have_holes = true;
        row.lhr_emp = art.holes.ratio;
        row.flux_gap = flux_balance(art.phi, art.holes);
    });

    if (ctx.opt.escape_rates && have_holes && ctx.p0)
        guarded(row, "escape rates", [&] {
            const auto cells_l = hole_cells_for(ctx.n, art.holes.H_l);
            const auto cells_r = hole_cells_for(ctx.n, art.holes.H_r);
            row.escape_ratio_l = escape_rate(*ctx.p0, cells_l, il).ratio;
            row.escape_ratio_r = escape_rate(*ctx.p0, cells_r, ir).ratio;
        });

    if (ctx.opt.saltus)
        guarded(row, "saltus", [&] {
            const auto hier = postcritical_hierarchy(*map, ctx.opt.hierarchy_depth);
            auto dec = saltus_decompose(art.phi, hier, ctx.opt.lip_bound);
            row.lipschitz_regular = dec.lipschitz_estimate;
            row.jumps = dec.jumps.size();
            row.unmatched_jumps = dec.unmatched;
            for (double h : ctx.infinitesimal) {
                const double v = dec.saltus_variation_near(h, ctx.opt.hole_window);
                if (h < b)
                    row.saltus_near_hole_l = std::max(row.saltus_near_hole_l, v);
                else
                    row.saltus_near_hole_r = std::max(row.saltus_near_hole_r, v);
            }
            art.saltus = std::move(dec);
        });
}

}  // namespace

StudyResult convergence_study(const PerturbationFamily& family, const std::vector<double>& eps_list, std::size_t n,
                              const StudyOptions& options) {
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw DomainError("convergence_study: eps values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw DomainError("convergence_study: eps values must be strictly decreasing");
    }
    StudyResult res;
    if (eps_list.empty()) return res;

    auto [phi_l, phi_r] = reference_densities(family, n, options.lebesgue_halves, options.tol);
    res.phi_l = std::move(phi_l);
    res.phi_r = std::move(phi_r);

    std::optional<UlamMatrix> p0;
    if (options.escape_rates) p0.emplace(build_ulam(family.base(), n));

    RowContext ctx{family, n, options, res.phi_l, res.phi_r, p0 ? &*p0 : nullptr, {}};
    try {
        ctx.infinitesimal = infinitesimal_holes(family.base(), family.boundary());
    } catch (const HypothesisViolation&) {
        // saltus windows only; the hypothesis report carries the finding
    }

    res.rows.resize(eps_list.size());
    res.artifacts.resize(eps_list.size());
    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(eps_list.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < eps_list.size(); ++i) run_row(ctx, eps_list[i], res.rows[i], res.artifacts[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < eps_list.size(); i = next++)
                    run_row(ctx, eps_list[i], res.rows[i], res.artifacts[i]);
            });
        for (auto& th : pool) th.join();
    }

    if (family.has_hole_coefficients()) {
        res.lhr_limit = analytic_lhr(family, res.phi_l, res.phi_r);
        res.lhr_analytic = true;
    } else {
        res.lhr_limit = res.rows.back().lhr_emp;
    }

    if (!std::isnan(res.lhr_limit)) {
        const Mixture mix = predict_mixture(res.lhr_limit, res.phi_l, res.phi_r);
        res.alpha_pred = mix.alpha;
        for (std::size_t i = 0; i < res.rows.size(); ++i) {
            res.rows[i].alpha_pred = mix.alpha;
            res.artifacts[i].mixture = mix.density;
            res.rows[i].l1_phi_vs_mixture =
                res.artifacts[i].phi.size() ? l1_distance(res.artifacts[i].phi, mix.density) : kNaN;
        }
    } else {
        res.alpha_pred = kNaN;
        for (auto& r : res.rows) {
            r.alpha_pred = r.l1_phi_vs_mixture = kNaN;
            r.ok = false;
            r.failures.push_back("no hole ratio available for the mixture prediction");
        }
    }
    return res;
}

}  // namespace metamap
