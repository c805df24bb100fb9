#pragma once

#include "potential.hpp"
#include "quadrature.hpp"
#include "regimes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace aniso::ellipse {

struct QuadCoeffs {
    double A = 0.0, B = 0.0, D = 0.0;
};

/** @brief ρ_{a,b,η}: the isotropic minimizer stretched by (a, b) and rotated by η. */
struct EllipseParams {
    double a = 1.0, b = 1.0, eta = 0.0;
    bool degenerate = false;
};

struct Moments {
    double c2 = 0.0, s2 = 0.0, cs = 0.0, one = 0.0;
};

/** @brief τ_s (R1/R2)^{2+s}, or 1 in the log case. */
inline double coefficient_scale(double s)
{
    if (s == 0.0) return 1.0;
    const auto p = specfun::profile_constants(s);
    return specfun::tau_extended(s) / std::pow(p.R2, 2.0 + s);
}

/** @brief Physical semi-axes are (a, b) times this factor. */
inline double support_scale(double s) { return s == 0.0 ? 1.0 : specfun::profile_constants(s).R2; }

namespace detail {

/** Nodes on [0, L] refined geometrically toward 0 from width h0, capped at hmax. */
inline quad::NodeSet one_sided_nodes(double L, double h0, double hmax)
{
    quad::NodeSet ns;
    const auto& g = quad::gl16();
    double lo = 0.0, h = std::min(h0, hmax);
    while (lo < L) {
        const double hi = std::min(L, lo + h);
        ns.append_panel(lo, hi, g);
        lo = hi;
        h = std::min(2.0 * h, hmax);
    }
    return ns;
}

inline double panel_cap(const AngleFunction& W)
{
    return std::min(std::numbers::pi / 8.0, 5.0 / static_cast<double>(std::max<std::size_t>(W.bandwidth(), 1)));
}

} // namespace detail

/**
 * @brief ∫_{-π}^{π} g(Q) {cos², sin², cos·sin, 1} W(φ) dφ with Q = a²cos²φ + b²sin²φ.
 *
 * @p power is the exponent of g near Q = 0 (g ~ Q^power); it drives the
 * endpoint treatment when a or b vanishes.
 */
template <class G>
Moments angular_moments(const AngleFunction& W, double a, double b, G&& g, double power)
{
    constexpr double pi = std::numbers::pi;
    Moments m;
    auto add = [&](double phi, double wt, double Wv) {
        const double c = std::cos(phi), s = std::sin(phi);
        const double q = a * a * c * c + b * b * s * s;
        const double v = wt * g(q) * Wv;
        m.c2 += v * c * c;
        m.s2 += v * s * s;
        m.cs += v * c * s;
        m.one += v;
    };
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (!(hi > 0.0)) throw DomainError("ellipse", "(a,b) must not both vanish");
    const double centre = a <= b ? 0.0 : pi / 2.0;
    if (lo == 0.0) {
        const double scale = std::max(1.0, W.max_abs());
        if (std::abs(W.eval(centre)) > 1e-9 * scale) {
            const std::string which = a == 0.0 ? "A" : "B";
            throw DivergenceError("ellipse", "coefficient " + which + " diverges: transform does not vanish at the degenerate axis");
        }
        const auto rule = quad::graded_rule(pi / 2.0, 2.0 + 2.0 * power, detail::panel_cap(W), 1e-12);
        auto pair = [&](double t, double wt) {
            add(centre + t, wt, W.increment(centre, t));
            add(centre - t, wt, W.increment(centre, -t));
        };
        pair(rule.eps, rule.tip_weight);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) pair(rule.nodes.t[i], rule.nodes.w[i]);
    } else if (static_cast<double>(W.n()) * std::atanh(std::min(lo / hi, 0.999)) >= 36.0) {
        const std::size_t n = W.n();
        const double h = 2.0 * pi / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) add(W.node(j), h, W.values()[j]);
        return m;
    } else {
        const auto ns = detail::one_sided_nodes(pi / 2.0, lo / hi / 8.0, detail::panel_cap(W));
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const double t = ns.t[i];
            add(centre + t, ns.w[i], W.eval(centre + t));
            add(centre - t, ns.w[i], W.eval(centre - t));
        }
    }
    m.c2 *= 2.0; m.s2 *= 2.0; m.cs *= 2.0; m.one *= 2.0;
    return m;
}

/** @brief (A, B, D) for a transform that already carries the rotation η. */
inline QuadCoeffs quad_coeffs_rotated(const AngleFunction& Wt, double s, double a, double b)
{
    if (!(a >= 0.0 && b >= 0.0)) throw DomainError("ellipse", "a and b must be nonnegative");
    const double p = 0.5 * (2.0 + s);
    const auto m = angular_moments(Wt, a, b, [p](double q) { return std::pow(q, -p); }, -p);
    const double K = coefficient_scale(s);
    return {K * m.c2, K * m.s2, K * m.cs};
}

inline QuadCoeffs quad_coeffs(const PotentialSpec& spec, double a, double b, double eta = 0.0)
{
    return quad_coeffs_rotated(spec.Omega_tilde.shifted(eta), spec.s, a, b);
}

/** @brief Coefficients through Ω itself on 1 ≤ s < 2 (symmetric Ω only). */
inline QuadCoeffs quad_coeffs_high_s(const PotentialSpec& spec, double a, double b)
{
    const double s = spec.s;
    if (!(s >= 1.0 && s < 2.0)) throw BranchError("ellipse", "quad_coeffs_high_s needs 1<=s<2");
    if (!spec.Omega.symmetric()) throw DomainError("ellipse", "quad_coeffs_high_s is unsupported for asymmetric Omega");
    if (!(a > 0.0 && b > 0.0)) throw DomainError("ellipse", "quad_coeffs_high_s needs a,b>0");
    constexpr double pi = std::numbers::pi;
    const auto pc = specfun::profile_constants(s);
    const double pref = pc.C2 * s * pi / (2.0 * std::cos((s - 1.0) * pi / 2.0));
    const double r = b / a;
    const double h0 = std::min(r, 1.0 / r) / 8.0;
    const double cap = detail::panel_cap(spec.Omega);
    const auto ns = detail::one_sided_nodes(pi / 4.0, h0, cap);
    double ia = 0.0, ib = 0.0;
    auto add = [&](double th, double w) {
        const double c = std::cos(th), sn = std::sin(th);
        const double q = std::pow(a * a * c * c + b * b * sn * sn, -0.5 * s);
        const double om = spec.Omega.eval(std::atan2(b * sn, a * c));
        ia += w * ((s - 1.0) * c * c + sn * sn) * q * om;
        ib += w * (c * c + (s - 1.0) * sn * sn) * q * om;
    };
    for (std::size_t i = 0; i < ns.size(); ++i) {
        add(ns.t[i], ns.w[i]);
        add(pi / 2.0 - ns.t[i], ns.w[i]);
    }
    return {2.0 * pref * ia / (a * a), 2.0 * pref * ib / (b * b), 0.0};
}

/** @brief 𝓜 = a²A + b²B = τ_s (R1/R2)^{2+s} ∫ Q^{-s/2} Ω̃_η. */
inline double m_functional(const AngleFunction& Wt, double s, double a, double b)
{
    const auto m = angular_moments(Wt, a, b, [s](double q) { return std::pow(q, -0.5 * s); }, -0.5 * s);
    return coefficient_scale(s) * m.one;
}

/** @brief Energy 𝓔 = 𝓜 + (s/2)(a²+b²) on 0 < s < 1. */
inline double calE(const AngleFunction& Wt, double s, double a, double b)
{
    return m_functional(Wt, s, a, b) + 0.5 * s * (a * a + b * b);
}

struct Solution {
    EllipseParams params;
    QuadCoeffs coeffs;
    std::vector<EllipseParams> roots; ///< every η root found, polished
    double residual = 0.0;            ///< max(|A-1|, |B-1|, |D|) or item-ii residual
};

namespace detail {

struct AspectResult {
    EllipseParams p;
    QuadCoeffs c;
};

inline double homogeneity_exponent(double s) { return s == 0.0 ? 2.0 : 2.0 + s; }

/** @brief Degenerate solution a = 0 (or b = 0 when @p vertical is false). */
inline AspectResult degenerate_solution(const AngleFunction& Wt, double s, bool vertical)
{
    const double k = homogeneity_exponent(s);
    AspectResult r;
    r.p.degenerate = true;
    if (vertical) {
        const auto c1 = quad_coeffs_rotated(Wt, s, 0.0, 1.0);
        const double b = std::pow(c1.B, 1.0 / k);
        r.p.a = 0.0;
        r.p.b = b;
        r.c = {c1.A * std::pow(b, -k), 1.0, c1.D * std::pow(b, -k)};
    } else {
        const auto c1 = quad_coeffs_rotated(Wt, s, 1.0, 0.0);
        const double a = std::pow(c1.A, 1.0 / k);
        r.p.a = a;
        r.p.b = 0.0;
        r.c = {1.0, c1.B * std::pow(a, -k), c1.D * std::pow(a, -k)};
    }
    return r;
}

/** @brief Solve A(1,b)/B(1,b) = 1 by bisection in log b, then rescale so A = B = 1. */
inline AspectResult solve_aspect(const AngleFunction& Wt, double s)
{
    auto h = [&](double lb) {
        const auto c = quad_coeffs_rotated(Wt, s, 1.0, std::exp(lb));
        return std::log(c.A) - std::log(c.B);
    };
    double lo = std::log(1e-3), hi = std::log(1e3);
    double hlo = h(lo), hhi = h(hi);
    const double lmin = std::log(1e-9), lmax = std::log(1e9);
    while (hlo > 0.0 && lo > lmin) { hi = lo; hhi = hlo; lo = std::max(lmin, lo - std::log(10.0)); hlo = h(lo); }
    while (hhi < 0.0 && hi < lmax) { lo = hi; hlo = hhi; hi = std::min(lmax, hi + std::log(10.0)); hhi = h(hi); }
    const double k = homogeneity_exponent(s);
    const double thr = std::log(1e6);
    auto try_degenerate = [&](bool vertical) -> std::optional<AspectResult> {
        try {
            return degenerate_solution(Wt, s, vertical);
        } catch (const DivergenceError&) {
            return std::nullopt;
        }
    };
    if (hlo > 0.0 || hhi < 0.0) {
        const bool vertical = hhi < 0.0;
        if (auto d = try_degenerate(vertical)) return *d;
        throw NumericalError("ellipse", "aspect bracket failed: h(1e-9)=" + std::to_string(hlo) + " h(1e9)=" + std::to_string(hhi));
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double hm = h(mid);
        if (hm == 0.0) { lo = hi = mid; break; }
        if (hm < 0.0) lo = mid; else hi = mid;
    }
    const double lb = 0.5 * (lo + hi);
    if (std::abs(lb) > thr) {
        if (auto d = try_degenerate(lb > 0.0)) return *d;
    }
    const double b1 = std::exp(lb);
    const auto c1 = quad_coeffs_rotated(Wt, s, 1.0, b1);
    const double lam = std::pow(c1.A, 1.0 / k);
    AspectResult r;
    r.p = {lam, lam * b1, 0.0, false};
    r.c = quad_coeffs_rotated(Wt, s, r.p.a, r.p.b);
    return r;
}

/** @brief Newton on (A-1, B-1) in (a, b) with a finite-difference Jacobian. */
inline AspectResult newton_polish(const AngleFunction& Wt, double s, AspectResult r)
{
    if (r.p.degenerate) return r;
    auto resid = [](const QuadCoeffs& c) { return std::max(std::abs(c.A - 1.0), std::abs(c.B - 1.0)); };
    for (int it = 0; it < 6 && resid(r.c) > 1e-14; ++it) {
        const double ha = 1e-6 * r.p.a, hb = 1e-6 * r.p.b;
        const auto ca = quad_coeffs_rotated(Wt, s, r.p.a + ha, r.p.b);
        const auto cb = quad_coeffs_rotated(Wt, s, r.p.a, r.p.b + hb);
        Eigen::Matrix2d J;
        J << (ca.A - r.c.A) / ha, (cb.A - r.c.A) / hb, (ca.B - r.c.B) / ha, (cb.B - r.c.B) / hb;
        const Eigen::Vector2d F(r.c.A - 1.0, r.c.B - 1.0);
        const Eigen::Vector2d d = J.fullPivLu().solve(F);
        AspectResult t = r;
        t.p.a -= d(0);
        t.p.b -= d(1);
        if (!(t.p.a > 0.0 && t.p.b > 0.0)) break;
        t.c = quad_coeffs_rotated(Wt, s, t.p.a, t.p.b);
        if (resid(t.c) >= resid(r.c)) break;
        r = t;
    }
    return r;
}

inline AspectResult solve_at(const AngleFunction& Ot, double s, double eta)
{
    const auto Wt = Ot.shifted(eta);
    auto r = newton_polish(Wt, s, solve_aspect(Wt, s));
    r.p.eta = eta;
    return r;
}

/** @brief Map (a, b, η) to the equivalent parameters with η ∈ [0, π/2). */
inline EllipseParams normalise(EllipseParams p)
{
    constexpr double half = std::numbers::pi / 2.0;
    double e = std::fmod(p.eta, std::numbers::pi);
    if (e < 0.0) e += std::numbers::pi;
    if (e >= half - 1e-13) {
        std::swap(p.a, p.b);
        e -= half;
        if (e < 0.0) e = 0.0;
    }
    p.eta = e;
    return p;
}

} // namespace detail

inline Solution solve_ellipse(const PotentialSpec& spec)
{
    const double s = spec.s;
    const auto lic = regimes::is_lic(spec);
    if (!lic.lic)
        throw RegimeError("ellipse", "potential is not LIC (min of transform " + std::to_string(lic.min_value) + "); no ellipse minimizer");
    const auto& Ot = spec.Omega_tilde;
    auto residual = [](const detail::AspectResult& r) {
        return std::max({std::abs(r.c.A - 1.0), std::abs(r.c.B - 1.0), std::abs(r.c.D)});
    };
    Solution sol;
    if (spec.Omega.symmetric()) {
        auto r = detail::solve_at(Ot, s, 0.0);
        sol.params = r.p;
        sol.coeffs = r.c;
        sol.roots = {r.p};
        sol.residual = r.p.degenerate ? std::abs(r.c.B - 1.0) : residual(r);
        return sol;
    }
    constexpr int samples = 64;
    const double step = std::numbers::pi / 2.0 / samples;
    std::vector<double> eta(samples + 1), g(samples + 1);
    for (int k = 0; k <= samples; ++k) {
        eta[k] = k * step;
        g[k] = detail::solve_at(Ot, s, eta[k]).c.D;
    }
    std::vector<detail::AspectResult> found;
    auto push = [&](const detail::AspectResult& r) {
        auto p = detail::normalise(r.p);
        for (const auto& f : found)
            if (std::abs(f.p.eta - p.eta) < 1e-9) return;
        auto q = r;
        q.p = p;
        found.push_back(q);
    };
    for (int k = 0; k < samples; ++k) {
        if (g[k] == 0.0) { push(detail::solve_at(Ot, s, eta[k])); continue; }
        if (g[k] * g[k + 1] > 0.0) continue;
        double lo = eta[k], hi = eta[k + 1], glo = g[k];
        for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = detail::solve_at(Ot, s, mid).c.D;
            if (gm == 0.0) { lo = hi = mid; break; }
            if ((gm < 0.0) == (glo < 0.0)) { lo = mid; glo = gm; } else hi = mid;
        }
        push(detail::solve_at(Ot, s, 0.5 * (lo + hi)));
    }
    if (found.empty()) throw NumericalError("ellipse", "no sign change of D found over the eta scan");
    std::size_t best = 0;
    if (s > 0.0 && s < 1.0) {
        double ebest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < found.size(); ++i) {
            const auto& p = found[i].p;
            if (p.degenerate) continue;
            const double e = calE(Ot.shifted(p.eta), s, p.a, p.b);
            if (e < ebest - 1e-12 || (std::abs(e - ebest) <= 1e-12 && p.eta < found[best].p.eta)) { ebest = e; best = i; }
        }
    } else {
        for (std::size_t i = 1; i < found.size(); ++i)
            if (found[i].p.eta < found[best].p.eta) best = i;
    }
    const auto& r = found[best];
    sol.params = r.p;
    sol.coeffs = quad_coeffs(spec, r.p.a, r.p.b, r.p.eta);
    for (const auto& f : found) sol.roots.push_back(f.p);
    sol.residual = r.p.degenerate ? std::abs(sol.coeffs.B - 1.0) : std::max({std::abs(sol.coeffs.A - 1.0), std::abs(sol.coeffs.B - 1.0), std::abs(sol.coeffs.D)});
    return sol;
}

/** @brief Value of (W_rep + A x1² + B x2² + 2D x1x2) * ρ_{a,b,η} on its support, in the rotated frame. */
inline double potential_constant(const PotentialSpec& spec, const EllipseParams& p)
{
    const double s = spec.s;
    const auto Wt = spec.Omega_tilde.shifted(p.eta);
    if (s == 0.0) {
        const auto c = quad_coeffs_rotated(Wt, s, p.a, p.b);
        const auto m = angular_moments(Wt, p.a, p.b, [](double q) { return std::log(q); }, 0.0);
        const double mean = spec.Omega.coefficients()[0].real();
        return 0.5 + mean - 0.5 * m.one + 0.25 * (c.A * p.a * p.a + c.B * p.b * p.b);
    }
    if (!(s > 0.0 && s < 1.0)) throw BranchError("ellipse", "potential_constant needs 0<=s<1");
    const auto pc = specfun::profile_constants(s);
    return pc.V1 * (pc.R2 / pc.R1) * (pc.R2 / pc.R1) * m_functional(Wt, s, p.a, p.b);
}

/** @brief λ with pushforward of ρ_{a,b,η} onto e_φ equal to λρ1(λ·). */
inline double project_ellipse(const PotentialSpec& spec, const EllipseParams& p, double phi)
{
    if (!(p.a > 0.0 || p.b > 0.0)) throw DomainError("ellipse", "(a,b) must not both vanish");
    const auto pc = specfun::profile_constants(spec.s);
    specfun::require_1d(pc);
    const double c = std::cos(phi - p.eta), sn = std::sin(phi - p.eta);
    return pc.R1 / (support_scale(spec.s) * std::sqrt(p.a * p.a * c * c + p.b * p.b * sn * sn));
}

/** @brief Boundary of supp ρ_{a,b,η} as a closed polyline of @p npts points. */
inline std::vector<std::array<double, 2>> boundary_polyline(const PotentialSpec& spec, const EllipseParams& p, std::size_t npts = 256)
{
    const double r = support_scale(spec.s);
    const double ce = std::cos(p.eta), se = std::sin(p.eta);
    std::vector<std::array<double, 2>> pts(npts);
    for (std::size_t i = 0; i < npts; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(npts);
        const double x = r * p.a * std::cos(t), y = r * p.b * std::sin(t);
        pts[i] = {ce * x - se * y, se * x + ce * y};
    }
    return pts;
}

} // namespace aniso::ellipse
