#pragma once

#include "potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace aniso::regimes {

inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class Regime { LIC_ellipse, nonLIC_no_vertical, nonLIC_concentrating, always_LIC };

inline std::string regime_name(Regime r)
{
    switch (r) {
    case Regime::LIC_ellipse: return "LIC_ellipse";
    case Regime::nonLIC_no_vertical: return "nonLIC_no_vertical";
    case Regime::nonLIC_concentrating: return "nonLIC_concentrating";
    case Regime::always_LIC: return "always_LIC";
    }
    return "unknown";
}

inline std::optional<Regime> parse_regime(const std::string& s)
{
    for (auto r : {Regime::LIC_ellipse, Regime::nonLIC_no_vertical, Regime::nonLIC_concentrating, Regime::always_LIC})
        if (regime_name(r) == s) return r;
    return std::nullopt;
}

struct Minimum {
    double value = 0.0;
    double phi = 0.0;              ///< refined location folded into [0, π/2]
    std::vector<double> argmin_set; ///< all grid minima within 1e-9, folded and refined
};

inline double fold(double phi)
{
    constexpr double pi = std::numbers::pi;
    phi = std::fmod(phi, pi);
    if (phi < 0.0) phi += pi;
    return std::min(phi, pi - phi);
}

/** @brief Golden-section refinement of a grid minimum of @p f on [x-h, x+h]. */
inline std::pair<double, double> golden_refine(const AngleFunction& f, double x, double h)
{
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = x - h, hi = x + h;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = f.eval(c), fd = f.eval(d);
    for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
        if (fc < fd) {
            hi = d; d = c; fd = fc;
            c = hi - g * (hi - lo); fc = f.eval(c);
        } else {
            lo = c; c = d; fc = fd;
            d = lo + g * (hi - lo); fd = f.eval(d);
        }
    }
    const double xm = 0.5 * (lo + hi);
    const double fx = f.eval(x), fm = f.eval(xm);
    return fm < fx ? std::pair{xm, fm} : std::pair{x, fx};
}

inline Minimum find_minimum(const AngleFunction& f)
{
    const auto& v = f.values();
    const double gmin = *std::min_element(v.begin(), v.end());
    const double h = std::numbers::pi / static_cast<double>(f.n());
    Minimum m;
    m.value = inf;
    std::vector<double> locs;
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] > gmin + 1e-9) continue;
        auto [x, fx] = golden_refine(f, f.node(j), h);
        const double folded = fold(x) < 1e-9 ? 0.0 : fold(x);
        if (std::none_of(locs.begin(), locs.end(), [&](double y) { return std::abs(y - folded) < 1e-6; }))
            locs.push_back(folded);
        m.value = std::min(m.value, fx);
    }
    std::sort(locs.begin(), locs.end());
    m.argmin_set = locs;
    m.phi = locs.front();
    return m;
}

struct LicWitness {
    bool lic = true;
    double min_value = 0.0; ///< min Ω̃
    double argmin = 0.0;
};

/** @brief LIC iff Ω̃ ≥ 0; for 1 ≤ s < 2 it always holds. */
inline LicWitness is_lic(const PotentialSpec& spec)
{
    auto m = find_minimum(spec.Omega_tilde);
    LicWitness w{m.value >= -1e-10, m.value, m.phi};
    if (spec.s >= 1.0) w.lic = true;
    return w;
}

struct CriticalAlphas {
    double alpha_L = inf;
    double alpha_L0 = inf;
    Minimum omega_min;
};

inline CriticalAlphas critical_alphas(const PotentialSpec& spec)
{
    if (!spec.parametrized()) throw DomainError("regimes", "critical_alphas needs a parametrized spec");
    if (spec.s >= 1.0) throw BranchError("regimes", "critical alphas are defined for 0<=s<1");
    CriticalAlphas c;
    c.omega_min = find_minimum(spec.omega_hat);
    if (c.omega_min.value < -1e-10) c.alpha_L = -1.0 / c.omega_min.value;
    const double at0 = spec.omega_hat.values()[0];
    if (at0 < 0.0) c.alpha_L0 = -1.0 / at0;
    return c;
}

inline std::optional<double> zigzag_angle(const PotentialSpec& spec)
{
    auto m = critical_alphas(spec).omega_min;
    if (m.phi < 1e-6) return std::nullopt;
    return m.phi;
}

/** @brief Local exponent κ in ω(π/2+δ) ~ δ^κ from a log-log fit over δ ∈ [1e-3, 1e-1]. */
inline std::optional<double> degeneracy_exponent(const AngleFunction& omega)
{
    constexpr double half_pi = std::numbers::pi / 2.0;
    std::vector<double> x, y;
    for (int i = 0; i <= 20; ++i) {
        const double d = std::pow(10.0, -3.0 + 0.1 * i);
        const double w = 0.5 * (omega.eval(half_pi + d) + omega.eval(half_pi - d));
        if (w <= 0.0) return std::nullopt;
        x.push_back(std::log(d));
        y.push_back(std::log(w));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
    mx /= x.size(); my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) { sxy += (x[i] - mx) * (y[i] - my); sxx += (x[i] - mx) * (x[i] - mx); }
    return sxy / sxx;
}

struct RegimeReport {
    double s = 0.0;
    double alpha = 0.0;
    double alpha_L = inf;
    double alpha_L0 = inf;
    Regime regime = Regime::LIC_ellipse;
    bool lic = true;
    double omega_tilde_min = 0.0;
    double argmin_phi = 0.0;
    std::vector<double> argmin_set;
    std::optional<double> zigzag_angle;
    std::optional<double> kappa;
    bool rho1d_never_local_min = false;
    std::string alpha_star = "unknown";
    double alpha_star_lower_bound = inf;
};

inline RegimeReport classify(const PotentialSpec& spec)
{
    RegimeReport r;
    r.s = spec.s;
    r.alpha = spec.alpha;
    const auto w = is_lic(spec);
    r.lic = w.lic;
    if (spec.s >= 1.0) {
        r.regime = Regime::always_LIC;
        auto m = find_minimum(spec.Omega_tilde);
        r.omega_tilde_min = m.value;
        r.argmin_phi = m.phi;
        r.argmin_set = m.argmin_set;
        return r;
    }
    if (spec.parametrized()) {
        const auto c = critical_alphas(spec);
        r.alpha_L = c.alpha_L;
        r.alpha_L0 = c.alpha_L0;
        r.omega_tilde_min = c.omega_min.value;
        r.argmin_phi = c.omega_min.phi;
        r.argmin_set = c.omega_min.argmin_set;
        if (c.omega_min.phi >= 1e-6) r.zigzag_angle = c.omega_min.phi;
        if (spec.alpha <= r.alpha_L * (1.0 + 1e-12)) r.regime = Regime::LIC_ellipse;
        else if (spec.alpha < r.alpha_L0) r.regime = Regime::nonLIC_no_vertical;
        else r.regime = Regime::nonLIC_concentrating;
        r.kappa = degeneracy_exponent(spec.omega);
        r.rho1d_never_local_min = r.kappa && *r.kappa > 2.5;
        r.alpha_star_lower_bound = r.alpha_L;
    } else {
        auto m = find_minimum(spec.Omega_tilde);
        r.omega_tilde_min = m.value;
        r.argmin_phi = m.phi;
        r.argmin_set = m.argmin_set;
        if (w.lic) r.regime = Regime::LIC_ellipse;
        else if (spec.Omega_tilde.values()[0] > 0.0) r.regime = Regime::nonLIC_no_vertical;
        else r.regime = Regime::nonLIC_concentrating;
    }
    return r;
}

} // namespace aniso::regimes
