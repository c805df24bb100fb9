#pragma once

#include "potential.hpp"
#include "regimes.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aniso::stability {

inline void require_riesz_1d(double s, const char* what)
{
    if (!(s > 0.0 && s < 1.0)) throw BranchError("stability", std::string(what) + " needs 0<s<1");
}

/** @brief ρ₁(0) of the one-dimensional minimizer. */
inline double rho1_centre(double s)
{
    const auto pc = specfun::require_1d(specfun::profile_constants(s));
    return specfun::eval_rho1(pc, 0.0);
}

/** @brief Coefficient of ε^{1-s} in (W*ρ)(ε,0) - (W*ρ)(0,0) for ρ = ψ(x₂)δ(x₁). */
inline double vertical_defect(const PotentialSpec& spec, double psi0)
{
    require_riesz_1d(spec.s, "vertical_defect");
    if (!(psi0 > 0.0)) throw DomainError("stability", "psi0 must be positive");
    return spec.Omega_tilde.eval(0.0) * psi0 / (2.0 * specfun::tau_s(2.0 - spec.s));
}

struct DefectFit {
    double c = 0.0;           ///< fitted coefficient of ε^{1-s}
    double d = 0.0;           ///< fitted coefficient of ε²
    double closed_form = 0.0; ///< vertical_defect
    double reference = 0.0;   ///< |ψ₀ Ω(π/2) c_s / (2τ_{2-s})|, scale for Ω̃(0) ≈ 0
    double max_residual = 0.0;
    std::vector<double> eps, diff;

    double discrepancy() const { return std::abs(c - closed_form) / std::max(std::abs(closed_form), reference); }
};

/** @brief (W*ρ)(ε,0) - (W*ρ)(0,0) for ψ = (ψ₀/ρ₁(0)) ρ₁ by adaptive quadrature. */
inline double defect_difference(const PotentialSpec& spec, double psi0, double eps)
{
    const double s = spec.s;
    const auto pc = specfun::require_1d(specfun::profile_constants(s));
    const double scale = psi0 / specfun::eval_rho1(pc, 0.0);
    const double om_top = spec.Omega.eval(std::numbers::pi / 2.0);
    auto f = [&](double y) {
        if (y == 0.0) return 0.0;
        const double ay = std::abs(y);
        const double q = eps / y; // Ω(atan2(-y, ε)) = Ω(π/2 + atan(ε/y))
        const double radial = std::expm1(-0.5 * s * std::log1p(q * q));
        const double incr = spec.Omega.increment(std::numbers::pi / 2.0, std::atan(q));
        const double bracket = radial * (om_top + incr) + incr;
        return std::pow(ay, -s) * bracket * scale * specfun::eval_rho1(pc, y);
    };
    boost::math::quadrature::tanh_sinh<double> ts(12);
    std::vector<double> cuts{0.0, eps};
    while (cuts.back() * 4.0 < pc.R1) cuts.push_back(cuts.back() * 4.0);
    cuts.push_back(pc.R1);
    double total = 0.0;
    for (double sign : {1.0, -1.0})
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += ts.integrate([&](double y) { return f(sign * y); }, cuts[i], cuts[i + 1], 1e-13);
    return total + eps * eps * scale;
}

/** @brief Least-squares fit of c ε^{1-s} + d ε² to the direct convolution differences. */
inline DefectFit defect_direct_check(const PotentialSpec& spec, double psi0, const std::vector<double>& eps_grid)
{
    require_riesz_1d(spec.s, "defect_direct_check");
    if (eps_grid.size() < 2) throw DomainError("stability", "need at least two eps values");
    const double s = spec.s;
    DefectFit r;
    r.closed_form = vertical_defect(spec, psi0);
    r.reference = std::abs(psi0 * spec.Omega.eval(std::numbers::pi / 2.0) * specfun::c_s(s) / (2.0 * specfun::tau_s(2.0 - s)));
    Eigen::MatrixXd X(eps_grid.size(), 2);
    Eigen::VectorXd y(eps_grid.size());
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        const double e = eps_grid[i];
        const double w = std::pow(e, s - 1.0);
        X(i, 0) = 1.0;
        X(i, 1) = e * e * w;
        const double v = defect_difference(spec, psi0, e);
        y(i) = v * w;
        r.eps.push_back(e);
        r.diff.push_back(v);
    }
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    r.c = beta(0);
    r.d = beta(1);
    r.max_residual = (X * beta - y).cwiseAbs().maxCoeff();
    return r;
}

inline std::vector<double> default_eps_grid(std::size_t n = 9)
{
    std::vector<double> g;
    for (std::size_t i = 0; i < n; ++i) g.push_back(std::pow(10.0, -4.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1)));
    return g;
}

struct CmTerms {
    double first = 0.0;  ///< ∫∫ |(sin Mx - sin My)/(x-y)|² |x-y|^{-s} ρ₁ρ₁
    double second = 0.0; ///< ∫∫ |sin Mx - sin My|² ρ₁ρ₁
    double c = 0.0;      ///< -(s/4) first + (1/2) second
};

/**
 * @brief Energy coefficient of the sinusoidal perturbation x₁ = ε sin(M x₂) of ρ_1D.
 *
 * x = R₁ sin α and y = x + (R₁ - x) v^{1/(1-s)} remove the endpoint and
 * diagonal singularities; the quotient is M cos(M(x+y)/2) sinc(M(x-y)/2).
 */
inline CmTerms perturbation_terms(double s, int M, std::size_t nodes = 256)
{
    require_riesz_1d(s, "perturbation_coefficient");
    if (M < 1) throw DomainError("stability", "M must be a positive integer");
    const auto pc = specfun::require_1d(specfun::profile_constants(s));
    const double R = pc.R1, Md = static_cast<double>(M);
    const auto g = quad::gauss_legendre(nodes);
    const double p = 1.0 / (1.0 - s);
    auto rho = [&](double x) { return specfun::eval_rho1(pc, x); };
    auto sinc = [](double z) { return std::abs(z) < 1e-4 ? 1.0 - z * z / 6.0 : std::sin(z) / z; };
    CmTerms t;
    double first = 0.0, mean_sin2 = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double a = 0.5 * std::numbers::pi * g.x[i];
        const double x = R * std::sin(a);
        const double wx = 0.5 * std::numbers::pi * g.w[i] * R * std::cos(a) * rho(x);
        const double sx = std::sin(Md * x);
        mean_sin2 += wx * sx * sx;
        const double L = R - x;
        double inner = 0.0;
        for (std::size_t j = 0; j < nodes; ++j) {
            const double v = 0.5 * (g.x[j] + 1.0);
            const double d = L * std::pow(v, p);
            const double y = x + d;
            const double q = Md * std::cos(0.5 * Md * (x + y)) * sinc(0.5 * Md * d);
            inner += 0.5 * g.w[j] * q * q * rho(y);
        }
        first += wx * inner * std::pow(L, 1.0 - s) / (1.0 - s);
    }
    t.first = 2.0 * first;
    t.second = 2.0 * mean_sin2;
    t.c = -0.25 * s * t.first + 0.5 * t.second;
    if (t.second > 4.0 + 1e-12) throw NumericalError("stability", "second c_M integral exceeds its bound 4");
    return t;
}

inline double perturbation_coefficient(double s, int M) { return perturbation_terms(s, M).c; }

struct CmSweep {
    std::vector<std::pair<int, double>> table;
    std::optional<int> first_unstable_M;
    bool second_term_bounded = true;
    bool first_term_increasing = true;
};

inline CmSweep cm_sweep(double s, int M_max)
{
    CmSweep r;
    double prev_first = -1.0;
    for (int M = 1; M <= M_max; ++M) {
        const auto t = perturbation_terms(s, M);
        r.table.emplace_back(M, t.c);
        r.second_term_bounded = r.second_term_bounded && t.second <= 4.0;
        r.first_term_increasing = r.first_term_increasing && t.first >= 0.0 && t.first > prev_first;
        prev_first = t.first;
        if (!r.first_unstable_M && t.c < 0.0) r.first_unstable_M = M;
    }
    return r;
}

struct ComparisonPotential {
    AngleFunction Omega_star;       ///< Ω*
    AngleFunction Omega_tilde_star; ///< bump Ω̃* supported in [π/2 - w, π/2 + w]
    double A = 0.0;
    double width = 0.0;
    double normalisation = 0.0;
};

/** @brief exp(-1/(1-u²)) on |u| < 1. */
inline double bump(double u) { return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0; }

/**
 * @brief Ω̃* ∝ bump((φ - π/2)/w), w = 1/concentration, with
 * 2τ_s ∫_0^π |sin φ|^{-s} Ω̃* dφ = 1, so that B = 1 for the segment a = 0, b = R₁/R₂, and
 * A = 2τ_s ∫_0^π cot²φ |sin φ|^{-s} Ω̃* dφ is the matching ellipse coefficient.
 */
inline ComparisonPotential comparison_potential(double s, double concentration, std::size_t n = 0)
{
    require_riesz_1d(s, "comparison_potential");
    const double w = 1.0 / concentration;
    if (!(w > 0.0 && w < std::numbers::pi / 2.0)) throw DomainError("stability", "concentration must exceed 2/pi");
    if (n == 0) {
        n = 1024;
        while (static_cast<double>(n) < 512.0 * concentration) n *= 2;
    }
    const double tau = specfun::tau_s(s), hp = std::numbers::pi / 2.0;
    const auto g = quad::gauss_legendre(128);
    double I0 = 0.0, IA = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        const double phi = hp + w * g.x[i];
        const double b = w * g.w[i] * bump(g.x[i]) * std::pow(std::sin(phi), -s);
        const double ct = std::cos(phi) / std::sin(phi);
        I0 += b;
        IA += b * ct * ct;
    }
    ComparisonPotential r;
    r.width = w;
    r.normalisation = 1.0 / (2.0 * tau * I0);
    r.A = 2.0 * tau * IA * r.normalisation;
    const double k = r.normalisation;
    r.Omega_tilde_star = AngleFunction::from_callable([k, w, hp](double phi) {
        double u = std::remainder(phi - hp, std::numbers::pi);
        return k * bump(u / w);
    }, n);
    r.Omega_star = inverse_transform(r.Omega_tilde_star, s);
    if (!(r.A < 1.0))
        throw DomainError("stability", "comparison potential has A=" + std::to_string(r.A) + " >= 1; increase the concentration");
    return r;
}

struct WidthFit {
    double kappa = std::numeric_limits<double>::quiet_NaN();
    double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    double target_exponent = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
};

/** @brief Least-squares slope of log(width) against log(α), compared with -1/(κ+1). */
inline WidthFit width_scaling_fit(const std::vector<std::pair<double, double>>& data, double kappa, double min_span = 10.0)
{
    if (data.size() < 3) throw NumericalError("stability", "width fit needs at least three points");
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (auto [a, w] : data) {
        if (!(a > 0.0 && w > 0.0)) throw NumericalError("stability", "width fit needs positive alpha and width");
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    if (hi / lo < min_span) throw NumericalError("stability", "alpha values span less than the required ratio");
    double mx = 0, my = 0;
    for (auto [a, w] : data) {
        mx += std::log(a);
        my += std::log(w);
    }
    mx /= static_cast<double>(data.size());
    my /= static_cast<double>(data.size());
    double sxy = 0, sxx = 0;
    for (auto [a, w] : data) {
        sxy += (std::log(a) - mx) * (std::log(w) - my);
        sxx += (std::log(a) - mx) * (std::log(a) - mx);
    }
    WidthFit f;
    f.kappa = kappa;
    f.fitted_exponent = sxy / sxx;
    f.intercept = my - f.fitted_exponent * mx;
    f.target_exponent = -1.0 / (kappa + 1.0);
    return f;
}

struct StabilityReport {
    double vertical_defect_coeff = 0.0;
    bool vertical_excluded = false;
    std::vector<std::pair<int, double>> c_M_table;
    std::optional<int> first_unstable_M;
    WidthFit width_fit;
};

/** @brief Defect with ψ = ρ₁, the c_M sweep, and κ with its target exponent; widths are fitted when given. */
inline StabilityReport stability_report(const PotentialSpec& spec, int cm_max = 64,
                                        const std::vector<std::pair<double, double>>& widths = {})
{
    require_riesz_1d(spec.s, "stability_report");
    StabilityReport r;
    r.vertical_defect_coeff = vertical_defect(spec, rho1_centre(spec.s));
    r.vertical_excluded = r.vertical_defect_coeff < 0.0;
    if (cm_max > 0) {
        auto sw = cm_sweep(spec.s, cm_max);
        r.c_M_table = std::move(sw.table);
        r.first_unstable_M = sw.first_unstable_M;
    }
    const auto kappa = regimes::degeneracy_exponent(spec.parametrized() ? spec.omega : spec.Omega.plus_constant(-spec.Omega.eval(std::numbers::pi / 2.0)));
    if (kappa) {
        r.width_fit.kappa = *kappa;
        r.width_fit.target_exponent = -1.0 / (*kappa + 1.0);
    }
    if (!widths.empty()) {
        const auto f = width_scaling_fit(widths, r.width_fit.kappa, 1.0);
        r.width_fit.fitted_exponent = f.fitted_exponent;
        r.width_fit.intercept = f.intercept;
    }
    return r;
}

} // namespace aniso::stability
