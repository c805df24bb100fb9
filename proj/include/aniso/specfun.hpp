#pragma once

#include "errors.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace aniso::specfun {

inline constexpr double pi = std::numbers::pi;

/** @brief Gamma function, Lanczos approximation with g = 7 and nine terms. */
inline double gamma(double x)
{
    static constexpr std::array<double, 9> p{
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5) return pi / (std::sin(pi * x) * gamma(1.0 - x));
    x -= 1.0;
    double a = p[0];
    const double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += p[i] / (x + i);
    return std::sqrt(2.0 * pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

inline double beta(double a, double b) { return gamma(a) * gamma(b) / gamma(a + b); }

/** @brief γ_s = ∫_{-π}^{π} |cos θ|^s dθ, continued analytically below s = -1. */
inline double gamma_s(double s)
{
    if (s <= -2.0 || s == -1.0) throw DomainError("specfun", "gamma_s undefined at s=" + std::to_string(s));
    return 2.0 * std::sqrt(pi) * gamma(0.5 * (s + 1.0)) / gamma(0.5 * (s + 2.0));
}

/** @brief Fourier constant of |x|^{-s} in the plane: F = c_s |ξ|^{s-2}. */
inline double c_s(double s)
{
    if (s == 1.0) return 1.0;
    return std::pow(pi, s - 1.0) * gamma(0.5 * (2.0 - s)) / gamma(0.5 * s);
}

inline double tau_s(double s)
{
    if (s == 1.0) return 0.0;
    if (s == 2.0) return -1.0 / (4.0 * pi * pi);
    return std::pow(2.0 * pi, -s) * gamma(s) * std::cos(0.5 * s * pi);
}

/** @brief τ_s R_1^{2+s}, finite on the whole range 0 < s < 2. */
inline double tau_extended(double s)
{
    return std::pow(2.0 * pi, -s) * gamma(s) * s * (s + 1.0) * pi
           / (2.0 * beta(0.5, 0.5 * (3.0 + s)));
}

struct RieszConstants {
    double s;
    double gamma_s;
    double c_s;
    double tau_s;
    double tau_extended;
};

inline RieszConstants riesz_constants(double s)
{
    if (!(s > 0.0 && s < 2.0)) throw DomainError("specfun", "riesz_constants needs 0<s<2");
    return {s, gamma_s(s), c_s(s), tau_s(s), tau_extended(s)};
}

struct ProfileConstants {
    double s = 0.0;
    bool has_1d = false;
    double R1 = 0.0, C1 = 0.0;
    double R2 = 0.0, C2 = 0.0;
    double V1 = 0.0;
};

inline ProfileConstants profile_constants(double s)
{
    if (!(s >= 0.0 && s < 2.0)) throw DomainError("specfun", "profile_constants needs 0<=s<2");
    ProfileConstants p;
    p.s = s;
    if (s == 0.0) {
        p.has_1d = true;
        p.R1 = 1.0;
        p.C1 = 2.0 / pi;
        p.R2 = std::sqrt(0.5);
        p.C2 = 2.0 / pi;
        p.V1 = 0.75 + std::numbers::ln2;
        return p;
    }
    const double sn = std::sin(0.5 * s * pi);
    p.C2 = 4.0 * sn / (s * s * pi * pi);
    p.R2 = std::pow(8.0 * sn / (s * s * (2.0 + s) * pi), 1.0 / (-s - 2.0));
    if (s < 1.0) {
        p.has_1d = true;
        p.C1 = 2.0 * std::cos(0.5 * s * pi) / (s * (s + 1.0) * pi);
        p.R1 = std::pow(p.C1 * beta(0.5, 0.5 * (3.0 + s)), 1.0 / (-s - 2.0));
        p.V1 = p.R1 * p.R1 * (1.0 / s + 1.0 / (4.0 + s));
    }
    return p;
}

inline const ProfileConstants& require_1d(const ProfileConstants& p)
{
    if (!p.has_1d) throw BranchError("specfun", "1D profile constants exist only for 0<=s<1");
    return p;
}

/** @brief ρ_1(x) = C_1 (R_1² - x²)_+^{(1+s)/2}. */
inline double eval_rho1(const ProfileConstants& p, double x)
{
    require_1d(p);
    const double q = p.R1 * p.R1 - x * x;
    return q > 0.0 ? p.C1 * std::pow(q, 0.5 * (1.0 + p.s)) : 0.0;
}

inline double eval_rho1(double s, double x) { return eval_rho1(profile_constants(s), x); }

/** @brief ρ_2(x) = C_2 (R_2² - |x|²)_+^{s/2}; the indicator profile when s = 0. */
inline double eval_rho2(const ProfileConstants& p, double x1, double x2)
{
    const double q = p.R2 * p.R2 - x1 * x1 - x2 * x2;
    if (q <= 0.0) return 0.0;
    return p.s == 0.0 ? p.C2 : p.C2 * std::pow(q, 0.5 * p.s);
}

inline double eval_rho2(double s, double x1, double x2) { return eval_rho2(profile_constants(s), x1, x2); }

} // namespace aniso::specfun
