#pragma once

#include "anglefn.hpp"

#include <cmath>
#include <string>

namespace aniso {

enum class SpecMode { direct, parametrized };

/**
 * @brief W(x) = |x|^{-s} Ω(θ) + |x|², or -ln|x| + Ω(θ) + |x|² when s = 0.
 *
 * In parametrized mode Ω = 1 + αω (Riesz) or Ω = αω (log) and the transform
 * of ω is kept separately so that α can be swept cheaply.
 */
struct PotentialSpec {
    double s = 0.4;
    SpecMode mode = SpecMode::direct;
    AngleFunction omega;       ///< ω in parametrized mode, Ω in direct mode
    double alpha = 0.0;
    std::string omega_name = "custom";
    AngleFunction Omega;       ///< full angular factor
    AngleFunction Omega_tilde; ///< its angle transform
    AngleFunction omega_hat;   ///< ω̃: normalised transform of ω (parametrized mode)

    bool is_log() const { return s == 0.0; }
    bool parametrized() const { return mode == SpecMode::parametrized; }

    /** @brief Normalising constant of the isotropic part: c_s, or (2π)^{-1} for log. */
    double base_constant() const { return is_log() ? 1.0 / (2.0 * std::numbers::pi) : specfun::c_s(s); }

    PotentialSpec with_alpha(double a) const
    {
        if (!parametrized()) throw DomainError("anglefn", "with_alpha needs a parametrized spec");
        if (!(a >= 0.0)) throw DomainError("anglefn", "alpha must be nonnegative");
        PotentialSpec r = *this;
        r.alpha = a;
        r.Omega = is_log() ? omega.scaled(a) : omega.scaled(a).plus_constant(1.0);
        const double k = base_constant();
        r.Omega_tilde = omega_hat.scaled(k * a).plus_constant(k);
        return r;
    }
};

namespace detail {

inline void check_s(double s)
{
    if (!(s >= 0.0 && s < 2.0)) throw DomainError("anglefn", "s must lie in [0,2), got " + std::to_string(s));
}

inline AngleFunction transform_for(const AngleFunction& f, double s)
{
    return s == 0.0 ? log_transform(f) : forward_transform(f, s);
}

} // namespace detail

inline PotentialSpec make_direct_spec(double s, const AngleFunction& Omega, std::string name = "custom")
{
    detail::check_s(s);
    if (s > 0.0 && !(Omega.min_value() > 0.0)) throw DomainError("anglefn", "direct mode requires min Omega > 0");
    PotentialSpec p;
    p.s = s;
    p.mode = SpecMode::direct;
    p.omega = Omega;
    p.omega_name = std::move(name);
    p.Omega = Omega;
    p.Omega_tilde = detail::transform_for(Omega, s);
    return p;
}

inline PotentialSpec make_parametrized_spec(double s, const AngleFunction& omega, double alpha, std::string name = "custom")
{
    detail::check_s(s);
    if (omega.min_value() < -1e-12) throw DomainError("anglefn", "parametrized mode requires omega >= 0");
    const double mid = omega.values()[omega.n() / 2];
    if (std::abs(mid) > 1e-12) throw DomainError("anglefn", "parametrized mode requires omega(pi/2) = 0");
    PotentialSpec p;
    p.s = s;
    p.mode = SpecMode::parametrized;
    p.omega = omega;
    p.omega_name = std::move(name);
    if (s == 0.0) {
        const double two_pi = 2.0 * std::numbers::pi;
        p.omega_hat = log_transform(omega).plus_constant(-1.0 / two_pi).scaled(two_pi);
    } else {
        p.omega_hat = forward_transform(omega, s).scaled(1.0 / specfun::c_s(s));
    }
    return p.with_alpha(alpha);
}

} // namespace aniso
