#pragma once

#include "ellipse.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace aniso::odeflow {

struct FlowState {
    double t = 0.0;
    double a = 1.0, b = 1.0, eta = 0.0;
    double energy = 0.0;          ///< 𝓔(a, b) at the current η
    double derivative_norm = 0.0; ///< √(a'² + b'² + (a b η')²)
};

struct Energy {
    double calE = 0.0; ///< 𝓔 = 𝓜 + (s/2)(a² + b²)
    double E = 0.0;    ///< physical interaction energy E[ρ_{a,b,η}]
};

inline void require_flow_branch(double s)
{
    if (!(s > 0.0 && s < 1.0)) throw BranchError("odeflow", "the ellipse energy is defined for 0<s<1");
}

inline Energy ellipse_energy(const PotentialSpec& spec, double a, double b, double eta = 0.0)
{
    require_flow_branch(spec.s);
    if (!(a > 0.0 && b > 0.0)) throw DomainError("odeflow", "ellipse_energy needs a,b>0");
    const auto pc = specfun::profile_constants(spec.s);
    const double e = ellipse::calE(spec.Omega_tilde.shifted(eta), spec.s, a, b);
    const double r = pc.R1 / pc.R2;
    return {e, pc.V1 * e / (r * r * (2.0 + spec.s))};
}

struct Rates {
    double da = 0.0, db = 0.0, deta = 0.0;
    ellipse::QuadCoeffs c;
};

/** @brief Right-hand side a' = 2(A-1)a, b' = 2(B-1)b, η' = 2D(a²+b²)/(a²-b²). */
inline Rates rates(const PotentialSpec& spec, double a, double b, double eta)
{
    if (!(a > 0.0 && b > 0.0)) throw NumericalError("odeflow", "ellipse axis left (0,inf)");
    Rates r;
    r.c = ellipse::quad_coeffs(spec, a, b, eta);
    r.da = 2.0 * (r.c.A - 1.0) * a;
    r.db = 2.0 * (r.c.B - 1.0) * b;
    const double a2 = a * a, b2 = b * b;
    if (!spec.Omega.symmetric() && std::abs(a2 - b2) >= 1e-8 * (a2 + b2)) r.deta = 2.0 * r.c.D * (a2 + b2) / (a2 - b2);
    return r;
}

inline double derivative_norm(const Rates& r, double a, double b)
{
    const double e = a * b * r.deta;
    return std::sqrt(r.da * r.da + r.db * r.db + e * e);
}

inline FlowState make_state(const PotentialSpec& spec, double t, double a, double b, double eta)
{
    FlowState st{t, a, b, eta, 0.0, 0.0};
    st.energy = ellipse_energy(spec, a, b, eta).calE;
    st.derivative_norm = derivative_norm(rates(spec, a, b, eta), a, b);
    return st;
}

/** @brief One classical RK4 step of size @p dt. */
inline FlowState step_flow(const PotentialSpec& spec, const FlowState& s0, double dt)
{
    auto f = [&](double a, double b, double e) { return rates(spec, a, b, e); };
    const auto k1 = f(s0.a, s0.b, s0.eta);
    const auto k2 = f(s0.a + 0.5 * dt * k1.da, s0.b + 0.5 * dt * k1.db, s0.eta + 0.5 * dt * k1.deta);
    const auto k3 = f(s0.a + 0.5 * dt * k2.da, s0.b + 0.5 * dt * k2.db, s0.eta + 0.5 * dt * k2.deta);
    const auto k4 = f(s0.a + dt * k3.da, s0.b + dt * k3.db, s0.eta + dt * k3.deta);
    const double a = s0.a + dt / 6.0 * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
    const double b = s0.b + dt / 6.0 * (k1.db + 2.0 * k2.db + 2.0 * k3.db + k4.db);
    const double e = s0.eta + dt / 6.0 * (k1.deta + 2.0 * k2.deta + 2.0 * k3.deta + k4.deta);
    if (!(a > 0.0 && b > 0.0)) throw NumericalError("odeflow", "RK4 step left the positive quadrant");
    return make_state(spec, s0.t + dt, a, b, e);
}

struct FlowOptions {
    double t_end = 50.0;
    double tol = 1e-10;
    double dt0 = 1e-2;
    double dt_max = 0.1;
    double growth = 1.2;
    int max_halvings = 60;
    bool adaptive = true; ///< false: fixed steps of dt0 without energy control
};

enum class StopReason { converged, t_end, energy_resolution };

inline std::string stop_reason_name(StopReason r)
{
    switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::t_end: return "t_end";
    case StopReason::energy_resolution: return "energy_resolution";
    }
    return "unknown";
}

struct Trajectory {
    std::vector<FlowState> states;
    StopReason reason = StopReason::t_end;
    int rejected_steps = 0;
};

inline Trajectory integrate_flow(const PotentialSpec& spec, double a0, double b0, double eta0 = 0.0, const FlowOptions& opt = {})
{
    require_flow_branch(spec.s);
    if (!(a0 > 0.0 && b0 > 0.0)) throw DomainError("odeflow", "initial axes must be positive");
    Trajectory tr;
    tr.states.push_back(make_state(spec, 0.0, a0, b0, eta0));
    double dt = opt.dt0;
    while (true) {
        const auto& cur = tr.states.back();
        if (cur.derivative_norm < opt.tol) { tr.reason = StopReason::converged; break; }
        if (cur.t >= opt.t_end - 1e-12) { tr.reason = StopReason::t_end; break; }
        const double h = std::min(dt, opt.t_end - cur.t);
        if (!opt.adaptive) {
            tr.states.push_back(step_flow(spec, cur, h));
            continue;
        }
        bool accepted = false;
        for (int k = 0; k <= opt.max_halvings; ++k) {
            const double hk = h * std::ldexp(1.0, -k);
            const auto next = step_flow(spec, cur, hk);
            if (next.energy < cur.energy) {
                tr.states.push_back(next);
                dt = std::min(hk * opt.growth, opt.dt_max);
                accepted = true;
                break;
            }
            ++tr.rejected_steps;
            // the predicted decrease is below the resolution of 𝓔
            const double predicted = hk * cur.derivative_norm * cur.derivative_norm * spec.s / 2.0;
            if (predicted < 4.0 * std::numeric_limits<double>::epsilon() * std::abs(cur.energy)) break;
        }
        if (!accepted) { tr.reason = StopReason::energy_resolution; break; }
    }
    return tr;
}

} // namespace aniso::odeflow
