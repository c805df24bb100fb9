#pragma once

#include "ellipse.hpp"
#include "particles.hpp"
#include "regimes.hpp"
#include "stability.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace aniso::cli {

/**
 * @brief Read π-periodic samples on φ_j = jπ/n from a text file.
 *
 * One value per line, or "phi,value" pairs; a non-numeric first line is
 * skipped as a header. The sample count must be a power of two.
 */
inline AngleFunction load_grid_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw DomainError("cli", "cannot open angle grid file " + path);
    std::vector<double> v;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
        try {
            std::size_t used = 0;
            v.push_back(std::stod(field, &used));
        } catch (const std::exception&) {
            if (!first) throw DomainError("cli", "bad number in " + path + ": " + line);
        }
        first = false;
    }
    return AngleFunction::from_values(std::move(v));
}

/** @brief Angle function by name: const, cos2, cos4, cos2sin2, cos4_plus_tenth_cos2 or file:<path>. */
inline AngleFunction resolve_omega(const std::string& name, std::size_t n = 1024)
{
    if (name.rfind("file:", 0) == 0) return load_grid_file(name.substr(5));
    const auto b = parse_builtin(name);
    if (!b || *b == Builtin::custom)
        throw DomainError("cli", "unknown omega '" + name + "' (const, cos2, cos4, cos2sin2, cos4_plus_tenth_cos2, file:<path>)");
    return AngleFunction::builtin(*b, n);
}

/**
 * @brief Spec for a named angle function: Ω = 1 + αω (αω for s = 0) when ω ≥ 0
 * vanishes at π/2, otherwise Ω itself in direct mode.
 */
inline PotentialSpec resolve_spec(double s, const std::string& name, double alpha, std::size_t n = 1024)
{
    const auto w = resolve_omega(name, n);
    const double mid = w.values()[w.n() / 2];
    if (w.min_value() >= -1e-12 && std::abs(mid) <= 1e-12 && w.max_abs() > 0.0)
        return make_parametrized_spec(s, w, alpha, name);
    return make_direct_spec(s, w, name);
}

struct PanelSpec {
    double s = 0.4;
    std::string omega = "cos2";
    double alpha = 0.0;
};

struct SimulationSummary {
    std::uint64_t seed = 1;
    int steps = 0;
    double final_energy = 0.0;
    double width = 0.0;
    double height = 0.0;
    double support_radius = 0.0;
    std::string termination = "max_steps";
};

inline SimulationSummary summarize(const particles::SimResult& r, const particles::Diagnostics& d)
{
    return {r.ensemble.rng_seed, r.ensemble.step_count, r.ensemble.energy, d.width, d.height, d.support_radius,
            particles::termination_name(r.termination)};
}

struct ExperimentConfig {
    double s = 0.4;
    std::string omega = "cos2";
    std::vector<double> alpha{0.0};
    particles::SimConfig sim;
    std::size_t n = 1600;
    int cm_max = 64;
    std::string outputs = "out";
    bool emit_svg = true;
};

inline void validate(const ExperimentConfig& c)
{
    if (c.alpha.empty()) throw DomainError("cli", "alpha list must be nonempty");
    if (!(c.s >= 0.0 && c.s < 2.0)) throw DomainError("cli", "s must lie in [0,2)");
    for (double a : c.alpha)
        if (!(a >= 0.0)) throw DomainError("cli", "alpha values must be nonnegative");
    if (c.n < 2) throw DomainError("cli", "need at least two particles");
    if (c.cm_max < 0) throw DomainError("cli", "cm_max must be nonnegative");
    particles::validate(c.sim);
}

struct PanelReport {
    PanelSpec spec;
    regimes::RegimeReport regime;
    std::optional<ellipse::EllipseParams> ellipse;
    std::optional<stability::StabilityReport> stability;
    std::optional<SimulationSummary> simulation;
};

struct Panel {
    PanelReport report;
    std::vector<particles::Vec2> positions;
    std::vector<std::array<double, 2>> boundary; ///< predicted support, empty without an ellipse
    double segment_half_height = std::numeric_limits<double>::quiet_NaN(); ///< R₁ of ρ₁D
};

/** @brief Regime, ellipse, stability and one particle run at a single α. */
inline Panel run_panel(const ExperimentConfig& cfg, double alpha, unsigned threads, bool simulate = true)
{
    const auto spec = resolve_spec(cfg.s, cfg.omega, alpha);
    Panel p;
    p.report.spec = {cfg.s, cfg.omega, spec.alpha};
    p.report.regime = regimes::classify(spec);
    if (p.report.regime.lic) {
        try {
            const auto sol = ellipse::solve_ellipse(spec);
            p.report.ellipse = sol.params;
            p.boundary = ellipse::boundary_polyline(spec, sol.params);
        } catch (const NumericalError&) {
        }
    }
    if (cfg.s > 0.0 && cfg.s < 1.0) p.report.stability = stability::stability_report(spec, cfg.cm_max);
    const auto pc = specfun::profile_constants(cfg.s);
    if (pc.has_1d) p.segment_half_height = pc.R1;
    if (simulate) {
        auto sc = cfg.sim;
        sc.threads = threads;
        const auto res = particles::simulate(spec, particles::init_uniform(cfg.n, cfg.sim.seed), sc);
        p.positions = res.ensemble.positions;
        p.report.simulation = summarize(res, particles::diagnostics(p.positions, cfg.s, false));
    }
    return p;
}

/** @brief All α panels as concurrent jobs; widths of concentrating panels are fitted when three or more exist. */
inline std::vector<Panel> run_report(const ExperimentConfig& cfg, bool simulate = true)
{
    validate(cfg);
    const std::size_t P = cfg.alpha.size();
    const unsigned T = particles::thread_count(cfg.sim.threads);
    const unsigned jobs = std::max(1u, std::min<unsigned>(T, static_cast<unsigned>(P)));
    const unsigned per = std::max(1u, T / jobs);
    std::vector<Panel> out(P);
    for (std::size_t start = 0; start < P; start += jobs) {
        std::vector<std::future<Panel>> fs;
        for (std::size_t i = start; i < std::min(P, start + jobs); ++i)
            fs.push_back(std::async(std::launch::async, [&cfg, i, per, simulate] { return run_panel(cfg, cfg.alpha[i], per, simulate); }));
        for (std::size_t i = start; i < std::min(P, start + jobs); ++i) out[i] = fs[i - start].get();
    }
    std::vector<std::pair<double, double>> widths;
    for (const auto& p : out)
        if (p.report.simulation && p.report.regime.regime == regimes::Regime::nonLIC_concentrating && p.report.spec.alpha > 0.0)
            widths.emplace_back(p.report.spec.alpha, p.report.simulation->width);
    if (widths.size() >= 3) {
        for (auto& p : out) {
            if (!p.report.stability) continue;
            auto& wf = p.report.stability->width_fit;
            try {
                const auto f = stability::width_scaling_fit(widths, wf.kappa, 1.0);
                wf.fitted_exponent = f.fitted_exponent;
                wf.intercept = f.intercept;
            } catch (const NumericalError&) {
            }
        }
    }
    return out;
}

} // namespace aniso::cli
