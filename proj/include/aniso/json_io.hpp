#pragma once

#include "experiment.hpp"
#include "odeflow.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace aniso::io {

using json = nlohmann::json;

inline std::string fmt17(double v)
{
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void write(std::ostream& os, const json& j, int indent, int depth)
{
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) { os << "{}"; break; }
        os << '{' << nl;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) os << ',' << nl;
            first = false;
            os << pad << json(it.key()).dump() << (indent > 0 ? ": " : ":");
            write(os, it.value(), indent, depth + 1);
        }
        os << nl << close << '}';
        break;
    }
    case json::value_t::array: {
        if (j.empty()) { os << "[]"; break; }
        os << '[' << nl;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) os << ',' << nl;
            os << pad;
            write(os, j[i], indent, depth + 1);
        }
        os << nl << close << ']';
        break;
    }
    case json::value_t::number_float: os << fmt17(j.get<double>()); break;
    default: os << j.dump(); break;
    }
}

} // namespace detail

/** @brief JSON text with every float at 17 significant digits and non-finite values as null. */
inline std::string dump17(const json& j, int indent = 2)
{
    std::ostringstream os;
    detail::write(os, j, indent, 0);
    return os.str();
}

/** @brief Real field where null stands for @p if_null (infinities and NaN are written as null). */
inline double get_real(const json& j, const char* key, double if_null)
{
    const auto& v = j.at(key);
    if (v.is_null()) return if_null;
    if (!v.is_number()) throw DomainError("cli", std::string("field ") + key + " must be a number or null");
    return v.get<double>();
}

template <class T>
json optional_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

template <class T>
void read_if(const json& j, const char* key, T& out)
{
    if (j.contains(key)) j.at(key).get_to(out);
}

inline void write_csv_rows(std::ostream& os, const std::string& header, const std::vector<std::vector<double>>& rows)
{
    os << header << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt17(r[i]);
        os << '\n';
    }
}

/** @brief Parse a CSV with a header line into its header and numeric rows. */
inline std::pair<std::string, std::vector<std::vector<double>>> read_csv(std::istream& is)
{
    std::string header, line;
    std::getline(is, header);
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            r.push_back(cell == "null" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
        rows.push_back(std::move(r));
    }
    return {header, rows};
}

inline void write_snapshot_csv(std::ostream& os, const std::vector<particles::Vec2>& pts)
{
    std::vector<std::vector<double>> rows;
    for (const auto& p : pts) rows.push_back({p.x, p.y});
    write_csv_rows(os, "x1,x2", rows);
}

inline void write_boundary_csv(std::ostream& os, const std::vector<std::array<double, 2>>& pts)
{
    std::vector<std::vector<double>> rows;
    for (const auto& p : pts) rows.push_back({p[0], p[1]});
    write_csv_rows(os, "x1,x2", rows);
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<odeflow::FlowState>& states)
{
    std::vector<std::vector<double>> rows;
    for (const auto& s : states) rows.push_back({s.t, s.a, s.b, s.eta, s.energy, s.derivative_norm});
    write_csv_rows(os, "t,a,b,eta,energy,dnorm", rows);
}

inline void write_transform_csv(std::ostream& os, const AngleFunction& f)
{
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < f.n(); ++j) rows.push_back({f.node(j), f.values()[j]});
    write_csv_rows(os, "phi,omega_tilde", rows);
}

} // namespace aniso::io

namespace aniso::regimes {

inline void to_json(nlohmann::json& j, const RegimeReport& r)
{
    j = {{"s", r.s},
         {"alpha", r.alpha},
         {"alpha_L", r.alpha_L},
         {"alpha_L0", r.alpha_L0},
         {"regime", regime_name(r.regime)},
         {"lic", r.lic},
         {"omega_tilde_min", r.omega_tilde_min},
         {"argmin_phi", r.argmin_phi},
         {"argmin_set", r.argmin_set},
         {"zigzag_angle", io::optional_json(r.zigzag_angle)},
         {"kappa", io::optional_json(r.kappa)},
         {"rho1d_never_local_min", r.rho1d_never_local_min},
         {"alpha_star", r.alpha_star},
         {"alpha_star_lower_bound", r.alpha_star_lower_bound}};
}

inline void from_json(const nlohmann::json& j, RegimeReport& r)
{
    r.s = j.at("s").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.alpha_L = io::get_real(j, "alpha_L", inf);
    r.alpha_L0 = io::get_real(j, "alpha_L0", inf);
    const auto name = j.at("regime").get<std::string>();
    const auto reg = parse_regime(name);
    if (!reg) throw DomainError("cli", "unknown regime '" + name + "'");
    r.regime = *reg;
    r.lic = j.at("lic").get<bool>();
    r.omega_tilde_min = j.at("omega_tilde_min").get<double>();
    r.argmin_phi = j.at("argmin_phi").get<double>();
    r.argmin_set = j.at("argmin_set").get<std::vector<double>>();
    r.zigzag_angle = io::optional_from<double>(j, "zigzag_angle");
    r.kappa = io::optional_from<double>(j, "kappa");
    r.rho1d_never_local_min = j.at("rho1d_never_local_min").get<bool>();
    r.alpha_star = j.at("alpha_star").get<std::string>();
    r.alpha_star_lower_bound = io::get_real(j, "alpha_star_lower_bound", inf);
}

} // namespace aniso::regimes

namespace aniso::ellipse {

inline void to_json(nlohmann::json& j, const EllipseParams& p)
{
    j = {{"a", p.a}, {"b", p.b}, {"eta", p.eta}, {"degenerate", p.degenerate}};
}

inline void from_json(const nlohmann::json& j, EllipseParams& p)
{
    p.a = j.at("a").get<double>();
    p.b = j.at("b").get<double>();
    p.eta = j.at("eta").get<double>();
    p.degenerate = j.at("degenerate").get<bool>();
}

inline void to_json(nlohmann::json& j, const QuadCoeffs& c) { j = {{"A", c.A}, {"B", c.B}, {"D", c.D}}; }

inline void from_json(const nlohmann::json& j, QuadCoeffs& c)
{
    c.A = j.at("A").get<double>();
    c.B = j.at("B").get<double>();
    c.D = j.at("D").get<double>();
}

inline void to_json(nlohmann::json& j, const Solution& s)
{
    j = {{"params", s.params}, {"coeffs", s.coeffs}, {"roots", s.roots}, {"residual", s.residual}};
}

inline void from_json(const nlohmann::json& j, Solution& s)
{
    s.params = j.at("params").get<EllipseParams>();
    s.coeffs = j.at("coeffs").get<QuadCoeffs>();
    s.roots = j.at("roots").get<std::vector<EllipseParams>>();
    s.residual = j.at("residual").get<double>();
}

} // namespace aniso::ellipse

namespace aniso::odeflow {

inline void to_json(nlohmann::json& j, const FlowState& s)
{
    j = {{"t", s.t}, {"a", s.a}, {"b", s.b}, {"eta", s.eta}, {"energy", s.energy}, {"derivative_norm", s.derivative_norm}};
}

inline void from_json(const nlohmann::json& j, FlowState& s)
{
    s.t = j.at("t").get<double>();
    s.a = j.at("a").get<double>();
    s.b = j.at("b").get<double>();
    s.eta = j.at("eta").get<double>();
    s.energy = j.at("energy").get<double>();
    s.derivative_norm = j.at("derivative_norm").get<double>();
}

} // namespace aniso::odeflow

namespace aniso::stability {

inline void to_json(nlohmann::json& j, const WidthFit& f)
{
    j = {{"kappa", f.kappa}, {"fitted_exponent", f.fitted_exponent}, {"target_exponent", f.target_exponent}, {"intercept", f.intercept}};
}

inline void from_json(const nlohmann::json& j, WidthFit& f)
{
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    f.kappa = io::get_real(j, "kappa", nan);
    f.fitted_exponent = io::get_real(j, "fitted_exponent", nan);
    f.target_exponent = io::get_real(j, "target_exponent", nan);
    f.intercept = io::get_real(j, "intercept", nan);
}

inline void to_json(nlohmann::json& j, const StabilityReport& r)
{
    auto table = nlohmann::json::array();
    for (auto [M, c] : r.c_M_table) table.push_back({{"M", M}, {"c", c}});
    j = {{"vertical_defect_coeff", r.vertical_defect_coeff},
         {"vertical_excluded", r.vertical_excluded},
         {"c_M_table", table},
         {"first_unstable_M", io::optional_json(r.first_unstable_M)},
         {"width_fit", r.width_fit}};
}

inline void from_json(const nlohmann::json& j, StabilityReport& r)
{
    r.vertical_defect_coeff = j.at("vertical_defect_coeff").get<double>();
    r.vertical_excluded = j.at("vertical_excluded").get<bool>();
    r.c_M_table.clear();
    for (const auto& e : j.at("c_M_table")) r.c_M_table.emplace_back(e.at("M").get<int>(), e.at("c").get<double>());
    r.first_unstable_M = io::optional_from<int>(j, "first_unstable_M");
    r.width_fit = j.at("width_fit").get<WidthFit>();
}

} // namespace aniso::stability

namespace aniso::particles {

inline void to_json(nlohmann::json& j, const SimConfig& c)
{
    j = {{"energy_tol", c.energy_tol},
         {"n_max", c.n_max},
         {"dt0", c.dt0},
         {"dt_min", c.dt_min},
         {"dt_max", c.dt_max},
         {"growth", c.growth},
         {"max_halvings", c.max_halvings},
         {"min_distance", c.min_distance},
         {"deterministic_reduction", c.deterministic_reduction},
         {"threads", c.threads},
         {"seed", c.seed}};
}

/** @brief Missing keys keep their defaults so that config files may be partial. */
inline void from_json(const nlohmann::json& j, SimConfig& c)
{
    io::read_if(j, "energy_tol", c.energy_tol);
    io::read_if(j, "n_max", c.n_max);
    io::read_if(j, "dt0", c.dt0);
    io::read_if(j, "dt_min", c.dt_min);
    io::read_if(j, "dt_max", c.dt_max);
    io::read_if(j, "growth", c.growth);
    io::read_if(j, "max_halvings", c.max_halvings);
    io::read_if(j, "min_distance", c.min_distance);
    io::read_if(j, "deterministic_reduction", c.deterministic_reduction);
    io::read_if(j, "threads", c.threads);
    io::read_if(j, "seed", c.seed);
}

inline void to_json(nlohmann::json& j, const Diagnostics& d)
{
    j = {{"width", d.width},
         {"height", d.height},
         {"support_radius", d.support_radius},
         {"support_bound", d.support_bound},
         {"fitted_segment_slopes", d.fitted_segment_slopes}};
}

inline void from_json(const nlohmann::json& j, Diagnostics& d)
{
    d.width = j.at("width").get<double>();
    d.height = j.at("height").get<double>();
    d.support_radius = j.at("support_radius").get<double>();
    d.support_bound = io::get_real(j, "support_bound", std::numeric_limits<double>::quiet_NaN());
    d.fitted_segment_slopes = j.at("fitted_segment_slopes").get<std::vector<double>>();
}

} // namespace aniso::particles

namespace aniso::cli {

inline void to_json(nlohmann::json& j, const PanelSpec& p) { j = {{"s", p.s}, {"omega", p.omega}, {"alpha", p.alpha}}; }

inline void from_json(const nlohmann::json& j, PanelSpec& p)
{
    p.s = j.at("s").get<double>();
    p.omega = j.at("omega").get<std::string>();
    p.alpha = j.at("alpha").get<double>();
}

inline void to_json(nlohmann::json& j, const SimulationSummary& s)
{
    j = {{"seed", s.seed},
         {"steps", s.steps},
         {"final_energy", s.final_energy},
         {"width", s.width},
         {"height", s.height},
         {"support_radius", s.support_radius},
         {"termination", s.termination}};
}

inline void from_json(const nlohmann::json& j, SimulationSummary& s)
{
    s.seed = j.at("seed").get<std::uint64_t>();
    s.steps = j.at("steps").get<int>();
    s.final_energy = j.at("final_energy").get<double>();
    s.width = j.at("width").get<double>();
    s.height = j.at("height").get<double>();
    s.support_radius = j.at("support_radius").get<double>();
    s.termination = j.at("termination").get<std::string>();
    if (s.termination != "converged" && s.termination != "max_steps" && s.termination != "stalled")
        throw DomainError("cli", "unknown termination '" + s.termination + "'");
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c)
{
    j = {{"spec", {{"s", c.s}, {"omega", c.omega}, {"alpha", c.alpha}}},
         {"sim", c.sim},
         {"n", c.n},
         {"cm_max", c.cm_max},
         {"outputs", c.outputs},
         {"emit_svg", c.emit_svg}};
}

/** @brief spec.s, spec.omega and spec.alpha are required; a scalar alpha is a one-element list. */
inline void from_json(const nlohmann::json& j, ExperimentConfig& c)
{
    const auto& sp = j.at("spec");
    c.s = sp.at("s").get<double>();
    c.omega = sp.at("omega").get<std::string>();
    const auto& a = sp.at("alpha");
    c.alpha = a.is_array() ? a.get<std::vector<double>>() : std::vector<double>{a.get<double>()};
    if (j.contains("sim")) from_json(j.at("sim"), c.sim);
    io::read_if(j, "n", c.n);
    io::read_if(j, "cm_max", c.cm_max);
    io::read_if(j, "outputs", c.outputs);
    io::read_if(j, "emit_svg", c.emit_svg);
}

inline void to_json(nlohmann::json& j, const PanelReport& r)
{
    j = {{"spec", r.spec},
         {"regime", r.regime},
         {"ellipse", io::optional_json(r.ellipse)},
         {"stability", io::optional_json(r.stability)},
         {"simulation", io::optional_json(r.simulation)}};
}

inline void from_json(const nlohmann::json& j, PanelReport& r)
{
    r.spec = j.at("spec").get<PanelSpec>();
    r.regime = j.at("regime").get<regimes::RegimeReport>();
    if (!j.contains("ellipse") || !j.contains("stability") || !j.contains("simulation"))
        throw DomainError("cli", "report needs ellipse, stability and simulation keys");
    r.ellipse = io::optional_from<ellipse::EllipseParams>(j, "ellipse");
    r.stability = io::optional_from<stability::StabilityReport>(j, "stability");
    r.simulation = io::optional_from<SimulationSummary>(j, "simulation");
}

} // namespace aniso::cli
