#include <aniso/json_io.hpp>
#include <aniso/odeflow.hpp>
#include <aniso/svg.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace aniso;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int exit_usage = 2;
constexpr int exit_numerical = 3;

struct SpecFlags {
    double s = 0.4;
    std::string omega = "cos2";
    double alpha = 0.0;
    std::size_t grid = 1024;
};

void add_spec_flags(CLI::App* c, SpecFlags& f, bool with_alpha = true)
{
    c->add_option("--s", f.s, "Riesz exponent in [0,2); 0 selects the logarithmic potential");
    c->add_option("--omega", f.omega, "const, cos2, cos4, cos2sin2, cos4_plus_tenth_cos2 or file:<path>");
    if (with_alpha) c->add_option("--alpha", f.alpha, "anisotropy strength");
    c->add_option("--grid", f.grid, "angle grid size (power of two)");
}

fs::path ensure_dir(const std::string& d)
{
    fs::path p(d);
    if (!p.empty()) fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream os(p);
    if (!os) throw DomainError("cli", "cannot write " + p.string());
    os << text;
}

template <class F>
void write_with(const fs::path& p, F&& f)
{
    std::ofstream os(p);
    if (!os) throw DomainError("cli", "cannot write " + p.string());
    f(os);
}

svg::PanelData panel_data(const cli::Panel& p)
{
    svg::PanelData d;
    d.points = p.positions;
    d.ellipse = p.boundary;
    d.dash_height = p.segment_half_height;
    std::ostringstream t;
    t << "s=" << io::fmt17(p.report.spec.s) << " omega=" << p.report.spec.omega << " alpha=" << io::fmt17(p.report.spec.alpha);
    d.title = t.str();
    return d;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Anisotropic interaction energies: transforms, regimes, ellipse minimizers, flows and particle runs"};
    app.require_subcommand(1);

    SpecFlags sf;
    std::string out;

    auto* transform = app.add_subcommand("transform", "angle transform of omega on the grid as CSV phi,omega_tilde");
    add_spec_flags(transform, sf, false);
    bool use_log = false;
    transform->add_flag("--log", use_log, "logarithmic transform");
    transform->add_option("--out", out, "CSV path (default stdout)");

    auto* classify = app.add_subcommand("classify", "regime report as JSON");
    add_spec_flags(classify, sf, false);
    std::vector<double> alphas{0.0};
    classify->add_option("--alpha", alphas, "one or more alpha values")->expected(1, -1);

    auto* ell = app.add_subcommand("ellipse", "ellipse minimizer JSON and boundary CSV");
    add_spec_flags(ell, sf);
    std::string ell_dir = ".";
    ell->add_option("--out", ell_dir, "output directory for ellipse.json and boundary.csv");

    auto* flow = app.add_subcommand("flow", "ellipse gradient flow trajectory CSV");
    add_spec_flags(flow, sf);
    double a0 = 1.0, b0 = 1.0, eta0 = 0.0;
    odeflow::FlowOptions fopt;
    flow->add_option("--a0", a0)->required();
    flow->add_option("--b0", b0)->required();
    flow->add_option("--eta0", eta0);
    flow->add_option("--t-end", fopt.t_end);
    flow->add_option("--tol", fopt.tol, "stop when the derivative norm falls below");
    flow->add_option("--out", out, "CSV path (default stdout)");

    auto* sim = app.add_subcommand("simulate", "particle gradient flow: snapshot CSV, metadata JSON, optional SVG");
    add_spec_flags(sim, sf);
    std::string config_path;
    std::size_t n_particles = 1600;
    std::uint64_t seed = 1;
    double energy_tol = 1e-5;
    int n_max = 20000;
    unsigned threads = 0;
    bool emit_svg = false;
    std::string sim_dir = ".";
    sim->add_option("--config", config_path, "ExperimentConfig JSON; flags override its values");
    auto* sim_n = sim->add_option("--n", n_particles, "number of particles");
    auto* sim_seed = sim->add_option("--seed", seed, "initial-condition seed");
    auto* sim_tol = sim->add_option("--energy-tol", energy_tol, "stop when |dE| falls below");
    auto* sim_nmax = sim->add_option("--n-max", n_max, "maximum accepted steps");
    auto* sim_threads = sim->add_option("--threads", threads, "worker threads (0: ANISO_THREADS or all cores)");
    auto* sim_svg = sim->add_flag("--svg", emit_svg, "also write simulation.svg");
    auto* sim_out = sim->add_option("--out", sim_dir, "output directory");

    auto* stab = app.add_subcommand("stability", "stability report JSON");
    add_spec_flags(stab, sf);
    int cm_max = 64;
    stab->add_option("--cm-max", cm_max, "largest mode of the c_M sweep");

    auto* report = app.add_subcommand("report", "merged JSON and one SVG panel per alpha");
    std::string report_config;
    std::string report_dir;
    report->add_option("--config", report_config, "ExperimentConfig JSON")->required();
    report->add_option("--out", report_dir, "output directory (overrides the config)");
    auto* rep_n = report->add_option("--n", n_particles, "number of particles");
    auto* rep_seed = report->add_option("--seed", seed, "initial-condition seed");
    auto* rep_threads = report->add_option("--threads", threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_usage;
    }

    try {
        auto spec_at = [&](double alpha) { return cli::resolve_spec(sf.s, sf.omega, alpha, sf.grid); };

        if (*transform) {
            const auto w = cli::resolve_omega(sf.omega, sf.grid);
            AngleFunction t;
            if (use_log) {
                t = log_transform(w);
            } else {
                if (!(sf.s > 0.0 && sf.s < 2.0)) throw DomainError("anglefn", "transform needs 0<s<2 (use --log for s=0)");
                t = forward_transform(w, sf.s);
            }
            if (out.empty()) io::write_transform_csv(std::cout, t);
            else write_with(out, [&](std::ostream& os) { io::write_transform_csv(os, t); });
        } else if (*classify) {
            json j = json::array();
            for (double a : alphas) j.push_back(regimes::classify(spec_at(a)));
            std::cout << io::dump17(j.size() == 1 ? j[0] : j) << '\n';
        } else if (*ell) {
            const auto spec = spec_at(sf.alpha);
            const auto sol = ellipse::solve_ellipse(spec);
            const auto dir = ensure_dir(ell_dir);
            const auto text = io::dump17(json(sol.params));
            write_text(dir / "ellipse.json", text + "\n");
            write_with(dir / "boundary.csv", [&](std::ostream& os) { io::write_boundary_csv(os, ellipse::boundary_polyline(spec, sol.params)); });
            std::cout << text << '\n';
        } else if (*flow) {
            const auto tr = odeflow::integrate_flow(spec_at(sf.alpha), a0, b0, eta0, fopt);
            if (out.empty()) io::write_trajectory_csv(std::cout, tr.states);
            else write_with(out, [&](std::ostream& os) { io::write_trajectory_csv(os, tr.states); });
            std::cerr << "odeflow: " << odeflow::stop_reason_name(tr.reason) << " after " << tr.states.size() - 1 << " steps\n";
        } else if (*sim) {
            cli::ExperimentConfig cfg;
            cfg.s = sf.s;
            cfg.omega = sf.omega;
            cfg.alpha = {sf.alpha};
            cfg.emit_svg = false;
            cfg.outputs = sim_dir;
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw DomainError("cli", "cannot open config " + config_path);
                cfg = json::parse(in).get<cli::ExperimentConfig>();
                if (sim->get_option("--s")->count()) cfg.s = sf.s;
                if (sim->get_option("--omega")->count()) cfg.omega = sf.omega;
                if (sim->get_option("--alpha")->count()) cfg.alpha = {sf.alpha};
                if (sim_out->count()) cfg.outputs = sim_dir;
            }
            if (sim_n->count() || config_path.empty()) cfg.n = n_particles;
            if (sim_seed->count()) cfg.sim.seed = seed;
            if (sim_tol->count()) cfg.sim.energy_tol = energy_tol;
            if (sim_nmax->count()) cfg.sim.n_max = n_max;
            if (sim_threads->count()) cfg.sim.threads = threads;
            if (sim_svg->count()) cfg.emit_svg = true;
            cli::validate(cfg);
            const auto spec = cli::resolve_spec(cfg.s, cfg.omega, cfg.alpha.front(), sf.grid);
            const auto res = particles::simulate(spec, particles::init_uniform(cfg.n, cfg.sim.seed), cfg.sim);
            const auto diag = particles::diagnostics(res.ensemble.positions, cfg.s);
            const auto dir = ensure_dir(cfg.outputs);
            write_with(dir / "snapshot.csv", [&](std::ostream& os) { io::write_snapshot_csv(os, res.ensemble.positions); });
            const json meta = {{"spec", cli::PanelSpec{cfg.s, cfg.omega, spec.alpha}},
                               {"n", cfg.n},
                               {"sim", cfg.sim},
                               {"simulation", cli::summarize(res, diag)},
                               {"diagnostics", diag},
                               {"rejected_steps", res.rejected_steps}};
            const auto text = io::dump17(meta);
            write_text(dir / "simulation.json", text + "\n");
            if (cfg.emit_svg) {
                cli::Panel p;
                p.report.spec = {cfg.s, cfg.omega, spec.alpha};
                p.positions = res.ensemble.positions;
                write_text(dir / "simulation.svg", svg::render(panel_data(p)));
            }
            std::cout << text << '\n';
        } else if (*stab) {
            if (cm_max < 0) throw DomainError("stability", "--cm-max must be nonnegative");
            std::cout << io::dump17(json(stability::stability_report(spec_at(sf.alpha), cm_max))) << '\n';
        } else if (*report) {
            std::ifstream in(report_config);
            if (!in) throw DomainError("cli", "cannot open config " + report_config);
            auto cfg = json::parse(in).get<cli::ExperimentConfig>();
            if (!report_dir.empty()) cfg.outputs = report_dir;
            if (rep_n->count()) cfg.n = n_particles;
            if (rep_seed->count()) cfg.sim.seed = seed;
            if (rep_threads->count()) cfg.sim.threads = threads;
            const auto panels = cli::run_report(cfg);
            const auto dir = ensure_dir(cfg.outputs);
            json merged = {{"config", cfg}, {"panels", json::array()}};
            for (std::size_t i = 0; i < panels.size(); ++i) {
                merged["panels"].push_back(panels[i].report);
                const std::string stem = "panel_" + std::to_string(i);
                write_with(dir / (stem + ".csv"), [&](std::ostream& os) { io::write_snapshot_csv(os, panels[i].positions); });
                if (cfg.emit_svg) write_text(dir / (stem + ".svg"), svg::render(panel_data(panels[i])));
            }
            write_text(dir / "report.json", io::dump17(merged) + "\n");
            std::cout << "wrote " << panels.size() << " panels to " << dir.string() << '\n';
        }
    } catch (const DomainError& e) {
        std::cerr << "aniso: " << e.what() << '\n';
        return exit_usage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "aniso: cli: invalid JSON: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "aniso: " << e.what() << '\n';
        return exit_numerical;
    }
    return 0;
}
