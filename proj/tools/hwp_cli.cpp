// Command-line driver: single solves (trajectory, envelope, simulate) and
// eps-sweep experiments (converge, ehrenfest, superpose, phase-check,
// moment-check).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hwp/classical.hpp"
#include "hwp/direct.hpp"
#include "hwp/envelope.hpp"
#include "hwp/errors.hpp"
#include "hwp/experiments.hpp"
#include "hwp/io.hpp"
#include "hwp/packet.hpp"

using namespace hwp;

namespace {

struct Globals {
    std::string config;
    std::string out;
    unsigned jobs = 0;
};

std::vector<double> numbers(const std::string& text, const std::string& what) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            v.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse " + what + " '" + text + "'");
        }
    }
    return v;
}

Grid1D parse_grid(const std::string& text) {
    const auto v = numbers(text, "grid");
    if (v.size() != 2) throw ConfigError("--grid expects n,L");
    return Grid1D(static_cast<std::size_t>(v[0]), v[1]);
}

// gaussian | gaussian(c,p,w) | path to a .csv or .bin field
Field initial_profile(const std::string& spec, const Grid1D& grid) {
    static const std::regex g(R"(gaussian(\(([^)]*)\))?)");
    std::smatch m;
    if (std::regex_match(spec, m, g)) {
        std::vector<double> p = m[2].matched ? numbers(m[2].str(), "gaussian parameters") : std::vector<double>{};
        p.resize(3, 0.0);
        if (!m[2].matched || p[2] == 0.0) p[2] = 1.0;
        return Field::from_function(grid, gaussian_profile(p[0], p[1], p[2]));
    }
    const std::filesystem::path file(spec);
    if (!std::filesystem::exists(file)) throw ConfigError("initial profile '" + spec + "' is neither gaussian(...) nor a file");
    Field f = file.extension() == ".bin" ? read_field_binary(spec).first : read_field_csv(spec);
    if (f.grid.n() != grid.n() || std::abs(f.grid.half_width() - grid.half_width()) > 1e-12)
        throw ConfigError("profile file grid differs from --grid");
    return f;
}

PacketSpec parse_packet(const std::string& text) {
    const auto v = numbers(text, "packet");
    if (v.size() < 2 || v.size() > 3) throw ConfigError("--packet expects x0,xi0[,width]");
    const double w = v.size() == 3 ? v[2] : 1.0;
    return {gaussian_profile(0.0, 0.0, w), v[0], v[1], w};
}

std::string with_prefix(const std::string& prefix, const std::string& name) {
    const std::filesystem::path p(prefix + name);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    return p.string();
}

void write_snapshots(const std::vector<Field>& fields, const std::vector<double>& times, const std::string& prefix,
                     bool all) {
    if (fields.empty()) return;
    if (all) {
        for (std::size_t s = 0; s < fields.size(); ++s) {
            char name[32];
            std::snprintf(name, sizeof name, "snap_%05zu.csv", s);
            write_field_csv(fields[s], with_prefix(prefix, name));
        }
    }
    write_field_csv(fields.back(), with_prefix(prefix, "final.csv"));
    write_field_binary(fields.back(), times.back(), with_prefix(prefix, "final.bin"));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiclassical Hartree wave-packet laboratory"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "experiment config (JSON)");
    app.add_option("--out", g.out, "output file (trajectory) or directory (experiments)");
    app.add_option("--jobs", g.jobs, "worker threads for eps sweeps");

    // trajectory
    std::string potential = "cos:1,1";
    double x0 = 0.0, xi0 = 1.0, t_end = 1.0, dt = 1e-3;
    auto* traj = app.add_subcommand("trajectory", "classical flow and action");
    traj->add_option("--potential", potential, "zero | linear:k | harmonic:w | inverted_harmonic:w | cos:A,k");
    traj->add_option("--x0", x0);
    traj->add_option("--xi0", xi0);
    traj->add_option("--t-end", t_end);
    traj->add_option("--dt", dt);
    std::string action_kernel;
    std::string action_regime = "alpha0";
    double action_mass = 1.0, action_eps = 1.0;
    traj->add_option("--modified-kernel", action_kernel, "also write S_mod for this smooth kernel");
    traj->add_option("--action-regime", action_regime, "alpha0 | alpha-half");
    traj->add_option("--mass-sq", action_mass);
    traj->add_option("--eps", action_eps);

    // envelope
    std::string regime = "linear", kernel = "zero", profile = "gaussian", grid_spec = "512,16", prefix = "envelope_";
    std::size_t stride = 10;
    bool all_snapshots = false;
    auto* env = app.add_subcommand("envelope", "envelope equation in the moving frame");
    env->add_option("--regime", regime, "linear | critical | alpha1 | alpha-half | alpha0");
    env->add_option("--kernel", kernel, "power_law:l,g | gaussian:A | lorentzian:A | constant:c | zero");
    env->add_option("--potential", potential);
    env->add_option("--x0", x0);
    env->add_option("--xi0", xi0);
    env->add_option("--a", profile, "gaussian(center,momentum,width) or a field file");
    env->add_option("--t-end", t_end);
    env->add_option("--dt", dt);
    env->add_option("--grid", grid_spec, "n,L");
    env->add_option("--stride", stride);
    env->add_option("--out-prefix", prefix);
    env->add_flag("--all-snapshots", all_snapshots, "write every stored snapshot as CSV");

    // simulate
    std::string frame = "rescaled", alpha_text = "critical";
    std::vector<std::string> packet_texts;
    double eps = 1.0 / 16.0;
    auto* sim = app.add_subcommand("simulate", "exact eps-dependent problem");
    sim->add_option("--frame", frame, "rescaled | physical");
    sim->add_option("--eps", eps);
    sim->add_option("--alpha", alpha_text, "value | critical | critical+d");
    sim->add_option("--packet", packet_texts, "x0,xi0[,width]; repeat for two packets");
    sim->add_option("--kernel", kernel);
    sim->add_option("--potential", potential);
    sim->add_option("--a", profile);
    sim->add_option("--t-end", t_end);
    sim->add_option("--dt", dt);
    sim->add_option("--grid", grid_spec, "n,L (physical: omit to size automatically)");
    sim->add_option("--stride", stride);
    sim->add_option("--out-prefix", prefix);
    sim->add_flag("--all-snapshots", all_snapshots);

    std::map<std::string, ExperimentKind> experiment_kinds = {{"converge", ExperimentKind::converge},
                                                              {"ehrenfest", ExperimentKind::ehrenfest},
                                                              {"superpose", ExperimentKind::superpose},
                                                              {"phase-check", ExperimentKind::phase_check},
                                                              {"moment-check", ExperimentKind::moment_check}};
    std::map<std::string, CLI::App*> experiment_cmds;
    for (const auto& [name, kind] : experiment_kinds)
        experiment_cmds[name] = app.add_subcommand(name, "eps sweep: " + name);
    bool physical_grid_given = false;

    try {
        app.parse(argc, argv);
        physical_grid_given = sim->count("--grid") > 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*traj) {
            const auto pot = PotentialSpec::parse(potential);
            auto path = accumulate_action(solve_trajectory(pot, x0, xi0, t_end, dt), pot);
            if (!action_kernel.empty()) {
                const auto r = action_regime == "alpha-half" || action_regime == "alpha_half" ? ActionRegime::alpha_half
                                                                                               : ActionRegime::alpha0;
                path = modified_action(path, KernelSpec::parse(action_kernel), action_mass, r, action_eps);
            }
            const std::string out = g.out.empty() ? "trajectory.csv" : g.out;
            write_trajectory_csv(path, out);
            std::cout << "wrote " << out << " (" << path.size() << " samples)\n";
            return 0;
        }

        if (*env) {
            const auto pot = PotentialSpec::parse(potential);
            const auto k = KernelSpec::parse(kernel);
            const auto grid = parse_grid(grid_spec);
            const Field a = initial_profile(profile, grid);
            const double pad = 10.0 * dt;
            const auto path = accumulate_action(solve_trajectory(pot, x0, xi0, t_end + 2.0 * pad, dt), pot);
            const auto Q = QuadraticPotentialTrace::from_path(path, pot, t_end + pad, dt);
            StepOptions opts;
            opts.t_end = t_end;
            opts.dt = dt;
            opts.stride = stride;
            const double m = l2_norm_sq(a);
            EnvelopeRun run;
            switch (parse_envelope_regime(regime)) {
                case EnvelopeRegime::linear: run = solve_linear_envelope(a, Q, opts); break;
                case EnvelopeRegime::critical: run = solve_hartree_envelope(a, Q, k, opts); break;
                case EnvelopeRegime::alpha1:
                    run = alpha1_envelope(solve_linear_envelope(a, Q, opts), k.smooth().k0, m);
                    break;
                case EnvelopeRegime::alpha_half:
                    run = solve_smooth_supercritical_envelope(a, Q, k, m, SupercriticalRegime::alpha_half, opts);
                    break;
                case EnvelopeRegime::alpha0:
                    run = solve_smooth_supercritical_envelope(a, Q, k, m, SupercriticalRegime::alpha0, opts);
                    break;
            }
            write_envelope_diagnostics(run, with_prefix(prefix, "diagnostics.csv"));
            write_snapshots(run.fields, run.times, prefix, all_snapshots);
            for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << "wrote " << prefix << "diagnostics.csv, max mass drift " << run.max_mass_drift() << "\n";
            return 0;
        }

        if (*sim) {
            const auto pot = PotentialSpec::parse(potential);
            const auto k = KernelSpec::parse(kernel);
            const double alpha = AlphaChoice::from_json(nlohmann::json(alpha_text)).resolve(k);
            std::vector<PacketSpec> packets;
            for (const auto& p : packet_texts) packets.push_back(parse_packet(p));
            if (packets.empty()) packets.push_back(parse_packet("0,1"));
            StepOptions opts;
            opts.t_end = t_end;
            opts.dt = dt;
            opts.stride = stride;
            DirectRun run;
            if (frame == "rescaled") {
                if (packets.size() != 1) throw ConfigError("the rescaled frame follows a single packet");
                const auto grid = parse_grid(grid_spec);
                const Field a = initial_profile(profile, grid);
                auto path = accumulate_action(solve_trajectory(pot, packets[0].x0, packets[0].xi0, t_end + 0.02, dt), pot);
                if (k.is_smooth() && alpha < 1.0) {
                    const auto r = std::abs(alpha - 0.5) < 1e-12 ? ActionRegime::alpha_half : ActionRegime::alpha0;
                    path = modified_action(path, k, l2_norm_sq(a), r, eps);
                }
                run = solve_rescaled(a, eps, alpha, pot, path, k, opts);
            } else if (frame == "physical") {
                const auto grid = physical_grid_given ? parse_grid(grid_spec) : physical_grid(packets, pot, eps, t_end);
                run = solve_physical(packets, eps, alpha, pot, k, grid, opts);
            } else {
                throw ConfigError("--frame must be rescaled or physical");
            }
            write_direct_diagnostics(run, with_prefix(prefix, "diagnostics.csv"));
            write_snapshots(run.fields, run.times, prefix, all_snapshots);
            for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << "wrote " << prefix << "diagnostics.csv, max mass drift " << run.max_mass_drift() << "\n";
            return 0;
        }

        for (const auto& [name, cmd] : experiment_cmds) {
            if (!*cmd) continue;
            nlohmann::json j = nlohmann::json::object();
            if (!g.config.empty()) {
                std::ifstream is(g.config);
                if (!is) throw ConfigError("cannot open config " + g.config);
                try {
                    j = nlohmann::json::parse(is);
                } catch (const nlohmann::json::exception& e) {
                    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
                }
            }
            auto cfg = ExperimentConfig::from_json(j);
            if (j.contains("kind") && cfg.kind != experiment_kinds.at(name))
                throw ConfigError("config kind '" + to_string(cfg.kind) + "' does not match subcommand " + name);
            cfg.kind = experiment_kinds.at(name);
            if (!g.out.empty()) cfg.out_dir = g.out;
            if (cfg.out_dir.empty()) cfg.out_dir = "out_" + name;
            if (g.jobs > 0) cfg.jobs = g.jobs;
            const auto summary = run_experiment(cfg);
            std::cout << summary.dump(2) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
