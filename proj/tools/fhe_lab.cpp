// fhe_lab: experiment driver for the family Hermite-Einstein testbed.
//
// Subcommands: verify | flow | dirichlet | adiabatic | nu | report.
// Every run writes manifest.json (config echo, seed, code version, wall time)
// into the output directory. Exit codes: 0 success, 1 check/run failure,
// 2 usage or configuration error.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fhe/checks.hpp"
#include "fhe/config.hpp"
#include "fhe/errors.hpp"
#include "fhe/presets.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    long seed_override = -1;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "path to the run configuration file");
    cmd->add_option("--out", args.out_override, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed_override, "seed override for random test fields");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

fhe::RunConfig load_config(const CommonArgs& args) {
    fhe::RunConfig cfg =
        args.config_path.empty() ? fhe::RunConfig{} : fhe::RunConfig::from_file(args.config_path);
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    if (args.seed_override >= 0) cfg.seed = static_cast<uint64_t>(args.seed_override);
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

void write_manifest(const fhe::RunConfig& cfg, const std::string& command, double wall_s) {
    json m;
    m["command"] = command;
    m["config"] = cfg.to_text();
    m["seed"] = cfg.seed;
    m["code_version"] = kVersion;
    m["wall_time_s"] = wall_s;
    write_text(fs::path(cfg.out_dir) / "manifest.json", m.dump(2) + "\n");
}

fhe::DeformationPreset build_preset(const fhe::RunConfig& cfg, const fhe::ProductGrid& g) {
    if (cfg.preset == "custom_constant") {
        if (cfg.custom_matrix.empty())
            throw fhe::ConfigError("preset custom_constant requires custom_matrix");
        json jm = json::parse(cfg.custom_matrix);
        int r = static_cast<int>(jm.size());
        Eigen::MatrixXcd M(r, r);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
                M(i, j) = fhe::cd(jm.at(i).at(j).at(0).get<double>(),
                                  jm.at(i).at(j).at(1).get<double>());
        fhe::DeformationPreset ps;
        ps.name = cfg.preset;
        ps.a.aV = fhe::constant_field(g, M, fhe::Degree::Dzb);
        ps.a.gauge_fixed = true;
        fhe::SeparableDeformation sep;
        fhe::MatrixField one(g, 1);
        for (long p = 0; p < g.n_points(); ++p) one.at(p)(0, 0) = 1.0;
        sep.profiles.push_back(one);
        sep.mats.push_back(M);
        ps.a.sep = sep;
        ps.a.commutant_dim = fhe::commutant_dim(ps.a.aV);
        ps.aH = fhe::MatrixField(g, static_cast<int>(M.rows()), fhe::Degree::Dwb);
        return ps;
    }
    return fhe::make_preset(cfg.preset, g, cfg.eps, cfg.eps_h, cfg.delta);
}

fhe::BaseField build_initial(const fhe::RunConfig& cfg, const fhe::ProductGrid& g) {
    fhe::BaseField u(g, 2);
    if (cfg.initial == "identity") return u;
    if (cfg.initial == "random_hermitian") {
        fhe::RandomFields rng(cfg.seed);
        u = rng.base_hermitian(g, 2);
        for (long pb = 0; pb < g.n_base(); ++pb) u.at(pb) *= fhe::cd(cfg.init_amplitude, 0.0);
        if (g.has_boundary())  // keep the boundary data exactly the identity
            for (long pb = 0; pb < g.n_base(); ++pb)
                if (g.base_boundary(pb)) u.at(pb).setZero();
        return u;
    }
    if (cfg.initial == "diag_wave") {
        // u = amp * profile(b) * diag(1,-1); vanishes on the annulus boundary
        for (long pb = 0; pb < g.n_base(); ++pb) {
            double x = g.base_x(pb), y = g.base_y(pb);
            double prof = g.has_boundary() ? std::sin(M_PI * y) * std::cos(2.0 * M_PI * x)
                                           : std::cos(2.0 * M_PI * y);
            u.at(pb)(0, 0) = cfg.init_amplitude * prof;
            u.at(pb)(1, 1) = -cfg.init_amplitude * prof;
        }
        return u;
    }
    if (cfg.initial == "conformal_wave") {
        for (long pb = 0; pb < g.n_base(); ++pb) {
            double y = g.base_y(pb);
            double prof = g.has_boundary() ? std::sin(M_PI * y) : std::cos(2.0 * M_PI * y);
            u.at(pb)(0, 0) = u.at(pb)(1, 1) = cfg.init_amplitude * prof;
        }
        return u;
    }
    throw fhe::ConfigError("unknown initial-data preset '" + cfg.initial + "'");
}

void write_timeseries(const fs::path& path, const fhe::FlowReport& rep) {
    std::ofstream out(path);
    out << std::setprecision(17);
    out << "t,sup_theta,residual,det_drift\n";
    for (size_t i = 0; i < rep.t.size(); ++i)
        out << rep.t[i] << "," << rep.sup_theta[i] << "," << rep.residual[i] << ","
            << rep.det_drift[i] << "\n";
}

json flow_report_json(const fhe::FlowReport& rep) {
    json j;
    j["converged"] = rep.converged;
    j["final_residual"] = rep.final_residual;
    j["steps"] = rep.steps;
    j["dt"] = rep.dt_used;
    j["monotone_sup_theta"] = rep.monotone;
    j["worst_sup_theta_increase"] = rep.worst_increase;
    j["max_det_drift"] = rep.max_det_drift;
    j["subsolution_defect"] = fhe::subsolution_defect(rep.snapshot_t, rep.theta_snapshots);
    j["live_subsolution_defect"] = rep.live_subsolution_defect;
    if (rep.fit.valid) {
        j["fit"] = {{"C", rep.fit.C}, {"mu", rep.fit.mu}, {"r2", rep.fit.r2}};
    }
    j["wall_time_s"] = rep.wall_seconds;
    return j;
}

int cmd_verify(const fhe::RunConfig& cfg, bool quiet) {
    fhe::CheckList checks = fhe::run_all_checks(cfg.seed, 10);
    json rows = json::array();
    int failures = 0;
    for (const auto& r : checks.results) {
        if (!r.pass) ++failures;
        if (!quiet)
            std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(52) << r.id
                      << " measured " << std::scientific << std::setprecision(3) << r.measured
                      << "  bound " << r.bound << (r.note.empty() ? "" : "  (" + r.note + ")")
                      << "\n";
        rows.push_back({{"id", r.id},
                        {"measured", r.measured},
                        {"bound", r.bound},
                        {"pass", r.pass},
                        {"note", r.note}});
    }
    json rep;
    rep["checks"] = rows;
    rep["failures"] = failures;
    write_text(fs::path(cfg.out_dir) / "report.json", rep.dump(2) + "\n");
    if (!quiet)
        std::cout << checks.results.size() - failures << "/" << checks.results.size()
                  << " checks passed\n";
    return failures == 0 ? 0 : 1;
}

int cmd_flow(const fhe::RunConfig& cfg, bool quiet, bool dirichlet) {
    fhe::ProductGrid g(cfg.grid);
    fhe::DeformationPreset preset = build_preset(cfg, g);
    fhe::FamilyFlow flow(g, preset.a, cfg.lambda);
    fhe::BaseField u0 = build_initial(cfg, g);
    fhe::FlowParams prm;
    prm.lambda = cfg.lambda;
    prm.dt = cfg.dt;
    prm.t_end = cfg.t_end;
    prm.tol = cfg.tol;
    prm.scheme = cfg.scheme == "rk4" ? fhe::Scheme::RK4 : fhe::Scheme::SemiImplicit;

    json j;
    if (dirichlet) {
        fhe::DirichletReport rep = fhe::dirichlet_solve(flow, prm, u0);
        j = flow_report_json(rep.flow);
        j["lambda1_full_laplacian"] = rep.lambda1_full;
        j["mu_theta"] = rep.mu_theta;
        j["mu_p"] = rep.mu_p;
        write_timeseries(fs::path(cfg.out_dir) / "timeseries.csv", rep.flow);
        if (!quiet)
            std::cout << "dirichlet: converged in " << rep.flow.steps << " steps, mu_theta = "
                      << rep.mu_theta << ", 2*lambda1(Delta_B) = " << 2.0 * rep.lambda1_full
                      << "\n";
    } else {
        fhe::FlowReport rep = flow.run(prm, u0);
        j = flow_report_json(rep);
        write_timeseries(fs::path(cfg.out_dir) / "timeseries.csv", rep);
        if (!quiet)
            std::cout << "flow: " << rep.steps << " steps, residual " << rep.final_residual
                      << (rep.converged ? " (converged)" : "") << "\n";
        if (!rep.monotone)
            std::cerr << "warning: sup theta increased beyond tolerance during the run\n";
    }
    j["preset"] = cfg.preset;
    j["lambda"] = cfg.lambda;
    j["config"] = cfg.to_text();
    j["code_version"] = kVersion;
    write_text(fs::path(cfg.out_dir) / "report.json", j.dump(2) + "\n");
    return 0;
}

int cmd_adiabatic(const fhe::RunConfig& cfg, bool quiet) {
    fhe::ProductGrid g(cfg.grid);
    fhe::DeformationPreset preset = build_preset(cfg, g);
    fhe::MetricData h = fhe::MetricData::identity(g, 2);
    fhe::AdiabaticReport rep = fhe::adiabatic_defect(h, preset, cfg.lambda, cfg.k_list);

    std::ofstream csv(fs::path(cfg.out_dir) / "slopes.csv");
    csv << std::setprecision(17) << "k,defect\n";
    for (size_t i = 0; i < rep.k_list.size(); ++i)
        csv << rep.k_list[i] << "," << rep.defects[i] << "\n";

    json j;
    j["k_list"] = rep.k_list;
    j["defects"] = rep.defects;
    j["slope"] = rep.slope;
    j["exact_cancellation"] = rep.exact_cancellation;
    j["preset"] = cfg.preset;
    j["commutant_dim"] = preset.a.commutant_dim;
    write_text(fs::path(cfg.out_dir) / "report.json", j.dump(2) + "\n");
    if (!quiet) {
        if (rep.exact_cancellation)
            std::cout << "adiabatic: exact cancellation (defects at rounding level)\n";
        else
            std::cout << "adiabatic: slope " << rep.slope << " over k sweep\n";
    }
    return 0;
}

int cmd_nu(const fhe::RunConfig& cfg, bool quiet) {
    fhe::ProductGrid g(cfg.grid);
    fhe::DeformationPreset preset = build_preset(cfg, g);
    fhe::HoloFrame fr = fhe::HoloFrame::trivial(g, 2);
    fhe::MetricData h = fhe::MetricData::identity(g, 2);
    fhe::BaseField nu_val = fhe::nu(h, fr, preset.a);

    std::ofstream csv(fs::path(cfg.out_dir) / "nu.csv");
    csv << std::setprecision(17);
    csv << "b_index,x,y";
    const int r = 2;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) csv << ",inu_" << i << j << "_re,inu_" << i << j << "_im";
    csv << "\n";
    for (long pb = 0; pb < g.n_base(); ++pb) {
        csv << pb << "," << g.base_x(pb) << "," << g.base_y(pb);
        Eigen::MatrixXcd inu = fhe::cd(0, 1) * nu_val.at(pb);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
                csv << "," << inu(i, j).real() << "," << inu(i, j).imag();
        csv << "\n";
    }
    if (!quiet) std::cout << "nu: wrote " << g.n_base() << " rows\n";
    return 0;
}

int cmd_report(const fhe::RunConfig& cfg, bool quiet) {
    json merged;
    merged["code_version"] = kVersion;
    for (const char* name : {"report.json", "manifest.json"}) {
        fs::path p = fs::path(cfg.out_dir) / name;
        if (fs::exists(p)) {
            std::ifstream in(p);
            merged[name] = json::parse(in);
        }
    }
    for (const char* name : {"timeseries.csv", "slopes.csv", "nu.csv"}) {
        fs::path p = fs::path(cfg.out_dir) / name;
        if (fs::exists(p)) merged["artifacts"].push_back(name);
    }
    write_text(fs::path(cfg.out_dir) / "summary.json", merged.dump(2) + "\n");
    if (!quiet) std::cout << "report: wrote summary.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"family Hermite-Einstein numerical laboratory"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string sub;
    for (const char* name : {"verify", "flow", "dirichlet", "adiabatic", "nu", "report"}) {
        CLI::App* cmd = app.add_subcommand(name);
        add_common(cmd, args);
        cmd->callback([&sub, name]() { sub = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto t0 = std::chrono::steady_clock::now();
    try {
        fhe::RunConfig cfg = load_config(args);
        fs::create_directories(cfg.out_dir);
        int rc = 0;
        if (sub == "verify")
            rc = cmd_verify(cfg, args.quiet);
        else if (sub == "flow")
            rc = cmd_flow(cfg, args.quiet, false);
        else if (sub == "dirichlet")
            rc = cmd_flow(cfg, args.quiet, true);
        else if (sub == "adiabatic")
            rc = cmd_adiabatic(cfg, args.quiet);
        else if (sub == "nu")
            rc = cmd_nu(cfg, args.quiet);
        else if (sub == "report")
            rc = cmd_report(cfg, args.quiet);
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(cfg, sub, wall);
        return rc;
    } catch (const fhe::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
