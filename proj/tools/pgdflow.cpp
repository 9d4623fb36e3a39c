// pgdflow command-line driver: full-order solves, offline enrichment, online
// evaluation, convergence studies, QoI sweeps and the HTTP service.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pgdflow/io.hpp"
#include "pgdflow/serve.hpp"

using namespace pgdflow;
namespace fs = std::filesystem;

namespace {

constexpr int exit_failure = 1;
constexpr int exit_invalid = 2;

struct Common {
    std::string config_path;
    std::string case_name;
    std::string out;
};

RunConfig resolve_config(const Common& c)
{
    RunConfig cfg;
    if (!c.config_path.empty())
        cfg = load_config(c.config_path);
    else if (!c.case_name.empty())
        cfg = parse_config("{\"case\": \"" + c.case_name + "\"}");
    else
        throw ConfigError("need --config or --case");
    if (!c.out.empty()) cfg.output_dir = c.out;
    return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

int solve_full(const Common& c, double mu)
{
    const RunConfig cfg = resolve_config(c);
    const FlowCase fc = make_case(cfg.case_name, cfg.params);
    if (!fc.grid->contains(mu)) {
        std::cerr << "mu = " << mu << " outside [" << fc.grid->lo() << ", " << fc.grid->hi() << "]\n";
        return exit_invalid;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const FlowState st = simple_solve(fc.full_order(mu), cfg.params.solver);
    std::cout << "solve: " << st.iterations << " iterations, " << seconds_since(t0) << " s, "
              << (st.converged ? "converged" : "NOT converged") << '\n';

    const Mesh2D& mesh = *fc.mesh;
    fs::create_directories(cfg.output_dir);
    if (cfg.write_vtk) {
        write_vtk(cfg.output_dir / "u.vtk", mesh, "U", st.u);
        write_vtk(cfg.output_dir / "p.vtk", mesh, "p", st.p);
    }
    if (cfg.write_csv) write_fields_csv(cfg.output_dir / "fields.csv", mesh, st.u, st.p);
    write_residuals_csv(cfg.output_dir / "residuals.csv", st.history);
    if (fc.exact) {
        double eu = 0, nu = 0, ep = 0, np = 0;
        for (int i = 0; i < mesh.n_cells(); ++i) {
            const KovasznayPoint ex = fc.exact(mesh.cell_centroid(i), mu);
            const Vec2 d = st.u.cells[i] - ex.u;
            eu += dot(d, d);
            nu += dot(ex.u, ex.u);
            ep += (st.p.cells[i] - ex.p) * (st.p.cells[i] - ex.p);
            np += ex.p * ex.p;
        }
        std::ofstream os(cfg.output_dir / "errors.csv", std::ios::binary);
        os << "mu,err_u,err_p\r\n" << fmt(mu) << ',' << fmt(std::sqrt(eu / nu)) << ',' << fmt(std::sqrt(ep / np)) << "\r\n";
        std::cout << "relative L2 error: u " << std::sqrt(eu / nu) << ", p " << std::sqrt(ep / np) << '\n';
    }
    if (!fc.qoi_patch.empty()) std::cout << "p_drop " << fmt(pressure_drop(st.p, mesh, fc.qoi_patch)) << '\n';
    if (!st.converged) {
        std::cerr << "full-order solve did not converge in " << st.iterations << " iterations\n";
        return exit_failure;
    }
    return 0;
}

int pgd_offline(const Common& c)
{
    const RunConfig cfg = resolve_config(c);
    const FlowCase fc = make_case(cfg.case_name, cfg.params);
    const auto t0 = std::chrono::steady_clock::now();
    PgdExpansion partial{fc.mesh, fc.grid, {}, cfg.case_name};
    try {
        std::vector<Mode> bc = compute_bc_modes(fc.bc_recipes, cfg.params.solver);
        partial.modes = bc;
        std::cout << bc.size() << " boundary-condition modes, " << seconds_since(t0) << " s\n";
        const EnrichmentResult r = enrich(fc.data, std::move(bc), cfg.ads, [&](const ModeReport& m) {
            std::printf("mode %2d  sigma_u %.3e  sigma_p %.3e  eta %.3e  iterations %2d%s  %.1f s\n", m.mode,
                        m.sigma_u, m.sigma_p, m.eta, m.iterations, m.ads_converged ? "" : " (ADS not converged)",
                        seconds_since(t0));
            std::fflush(stdout);
        });
        const bool ok = r.status == EnrichmentStatus::converged || r.status == EnrichmentStatus::max_modes;
        save_archive(cfg.output_dir, cfg, r.expansion, r.reports, ok, to_string(r.status), r.message);
        std::cout << "status " << to_string(r.status) << (r.message.empty() ? "" : ": " + r.message) << ", "
                  << r.expansion.n_computed() << " computed modes, archive " << cfg.output_dir << '\n';
        return ok ? 0 : exit_failure;
    } catch (const std::exception& e) {
        std::cerr << "offline phase failed: " << e.what() << '\n';
        save_archive(cfg.output_dir, cfg, partial, {}, false, "failed", e.what());
        return exit_failure;
    }
}

int evaluate(const std::string& archive_dir, double mu, const std::string& qoi, const std::string& out)
{
    const Archive a = load_archive(archive_dir);
    if (!a.flow.grid->contains(mu)) {
        std::cerr << "mu = " << mu << " outside [" << a.flow.grid->lo() << ", " << a.flow.grid->hi() << "]\n";
        return exit_invalid;
    }
    if (!qoi.empty() && qoi != "pressure_drop") {
        std::cerr << "unknown QoI '" << qoi << "'\n";
        return exit_invalid;
    }
    if (!qoi.empty() && a.flow.qoi_patch.empty()) {
        std::cerr << "case " << a.expansion.case_name << " has no pressure-drop patch\n";
        return exit_invalid;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto [u, p] = evaluate_online(a.expansion, mu);
    const double t = seconds_since(t0);
    if (!qoi.empty()) std::cout << fmt(pressure_drop(p, *a.flow.mesh, a.flow.qoi_patch)) << '\n';
    std::cerr << "evaluation: " << a.expansion.modes.size() << " modes, " << t * 1e3 << " ms\n";
    if (!out.empty()) {
        fs::create_directories(out);
        write_vtk(fs::path(out) / "u.vtk", *a.flow.mesh, "U", u);
        write_vtk(fs::path(out) / "p.vtk", *a.flow.mesh, "p", p);
        write_fields_csv(fs::path(out) / "fields.csv", *a.flow.mesh, u, p);
    }
    return 0;
}

int convergence(const Common& c, std::vector<int> levels)
{
    const RunConfig cfg = resolve_config(c);
    if (levels.empty()) levels = {12, 25, 50, 100};
    fs::create_directories(cfg.output_dir);
    std::ofstream os(cfg.output_dir / "convergence.csv", std::ios::binary);
    const bool orders = levels.size() > 1;
    os << "cells,h,err_u,err_p" << (orders ? ",order_u,order_p" : "") << "\r\n";
    std::optional<ConvergenceLevel> prev;
    for (int n : levels) {
        ConvergenceLevel l;
        try {
            l = kovasznay_convergence(cfg.case_name, cfg.params, {n}).front();
        } catch (const std::exception& e) {
            os << n << ",failed,,," << (orders ? ",," : "") << "\r\n";
            std::cerr << "level " << n << " failed: " << e.what() << '\n';
            return exit_failure;
        }
        os << n << ',' << fmt(l.h) << ',' << fmt(l.err_u) << ',' << fmt(l.err_p);
        std::printf("cells %4d  h %.3e  err_u %.4e  err_p %.4e", n, l.h, l.err_u, l.err_p);
        if (orders) {
            if (prev) {
                const double ou = observed_order(prev->err_u, l.err_u, prev->h, l.h);
                const double op = observed_order(prev->err_p, l.err_p, prev->h, l.h);
                os << ',' << fmt(ou) << ',' << fmt(op);
                std::printf("  order u %.2f  p %.2f", ou, op);
            } else {
                os << ",,";
            }
        }
        os << "\r\n";
        std::printf("  %.1f s%s\n", l.seconds, l.converged ? "" : "  (not converged)");
        prev = l;
        if (!l.converged) {
            os << n << ",failed,,," << (orders ? ",," : "") << "\r\n";
            return exit_failure;
        }
    }
    return 0;
}

int qoi_sweep(const std::string& archive_dir, int samples, bool with_full, const std::string& out)
{
    const Archive a = load_archive(archive_dir);
    if (a.flow.qoi_patch.empty()) {
        std::cerr << "case " << a.expansion.case_name << " has no pressure-drop patch\n";
        return exit_invalid;
    }
    if (samples < 2) {
        std::cerr << "need at least 2 samples\n";
        return exit_invalid;
    }
    const ParametricGrid& g = *a.flow.grid;
    const fs::path dir = out.empty() ? fs::path(archive_dir) : fs::path(out);
    fs::create_directories(dir);
    std::ofstream os(dir / "qoi.csv", std::ios::binary);
    os << "mu,p_drop_pgd" << (with_full ? ",p_drop_full" : "") << "\r\n";
    for (int k = 0; k < samples; ++k) {
        const double mu = k + 1 == samples ? g.hi() : g.lo() + (g.hi() - g.lo()) * k / (samples - 1);
        const double q = pressure_drop(evaluate_online(a.expansion, mu).second, *a.flow.mesh, a.flow.qoi_patch);
        os << fmt(mu) << ',' << fmt(q);
        std::printf("mu %.4f  pgd %.6e", mu, q);
        if (with_full) {
            const FlowState st = simple_solve(a.flow.full_order(mu), a.config.params.solver);
            const double qf = pressure_drop(st.p, *a.flow.mesh, a.flow.qoi_patch);
            os << ',' << fmt(qf);
            std::printf("  full %.6e", qf);
        }
        os << "\r\n";
        std::printf("\n");
    }
    return 0;
}

ExpansionServer* running = nullptr;

int serve(const std::string& archive_dir, const std::string& bind, const std::string& static_dir)
{
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "--bind expects ADDR:PORT\n";
        return exit_invalid;
    }
    const std::string host = bind.substr(0, colon);
    const int port = std::stoi(bind.substr(colon + 1));
    auto archive = std::make_shared<const Archive>(load_archive(archive_dir));
    ExpansionServer srv(archive, static_dir);
    const int bound = srv.bind(host, port);
    if (bound < 0) {
        std::cerr << "cannot bind " << bind << '\n';
        return exit_failure;
    }
    running = &srv;
    std::signal(SIGINT, [](int) { if (running) running->stop(); });
    std::signal(SIGTERM, [](int) { if (running) running->stop(); });
    std::cout << "serving " << archive->expansion.case_name << " on http://" << host << ':' << bound << std::endl;
    srv.listen_after_bind();
    running = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Finite-volume SIMPLE solver with a nonintrusive PGD reduced-order layer"};
    app.require_subcommand(1);

    Common common;
    double mu = 0.0;
    std::string archive, qoi, out, bind = "127.0.0.1:8080", static_dir;
    std::vector<int> levels;
    int samples = 21;
    bool with_full = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON run configuration");
        sub->add_option("--case", common.case_name, "case name when no config is given");
        sub->add_option("--out", common.out, "output directory (overrides the config)");
    };

    auto* solve = app.add_subcommand("solve-full", "full-order solve at one parameter value");
    add_common(solve);
    solve->add_option("--mu", mu, "parameter value")->required();

    auto* offline = app.add_subcommand("pgd-offline", "build the separated solution and write an archive");
    add_common(offline);

    auto* eval = app.add_subcommand("evaluate", "particularise an archived expansion");
    eval->add_option("--archive", archive)->required();
    eval->add_option("--mu", mu)->required();
    eval->add_option("--qoi", qoi, "pressure_drop");
    eval->add_option("--out", out, "write particularised fields here");

    auto* conv = app.add_subcommand("convergence", "mesh convergence against the Kovasznay solution");
    add_common(conv);
    conv->add_option("--levels", levels, "cells per side (default 12 25 50 100)");

    auto* sweep = app.add_subcommand("qoi-sweep", "pressure drop over the parameter interval");
    sweep->add_option("--archive", archive)->required();
    sweep->add_option("--samples", samples);
    sweep->add_flag("--full", with_full, "also run full-order solves");
    sweep->add_option("--out", out);

    auto* srv = app.add_subcommand("serve", "HTTP service over an archive");
    srv->add_option("--archive", archive)->required();
    srv->add_option("--bind", bind, "ADDR:PORT");
    srv->add_option("--static", static_dir, "directory served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_invalid;
    }

    try {
        if (*solve) return solve_full(common, mu);
        if (*offline) return pgd_offline(common);
        if (*eval) return evaluate(archive, mu, qoi, out);
        if (*conv) return convergence(common, levels);
        if (*sweep) return qoi_sweep(archive, samples, with_full, out);
        if (*srv) return serve(archive, bind, static_dir);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return exit_invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return 0;
}
