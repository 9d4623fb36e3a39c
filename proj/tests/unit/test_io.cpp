#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pgdflow/io.hpp"

using namespace pgdflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("pgdflow_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing")
{
    const RunConfig c = parse_config(R"({"case": "lid", "mesh": {"cells": 24}, "parametric": {"intervals": 8},
        "solver": {"max_iterations": 77}, "pgd": {"tolerance": 1e-2, "max_modes": 3, "criterion": "amplitude_sum",
        "cross_convection": "previous_increment"}, "output": {"dir": "abc", "vtk": false}})");
    CHECK(c.case_name == "lid");
    CHECK(c.params.cells == 24);
    CHECK(c.params.n_intervals == 8);
    CHECK(c.params.solver.max_iterations == 77);
    CHECK(c.ads.spatial_solver.max_iterations == 77);
    CHECK(c.ads.greedy_tolerance == 1e-2);
    CHECK(c.ads.max_modes == 3);
    CHECK(c.ads.criterion == GreedyCriterion::amplitude_sum);
    CHECK(c.ads.cross_convection == CrossConvection::previous_increment);
    CHECK(c.output_dir == "abc");
    CHECK_FALSE(c.write_vtk);
    CHECK(c.write_csv);

    // defaults survive a round trip
    const RunConfig d = parse_config(config_to_json(c));
    CHECK(d.params.cells == 24);
    CHECK(d.ads.max_modes == 3);
    CHECK(d.ads.criterion == GreedyCriterion::amplitude_sum);

    CHECK(parse_config(R"({"case": "kovasznay"})").ads.greedy_tolerance == 1e-5);
    CHECK(parse_config(R"({"case": "jets"})").ads.greedy_tolerance == 1e-4);
}

TEST_CASE("config errors")
{
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"mesh": {"cells": 8}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": "nope"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": "lid", "mesh": {"cells": -3}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": "lid", "mesh": {"celz": 3}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": "lid", "extra": {}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": "lid", "pgd": {"tolerance": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": "lid", "pgd": {"criterion": "best"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"case": "lid", "mesh": {"cells": "many"}})"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("field output")
{
    const fs::path dir = scratch("fields");
    const Mesh2D m = Mesh2D::build_cartesian(3, 2, {0, 0}, {3, 2}, PatchLayout::uniform("w"));
    VectorField u(m);
    ScalarField p(m);
    for (int c = 0; c < m.n_cells(); ++c) {
        u.cells[c] = {double(c), -double(c)};
        p.cells[c] = 0.1 * c;
    }
    write_vtk(dir / "u.vtk", m, "U", u);
    write_vtk(dir / "p.vtk", m, "p", p);
    write_fields_csv(dir / "f.csv", m, u, p);
    write_residuals_csv(dir / "r.csv", {{1.0, 0.5}, {0.25, 0.125}});

    const std::string vtk = slurp(dir / "u.vtk");
    CHECK(vtk.find("DATASET STRUCTURED_POINTS") != std::string::npos);
    CHECK(vtk.find("DIMENSIONS 4 3 1") != std::string::npos);
    CHECK(vtk.find("CELL_DATA 6") != std::string::npos);
    CHECK(vtk.find("VECTORS U double") != std::string::npos);
    CHECK(slurp(dir / "p.vtk").find("SCALARS p double") != std::string::npos);

    const std::string csv = slurp(dir / "f.csv");
    CHECK(csv.rfind("x,y,ux,uy,p\r\n", 0) == 0);
    CHECK(csv.find("0.5,0.5,0,-0,0\r\n") != std::string::npos);
    CHECK(csv.find("2.5,1.5,5,-5,0.5\r\n") != std::string::npos);
    const std::string r = slurp(dir / "r.csv");
    CHECK(r == "iteration,momentum,continuity\r\n1,1,0.5\r\n2,0.25,0.125\r\n");
}

TEST_CASE("archive round trip")
{
    RunConfig cfg = default_config("lid");
    cfg.params.cells = 12;
    cfg.params.n_intervals = 6;
    cfg.ads.max_modes = 2;
    const FlowCase fc = make_case(cfg.case_name, cfg.params);
    const EnrichmentResult r = enrich(fc.data, compute_bc_modes(fc.bc_recipes, cfg.params.solver), cfg.ads);
    REQUIRE(r.expansion.modes.size() >= 2);

    const fs::path dir = scratch("archive");
    save_archive(dir, cfg, r.expansion, r.reports, true, to_string(r.status), r.message);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "modes" / "fu_0000.bin"));
    CHECK(fs::file_size(dir / "modes" / "fu_0000.bin") ==
          16 * static_cast<std::uintmax_t>(fc.mesh->n_cells() + fc.mesh->n_boundary_faces()));
    CHECK(fs::exists(dir / "amplitudes.csv"));

    const Archive a = load_archive(dir);
    CHECK(a.complete);
    CHECK(a.config.params.cells == 12);
    CHECK(a.expansion.modes.size() == r.expansion.modes.size());
    CHECK(a.expansion.n_bc_modes() == r.expansion.n_bc_modes());
    CHECK(a.reports.size() == r.reports.size());
    const double lo = fc.grid->lo(), hi = fc.grid->hi();
    for (double mu : {lo, lo + 0.37 * (hi - lo), 0.5 * (lo + hi), hi}) {
        const auto [u0, p0] = evaluate_online(r.expansion, mu);
        const auto [u1, p1] = evaluate_online(a.expansion, mu);
        CHECK(u0.cells == u1.cells);
        CHECK(u0.boundary == u1.boundary);
        CHECK(p0.cells == p1.cells);
    }

    fs::remove(dir / "modes" / "fp_0001.bin");
    CHECK_THROWS_AS(load_archive(dir), std::runtime_error);
    CHECK_THROWS_AS(load_archive(dir / "missing"), std::runtime_error);
}
