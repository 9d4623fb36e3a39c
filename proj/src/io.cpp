#include "pgdflow/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pgdflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* criterion_name(GreedyCriterion c)
{
    switch (c) {
    case GreedyCriterion::relative_amplitude: return "relative_amplitude";
    case GreedyCriterion::first_amplitude: return "first_amplitude";
    case GreedyCriterion::amplitude_sum: return "amplitude_sum";
    }
    return "?";
}

const char* evaluation_name(ResidualEvaluation e)
{
    switch (e) {
    case ResidualEvaluation::automatic: return "automatic";
    case ResidualEvaluation::separated: return "separated";
    case ResidualEvaluation::direct: return "direct";
    }
    return "?";
}

const char* cross_name(CrossConvection c)
{
    return c == CrossConvection::lagged ? "lagged" : "previous_increment";
}

// Reads known keys of one section; anything left over is an error.
class Section {
public:
    Section(const json& root, const std::string& name) : name_(name)
    {
        if (!root.contains(name)) return;
        obj_ = root.at(name);
        if (!obj_.is_object()) throw ConfigError("config: '" + name + "' must be an object");
    }

    template <class T>
    void read(const std::string& key, T& out)
    {
        if (!obj_.contains(key)) return;
        try {
            out = obj_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: bad value for " + name_ + "." + key);
        }
        obj_.erase(key);
    }

    void finish() const
    {
        if (!obj_.empty()) throw ConfigError("config: unknown key " + name_ + "." + obj_.begin().key());
    }

private:
    std::string name_;
    json obj_ = json::object();
};

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream os(path, mode);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_vtk_header(std::ostream& os, const Mesh2D& mesh)
{
    os << "# vtk DataFile Version 3.0\npgdflow\nASCII\nDATASET STRUCTURED_POINTS\n";
    os << "DIMENSIONS " << mesh.nx() + 1 << ' ' << mesh.ny() + 1 << " 1\n";
    os << "ORIGIN " << num(mesh.origin().x) << ' ' << num(mesh.origin().y) << " 0\n";
    os << "SPACING " << num(mesh.dx()) << ' ' << num(mesh.dy()) << " 1\n";
    os << "CELL_DATA " << mesh.n_cells() << '\n';
}

void write_raw(const fs::path& path, const std::vector<double>& v)
{
    static_assert(std::endian::native == std::endian::little, "archive format assumes little-endian hosts");
    auto os = open_out(path, std::ios::out | std::ios::binary);
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> read_raw(const fs::path& path, std::size_t n)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("archive: missing " + path.string());
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (is.gcount() != static_cast<std::streamsize>(n * sizeof(double)) || is.peek() != EOF)
        throw std::runtime_error("archive: size mismatch in " + path.string());
    return v;
}

std::string mode_file(const char* prefix, int i, const char* ext)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04d.%s", prefix, i, ext);
    return std::string("modes/") + buf;
}

}  // namespace

RunConfig default_config(const std::string& case_name)
{
    RunConfig c;
    c.case_name = case_name;
    c.params = default_parameters(case_name);
    c.ads.spatial_solver = c.params.solver;
    if (case_name == "jets")
        c.ads.greedy_tolerance = 1e-4;
    else if (case_name == "kovasznay" || case_name == "kovasznay_nonlinear")
        c.ads.greedy_tolerance = 1e-5;
    return c;
}

RunConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!root.is_object() || !root.contains("case") || !root.at("case").is_string())
        throw ConfigError("config: 'case' (string) is required");
    const std::string name = root.at("case").get<std::string>();
    const auto names = case_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) throw ConfigError("config: unknown case '" + name + "'");

    RunConfig c = default_config(name);
    CaseParameters& p = c.params;
    SimpleSettings& s = p.solver;
    AdsSettings& a = c.ads;

    Section mesh(root, "mesh");
    mesh.read("cells", p.cells);
    mesh.finish();
    Section par(root, "parametric");
    par.read("intervals", p.n_intervals);
    par.finish();
    Section disc(root, "discretisation");
    disc.read("upwind_blend", p.upwind_blend);
    disc.read("mean_boundary_convection", p.mean_boundary_convection);
    disc.finish();
    Section kov(root, "kovasznay");
    kov.read("taylor_order", p.taylor_order);
    kov.finish();
    Section jets(root, "jets");
    jets.read("smooth", p.smooth_jets);
    jets.finish();

    Section sol(root, "solver");
    sol.read("velocity_relaxation", s.velocity_relaxation);
    sol.read("pressure_relaxation", s.pressure_relaxation);
    double dt = 0.0;
    sol.read("pseudo_time", dt);
    if (dt != 0.0) s.pseudo_time = dt;
    sol.read("momentum_tolerance", s.momentum_tolerance);
    sol.read("continuity_tolerance", s.continuity_tolerance);
    sol.read("max_iterations", s.max_iterations);
    sol.finish();
    a.spatial_solver = s;

    Section pgd(root, "pgd");
    std::string crit = criterion_name(a.criterion), eval = evaluation_name(a.residual_evaluation),
                cross = cross_name(a.cross_convection);
    pgd.read("criterion", crit);
    pgd.read("tolerance", a.greedy_tolerance);
    pgd.read("amplitude_tolerance", a.amplitude_tolerance);
    pgd.read("residual_tolerance", a.residual_tolerance);
    pgd.read("max_alternating", a.max_alternating);
    pgd.read("max_modes", a.max_modes);
    pgd.read("predictor_amplitude", a.predictor_amplitude);
    pgd.read("residual_evaluation", eval);
    pgd.read("cross_convection", cross);
    pgd.finish();
    if (crit == "relative_amplitude")
        a.criterion = GreedyCriterion::relative_amplitude;
    else if (crit == "first_amplitude")
        a.criterion = GreedyCriterion::first_amplitude;
    else if (crit == "amplitude_sum")
        a.criterion = GreedyCriterion::amplitude_sum;
    else
        throw ConfigError("config: unknown pgd.criterion '" + crit + "'");
    if (eval == "automatic")
        a.residual_evaluation = ResidualEvaluation::automatic;
    else if (eval == "separated")
        a.residual_evaluation = ResidualEvaluation::separated;
    else if (eval == "direct")
        a.residual_evaluation = ResidualEvaluation::direct;
    else
        throw ConfigError("config: unknown pgd.residual_evaluation '" + eval + "'");
    if (cross == "lagged")
        a.cross_convection = CrossConvection::lagged;
    else if (cross == "previous_increment")
        a.cross_convection = CrossConvection::previous_increment;
    else
        throw ConfigError("config: unknown pgd.cross_convection '" + cross + "'");

    Section out(root, "output");
    std::string dir = c.output_dir.string();
    out.read("dir", dir);
    out.read("vtk", c.write_vtk);
    out.read("csv", c.write_csv);
    out.finish();
    c.output_dir = dir;

    for (const auto& [key, value] : root.items()) {
        static const char* known[] = {"case", "mesh", "parametric", "discretisation", "kovasznay",
                                      "jets", "solver", "pgd", "output"};
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw ConfigError("config: unknown section '" + key + "'");
    }

    try {
        make_case(c.case_name, c.params);  // registry validation, no solves
        validate(c.ads);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c)
{
    const CaseParameters& p = c.params;
    const SimpleSettings& s = p.solver;
    const AdsSettings& a = c.ads;
    json j;
    j["case"] = c.case_name;
    j["mesh"] = {{"cells", p.cells}};
    j["parametric"] = {{"intervals", p.n_intervals}};
    j["discretisation"] = {{"upwind_blend", p.upwind_blend}, {"mean_boundary_convection", p.mean_boundary_convection}};
    j["kovasznay"] = {{"taylor_order", p.taylor_order}};
    j["jets"] = {{"smooth", p.smooth_jets}};
    j["solver"] = {{"velocity_relaxation", s.velocity_relaxation},
                   {"pressure_relaxation", s.pressure_relaxation},
                   {"pseudo_time", s.pseudo_time.value_or(0.0)},
                   {"momentum_tolerance", s.momentum_tolerance},
                   {"continuity_tolerance", s.continuity_tolerance},
                   {"max_iterations", s.max_iterations}};
    j["pgd"] = {{"criterion", criterion_name(a.criterion)},
                {"tolerance", a.greedy_tolerance},
                {"amplitude_tolerance", a.amplitude_tolerance},
                {"residual_tolerance", a.residual_tolerance},
                {"max_alternating", a.max_alternating},
                {"max_modes", a.max_modes},
                {"predictor_amplitude", a.predictor_amplitude},
                {"residual_evaluation", evaluation_name(a.residual_evaluation)},
                {"cross_convection", cross_name(a.cross_convection)}};
    j["output"] = {{"dir", c.output_dir.string()}, {"vtk", c.write_vtk}, {"csv", c.write_csv}};
    return j.dump(2);
}

// ---------------------------------------------------------------------------

void write_vtk(const fs::path& path, const Mesh2D& mesh, const std::string& name, const VectorField& u)
{
    auto os = open_out(path);
    write_vtk_header(os, mesh);
    os << "VECTORS " << name << " double\n";
    for (const Vec2& v : u.cells) os << num(v.x) << ' ' << num(v.y) << " 0\n";
}

void write_vtk(const fs::path& path, const Mesh2D& mesh, const std::string& name, const ScalarField& p)
{
    auto os = open_out(path);
    write_vtk_header(os, mesh);
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : p.cells) os << num(v) << '\n';
}

void write_fields_csv(const fs::path& path, const Mesh2D& mesh, const VectorField& u, const ScalarField& p)
{
    auto os = open_out(path, std::ios::out | std::ios::binary);
    os << "x,y,ux,uy,p\r\n";
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const Vec2 x = mesh.cell_centroid(c);
        os << num(x.x) << ',' << num(x.y) << ',' << num(u.cells[c].x) << ',' << num(u.cells[c].y) << ','
           << num(p.cells[c]) << "\r\n";
    }
}

void write_residuals_csv(const fs::path& path, const std::vector<OuterResidual>& history)
{
    auto os = open_out(path, std::ios::out | std::ios::binary);
    os << "iteration,momentum,continuity\r\n";
    for (std::size_t i = 0; i < history.size(); ++i)
        os << i + 1 << ',' << num(history[i].momentum) << ',' << num(history[i].continuity) << "\r\n";
}

// ---------------------------------------------------------------------------

void save_archive(const fs::path& dir, const RunConfig& config, const PgdExpansion& expansion,
                  const std::vector<ModeReport>& reports, bool complete, const std::string& status,
                  const std::string& message)
{
    fs::create_directories(dir / "modes");
    const Mesh2D& mesh = *expansion.mesh;
    const ParametricGrid& grid = *expansion.grid;
    const std::size_t nc = mesh.n_cells(), nb = mesh.n_boundary_faces();

    json modes = json::array();
    for (std::size_t i = 0; i < expansion.modes.size(); ++i) {
        const Mode& m = expansion.modes[i];
        std::vector<double> fu, fp;
        for (const Vec2& v : m.fu.cells) fu.insert(fu.end(), {v.x, v.y});
        for (const Vec2& v : m.fu.boundary) fu.insert(fu.end(), {v.x, v.y});
        fp = m.fp.cells;
        fp.insert(fp.end(), m.fp.boundary.begin(), m.fp.boundary.end());
        const int k = static_cast<int>(i);
        write_raw(dir / mode_file("fu", k, "bin"), fu);
        write_raw(dir / mode_file("fp", k, "bin"), fp);
        auto os = open_out(dir / mode_file("phi", k, "csv"), std::ios::out | std::ios::binary);
        os << "mu,phi\r\n";
        for (int j = 0; j < grid.size(); ++j) os << num(grid.node(j)) << ',' << num(m.phi[j]) << "\r\n";
        modes.push_back({{"index", k},
                         {"origin", m.origin == ModeOrigin::boundary_condition ? "boundary_condition" : "computed"},
                         {"sigma_u", m.sigma_u},
                         {"sigma_p", m.sigma_p},
                         {"iterations", m.iterations},
                         {"fu", mode_file("fu", k, "bin")},
                         {"fp", mode_file("fp", k, "bin")},
                         {"phi", mode_file("phi", k, "csv")}});
    }

    {
        auto os = open_out(dir / "amplitudes.csv", std::ios::out | std::ios::binary);
        os << "mode,sigma_u,sigma_p,eta,iterations\r\n";
        for (const ModeReport& r : reports)
            os << r.mode << ',' << num(r.sigma_u) << ',' << num(r.sigma_p) << ',' << num(r.eta) << ','
               << r.iterations << "\r\n";
    }

    json reps = json::array();
    for (const ModeReport& r : reports)
        reps.push_back({{"mode", r.mode},
                        {"sigma_u", r.sigma_u},
                        {"sigma_p", r.sigma_p},
                        {"eta", r.eta},
                        {"iterations", r.iterations},
                        {"ads_converged", r.ads_converged},
                        {"residual_u", r.residual_u},
                        {"residual_p", r.residual_p}});

    json manifest;
    manifest["format"] = "pgdflow-archive";
    manifest["version"] = 1;
    manifest["complete"] = complete;
    manifest["status"] = status;
    manifest["message"] = message;
    manifest["case"] = expansion.case_name.empty() ? config.case_name : expansion.case_name;
    manifest["config"] = json::parse(config_to_json(config));
    manifest["byte_order"] = "little";
    manifest["mesh"] = {{"nx", mesh.nx()}, {"ny", mesh.ny()}, {"n_cells", nc}, {"n_boundary_faces", nb}};
    manifest["shapes"] = {{"fu", {nc + nb, 2}}, {"fp", {nc + nb}}};
    manifest["grid"] = {{"lo", grid.lo()}, {"hi", grid.hi()}, {"intervals", grid.n_intervals()}};
    manifest["n_bc_modes"] = expansion.n_bc_modes();
    manifest["modes"] = modes;
    manifest["reports"] = reps;
    open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
}

Archive load_archive(const fs::path& dir)
{
    std::ifstream is(dir / "manifest.json");
    if (!is) throw std::runtime_error("archive: no manifest.json in " + dir.string());
    json man;
    try {
        man = json::parse(is);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("archive: bad manifest: ") + e.what());
    }
    if (man.value("format", "") != "pgdflow-archive") throw std::runtime_error("archive: not a pgdflow archive");

    Archive a;
    a.config = parse_config(man.at("config").dump());
    a.flow = make_case(a.config.case_name, a.config.params);
    a.complete = man.at("complete").get<bool>();
    a.status = man.value("status", "");
    a.message = man.value("message", "");
    const Mesh2D& mesh = *a.flow.mesh;
    const ParametricGrid& grid = *a.flow.grid;
    const std::size_t nc = mesh.n_cells(), nb = mesh.n_boundary_faces();
    if (man.at("mesh").at("n_cells").get<std::size_t>() != nc ||
        man.at("mesh").at("n_boundary_faces").get<std::size_t>() != nb ||
        man.at("grid").at("intervals").get<int>() != grid.n_intervals())
        throw std::runtime_error("archive: manifest shapes do not match the rebuilt case");

    a.expansion.mesh = a.flow.mesh;
    a.expansion.grid = a.flow.grid;
    a.expansion.case_name = man.value("case", a.config.case_name);
    for (const json& jm : man.at("modes")) {
        Mode m;
        m.origin = jm.at("origin").get<std::string>() == "computed" ? ModeOrigin::computed
                                                                      : ModeOrigin::boundary_condition;
        m.sigma_u = jm.at("sigma_u").get<double>();
        m.sigma_p = jm.at("sigma_p").get<double>();
        m.iterations = jm.at("iterations").get<int>();
        const std::vector<double> fu = read_raw(dir / jm.at("fu").get<std::string>(), 2 * (nc + nb));
        const std::vector<double> fp = read_raw(dir / jm.at("fp").get<std::string>(), nc + nb);
        m.fu.cells.resize(nc);
        m.fu.boundary.resize(nb);
        for (std::size_t c = 0; c < nc; ++c) m.fu.cells[c] = {fu[2 * c], fu[2 * c + 1]};
        for (std::size_t b = 0; b < nb; ++b) m.fu.boundary[b] = {fu[2 * (nc + b)], fu[2 * (nc + b) + 1]};
        m.fp.cells.assign(fp.begin(), fp.begin() + nc);
        m.fp.boundary.assign(fp.begin() + nc, fp.end());

        const fs::path phi_path = dir / jm.at("phi").get<std::string>();
        std::ifstream ps(phi_path);
        if (!ps) throw std::runtime_error("archive: missing " + phi_path.string());
        std::string line;
        std::getline(ps, line);  // header
        std::vector<double> phi;
        while (std::getline(ps, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos) throw std::runtime_error("archive: bad row in " + phi_path.string());
            phi.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
        }
        if (static_cast<int>(phi.size()) != grid.size())
            throw std::runtime_error("archive: wrong node count in " + phi_path.string());
        m.phi = ParametricFunction(a.flow.grid, std::move(phi));
        a.expansion.modes.push_back(std::move(m));
    }
    for (const json& r : man.value("reports", json::array())) {
        ModeReport rep;
        rep.mode = r.at("mode").get<int>();
        rep.sigma_u = r.at("sigma_u").get<double>();
        rep.sigma_p = r.at("sigma_p").get<double>();
        rep.eta = r.at("eta").get<double>();
        rep.iterations = r.at("iterations").get<int>();
        rep.ads_converged = r.at("ads_converged").get<bool>();
        rep.residual_u = r.at("residual_u").get<double>();
        rep.residual_p = r.at("residual_p").get<double>();
        a.reports.push_back(rep);
    }
    return a;
}

}  // namespace pgdflow
