#include "pgdflow/cases.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pgdflow {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double factorial(int n)
{
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

}  // namespace

double kovasznay_lambda(double mu)
{
    if (!(mu > 0.0)) throw std::domain_error("kovasznay_lambda: viscosity must be > 0");
    const double a = 1.0 / (2.0 * mu);
    return a - std::sqrt(a * a + two_pi * two_pi);
}

KovasznayPoint kovasznay_exact(Vec2 x, double mu, double c)
{
    const double lam = kovasznay_lambda(mu);
    const double e = std::exp(lam * x.x);
    KovasznayPoint s;
    s.u = {1.0 - e * std::cos(two_pi * x.y), lam / two_pi * e * std::sin(two_pi * x.y)};
    s.p = 0.5 * (1.0 - e * e) + c;
    return s;
}

double kovasznay_pressure_constant(Vec2 reference, double mu)
{
    return -kovasznay_exact(reference, mu).p;
}

std::vector<TaylorTerm> taylor_terms(int order)
{
    if (order < 1) throw std::invalid_argument("taylor_terms: order must be >= 1");
    // u_x = 1 - cos(2 pi y) sum_{j<order} (lam x)^j / j!
    // u_y = sin(2 pi y) / (2 pi) sum_{j<order} lam^{j+1} x^j / j!
    std::vector<TaylorTerm> out;
    out.push_back({0, [](Vec2 x) { return Vec2{1.0 - std::cos(two_pi * x.y), 0.0}; }});
    for (int j = 1; j <= order; ++j) {
        const bool has_x = j <= order - 1;
        const double cx = 1.0 / factorial(j), cy = 1.0 / (factorial(j - 1) * two_pi);
        out.push_back({j, [=](Vec2 x) {
                           const double ux = has_x ? -cx * std::pow(x.x, j) * std::cos(two_pi * x.y) : 0.0;
                           return Vec2{ux, cy * std::pow(x.x, j - 1) * std::sin(two_pi * x.y)};
                       }});
    }
    return out;
}

VectorField sample_velocity(const Mesh2D& mesh, const std::function<Vec2(Vec2)>& f)
{
    VectorField u(mesh);
    for (int c = 0; c < mesh.n_cells(); ++c) u.cells[c] = f(mesh.cell_centroid(c));
    for (int b = 0; b < mesh.n_boundary_faces(); ++b) u.boundary[b] = f(mesh.face_centroid(mesh.boundary_face(b)));
    return u;
}

FaceFluxField sample_flux(const Mesh2D& mesh, const std::function<Vec2(Vec2)>& f)
{
    FaceFluxField F(mesh);
    for (int i = 0; i < mesh.n_faces(); ++i) F.face[i] = dot(f(mesh.face_centroid(i)), mesh.normal(i)) * mesh.area(i);
    return F;
}

namespace {

ParametricFunction lambda_power(const GridPtr& grid, int power)
{
    return ParametricFunction::from(grid, [power](double mu) { return std::pow(kovasznay_lambda(mu), power); });
}

}  // namespace

SeparableVector taylor_separated_convection(int order, const GridPtr& grid, const Mesh2D& mesh)
{
    SeparableVector out;
    for (const TaylorTerm& t : taylor_terms(order))
        out.terms.emplace_back(lambda_power(grid, t.power), sample_velocity(mesh, t.field));
    return out;
}

SeparableFlux taylor_separated_flux(int order, const GridPtr& grid, const Mesh2D& mesh)
{
    SeparableFlux out;
    for (const TaylorTerm& t : taylor_terms(order))
        out.terms.emplace_back(lambda_power(grid, t.power), sample_flux(mesh, t.field));
    return out;
}

double lid_ramp(double x)
{
    if (x <= 0.0 || x >= 1.0) return 0.0;
    if (x < 0.06) return x / 0.06;
    if (x > 0.94) return (1.0 - x) / 0.06;
    return 1.0;
}

Vec2 lid_profile(double x, double mu) { return {400.0 * mu * lid_ramp(x), 0.0}; }

Vec2 jet_profile(JetWall wall, double y, double mu, bool smooth)
{
    const double w = 0.12;
    switch (wall) {
    case JetWall::right_bottom:
        if (y < 0.0 || y > w) return {};
        return {mu * (smooth ? -1.0 + std::cos(two_pi * y / w) : -1.0 - std::cos(two_pi * y / w)), 0.0};
    case JetWall::right_top:
    case JetWall::left_top:
        if (y < 1.0 - w || y > 1.0) return {};
        return {mu * (-1.0 + std::cos(-two_pi * (y - (1.0 - w)) / w)), 0.0};
    }
    return {};
}

double pressure_drop(const ScalarField& p, const Mesh2D& mesh, const std::string& patch)
{
    if (!mesh.has_patch(patch)) throw std::invalid_argument("pressure_drop: unknown patch '" + patch + "'");
    const auto faces = mesh.patch_faces(patch);
    if (faces.empty()) throw std::invalid_argument("pressure_drop: patch '" + patch + "' has no faces");
    double area = 0.0, sum = 0.0;
    for (int f : faces) {
        area += mesh.area(f);
        sum += mesh.area(f) * p.cells.at(mesh.owner(f));
    }
    return sum / area;
}

// ---------------------------------------------------------------------------

std::vector<std::string> case_names() { return {"kovasznay", "kovasznay_nonlinear", "lid", "jets"}; }

CaseParameters default_parameters(const std::string& name)
{
    CaseParameters p;
    // Tuned for the steady cavity flows up to Re 4000 with central differencing.
    p.solver.velocity_relaxation = 0.9;
    p.solver.pressure_relaxation = 0.2;
    p.solver.max_iterations = 20000;
    if (name == "kovasznay" || name == "kovasznay_nonlinear") {
        p.cells = 25;
        p.n_intervals = 10;
    } else if (name == "lid" || name == "jets") {
        p.cells = 96;
        p.n_intervals = 40;
    } else {
        throw std::invalid_argument("unknown case '" + name + "'");
    }
    return p;
}

namespace {

void check(const CaseParameters& p)
{
    if (p.cells < 2) throw std::invalid_argument("case: need at least 2 cells per side");
    if (p.n_intervals < 1) throw std::invalid_argument("case: need at least one parametric interval");
    if (p.upwind_blend < 0.0 || p.upwind_blend > 1.0) throw std::invalid_argument("case: upwind blend outside [0, 1]");
    if (p.taylor_order < 1) throw std::invalid_argument("case: Taylor order must be >= 1");
    validate(p.solver);
}

FlowCase kovasznay_case(const std::string& name, const CaseParameters& params)
{
    const bool nonlinear = name == "kovasznay_nonlinear";
    const double lo = 5e-3, hi = 1e-2, mid = 0.5 * (lo + hi);
    FlowCase fc;
    fc.name = name;
    fc.params = params;
    auto mesh = std::make_shared<Mesh2D>(
        Mesh2D::build_cartesian(params.cells, params.cells, {-1.0, -1.0}, {2.0, 2.0}, PatchLayout::uniform("boundary")));
    fc.mesh = mesh;
    fc.grid = std::make_shared<ParametricGrid>(lo, hi, params.n_intervals);
    const Mesh2D* m = mesh.get();

    Discretisation disc;
    disc.rc_tau = reference_rc_tau(*m, mid, 1.0);
    disc.upwind_blend = params.upwind_blend;
    disc.mean_boundary_convection = params.mean_boundary_convection;

    BoundarySpec dummy;
    dummy.wall("boundary");
    fc.data.mesh = mesh;
    fc.data.grid = fc.grid;
    fc.data.disc = disc;
    fc.data.bc = resolve_boundary(*m, dummy);
    fc.data.viscosity.terms.emplace_back(ParametricFunction::from(fc.grid, [](double mu) { return mu; }),
                                         std::vector<double>(m->n_cells(), 1.0));
    fc.data.convection = nonlinear ? ConvectionMode::self_convecting : ConvectionMode::frozen;
    if (!nonlinear) fc.data.frozen = taylor_separated_flux(params.taylor_order, fc.grid, *m);

    // One lift per power of lambda in the separated boundary datum, each a
    // frozen-convection solve at the interval midpoint.
    const FaceFluxField mid_flux = sample_flux(*m, [mid](Vec2 x) { return kovasznay_exact(x, mid).u; });
    for (const TaylorTerm& t : taylor_terms(params.taylor_order)) {
        BoundarySpec spec;
        spec.set("boundary", {BoundaryKind::dirichlet_velocity, t.field});
        SpatialProblem pb;
        pb.mesh = m;
        pb.bc = resolve_boundary(*m, spec);
        pb.disc = disc;
        pb.convection = ConvectionMode::frozen;
        pb.frozen_flux = mid_flux;
        pb.diffusivity.assign(m->n_cells(), mid);
        const int power = t.power;
        fc.bc_recipes.push_back({"lambda^" + std::to_string(power), std::move(pb), lambda_power(fc.grid, power)});
    }

    fc.full_order = [m, disc, nonlinear](double mu) {
        auto exact = [mu](Vec2 x) { return kovasznay_exact(x, mu).u; };
        BoundarySpec spec;
        spec.set("boundary", {BoundaryKind::dirichlet_velocity, exact});
        SpatialProblem pb;
        pb.mesh = m;
        pb.bc = resolve_boundary(*m, spec);
        pb.disc = disc;
        pb.diffusivity.assign(m->n_cells(), mu);
        if (nonlinear) {
            pb.convection = ConvectionMode::self_convecting;
        } else {
            pb.convection = ConvectionMode::frozen;
            pb.frozen_flux = sample_flux(*m, exact);
        }
        return pb;
    };
    const Vec2 ref = m->cell_centroid(0);
    fc.exact = [ref](Vec2 x, double mu) { return kovasznay_exact(x, mu, kovasznay_pressure_constant(ref, mu)); };
    return fc;
}

FlowCase lid_case(const CaseParameters& params)
{
    FlowCase fc;
    fc.name = "lid";
    fc.params = params;
    PatchLayout layout = PatchLayout::uniform("wall");
    layout[Edge::top].patch = "lid";
    auto mesh =
        std::make_shared<Mesh2D>(Mesh2D::build_cartesian(params.cells, params.cells, {0.0, 0.0}, {1.0, 1.0}, layout));
    fc.mesh = mesh;
    fc.grid = std::make_shared<ParametricGrid>(0.25, 1.0, params.n_intervals);
    const Mesh2D* m = mesh.get();
    const double nu = 0.1;

    Discretisation disc;
    disc.rc_tau = reference_rc_tau(*m, nu, 400.0);
    disc.upwind_blend = params.upwind_blend;
    disc.mean_boundary_convection = params.mean_boundary_convection;

    auto problem = [m, disc, nu](double mu) {
        BoundarySpec spec;
        spec.wall("wall");
        spec.set("lid", {BoundaryKind::dirichlet_velocity, [mu](Vec2 x) { return lid_profile(x.x, mu); }});
        SpatialProblem pb;
        pb.mesh = m;
        pb.bc = resolve_boundary(*m, spec);
        pb.disc = disc;
        pb.diffusivity.assign(m->n_cells(), nu);
        return pb;
    };
    fc.full_order = problem;

    fc.data.mesh = mesh;
    fc.data.grid = fc.grid;
    fc.data.disc = disc;
    fc.data.bc = problem(1.0).bc;
    fc.data.viscosity.terms.emplace_back(ParametricFunction::constant(fc.grid, 1.0),
                                         std::vector<double>(m->n_cells(), nu));
    fc.bc_recipes.push_back({"lid", problem(1.0), ParametricFunction::from(fc.grid, [](double mu) { return mu; })});
    return fc;
}

FlowCase jets_case(const CaseParameters& params)
{
    FlowCase fc;
    fc.name = "jets";
    fc.params = params;
    PatchLayout layout = PatchLayout::uniform("wall");
    layout[Edge::top].patch = "lid";
    layout[Edge::right].patch = "wall";
    layout[Edge::right].segments = {{"jet_right", 0.0, 0.12}, {"jet_right", 0.88, 1.0}};
    layout[Edge::left].patch = "wall";
    layout[Edge::left].segments = {{"outlet", 0.0, 0.12}, {"jet_left", 0.88, 1.0}};
    auto mesh =
        std::make_shared<Mesh2D>(Mesh2D::build_cartesian(params.cells, params.cells, {0.0, 0.0}, {1.0, 1.0}, layout));
    fc.mesh = mesh;
    fc.grid = std::make_shared<ParametricGrid>(0.0, 1.0, params.n_intervals);
    const Mesh2D* m = mesh.get();
    const double nu = 0.01;
    const bool smooth = params.smooth_jets;

    Discretisation disc;
    disc.rc_tau = reference_rc_tau(*m, nu, 10.0);
    disc.upwind_blend = params.upwind_blend;
    disc.mean_boundary_convection = params.mean_boundary_convection;

    // lid scale and jet scale enter separately so both lifts share one recipe
    auto problem = [m, disc, nu, smooth](double lid, double jets) {
        BoundarySpec spec;
        spec.wall("wall");
        spec.outlet("outlet");
        spec.set("lid", {BoundaryKind::dirichlet_velocity, [lid](Vec2 x) { return Vec2{10.0 * lid * lid_ramp(x.x), 0.0}; }});
        spec.set("jet_right", {BoundaryKind::dirichlet_velocity, [jets, smooth](Vec2 x) {
                                   return x.y < 0.5 ? jet_profile(JetWall::right_bottom, x.y, jets, smooth)
                                                    : jet_profile(JetWall::right_top, x.y, jets, smooth);
                               }});
        spec.set("jet_left", {BoundaryKind::dirichlet_velocity,
                              [jets, smooth](Vec2 x) { return jet_profile(JetWall::left_top, x.y, jets, smooth); }});
        SpatialProblem pb;
        pb.mesh = m;
        pb.bc = resolve_boundary(*m, spec);
        pb.disc = disc;
        pb.diffusivity.assign(m->n_cells(), nu);
        return pb;
    };
    fc.full_order = [problem](double mu) { return problem(1.0, mu); };

    fc.data.mesh = mesh;
    fc.data.grid = fc.grid;
    fc.data.disc = disc;
    fc.data.bc = problem(1.0, 1.0).bc;
    fc.data.viscosity.terms.emplace_back(ParametricFunction::constant(fc.grid, 1.0),
                                         std::vector<double>(m->n_cells(), nu));
    fc.bc_recipes.push_back({"lid", problem(1.0, 0.0), ParametricFunction::constant(fc.grid, 1.0)});
    fc.bc_recipes.push_back({"jets", problem(0.0, 1.0), ParametricFunction::from(fc.grid, [](double mu) { return mu; })});
    fc.qoi_patch = "jet_right";
    return fc;
}

}  // namespace

FlowCase make_case(const std::string& name, const CaseParameters& params)
{
    check(params);
    if (name == "kovasznay" || name == "kovasznay_nonlinear") return kovasznay_case(name, params);
    if (name == "lid") return lid_case(params);
    if (name == "jets") return jets_case(params);
    throw std::invalid_argument("unknown case '" + name + "'");
}

std::vector<ConvergenceLevel> kovasznay_convergence(const std::string& case_name, const CaseParameters& base,
                                                    const std::vector<int>& levels)
{
    if (case_name != "kovasznay" && case_name != "kovasznay_nonlinear")
        throw std::invalid_argument("convergence study needs a Kovasznay case, got '" + case_name + "'");
    std::vector<ConvergenceLevel> out;
    for (int n : levels) {
        const auto t0 = std::chrono::steady_clock::now();
        CaseParameters p = base;
        p.cells = n;
        const FlowCase fc = make_case(case_name, p);
        const Mesh2D& mesh = *fc.mesh;
        ConvergenceLevel lvl;
        lvl.cells = n;
        lvl.h = 1.0 / n;
        double eu = 0.0, nu = 0.0, ep = 0.0, np = 0.0;
        for (int j = 0; j < fc.grid->size(); ++j) {
            const double mu = fc.grid->node(j), w = fc.grid->weights()[j];
            const FlowState st = simple_solve(fc.full_order(mu), p.solver);
            lvl.converged = lvl.converged && st.converged;
            for (int c = 0; c < mesh.n_cells(); ++c) {
                const KovasznayPoint ex = fc.exact(mesh.cell_centroid(c), mu);
                const Vec2 du = st.u.cells[c] - ex.u;
                const double dp = st.p.cells[c] - ex.p;
                const double v = w * mesh.cell_volume(c);
                eu += v * dot(du, du);
                nu += v * dot(ex.u, ex.u);
                ep += v * dp * dp;
                np += v * ex.p * ex.p;
            }
        }
        lvl.err_u = std::sqrt(eu / nu);
        lvl.err_p = std::sqrt(ep / np);
        lvl.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(lvl);
    }
    return out;
}

double observed_order(double e_coarse, double e_fine, double h_coarse, double h_fine)
{
    return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

}  // namespace pgdflow
