#include "pgdflow/simple.hpp"

#include <cmath>
#include <string>

namespace pgdflow {

namespace {

void check_size(std::size_t got, int want, const char* what)
{
    if (got != 0 && static_cast<int>(got) != want)
        throw std::invalid_argument(std::string("SpatialProblem: ") + what + " has wrong size");
}

void apply_dirichlet(const BoundaryConditions& bc, VectorField& u)
{
    for (std::size_t b = 0; b < bc.kind.size(); ++b)
        if (bc.kind[b] == BoundaryKind::dirichlet_velocity) u.boundary[b] = bc.value[b];
}

const FaceFluxField& convecting_flux(const SpatialProblem& problem, const FaceFluxField& state_flux)
{
    return problem.convection == ConvectionMode::self_convecting ? state_flux : problem.frozen_flux;
}

bool has_convection(const SpatialProblem& problem)
{
    return problem.convection == ConvectionMode::self_convecting || !problem.frozen_flux.face.empty();
}

double norm_or_zero(const Mesh2D& mesh, const std::vector<Vec2>& v)
{
    return v.empty() ? 0.0 : l2_norm(mesh, v);
}

}  // namespace

void validate(const SpatialProblem& problem)
{
    if (!problem.mesh) throw std::invalid_argument("SpatialProblem: mesh not set");
    const Mesh2D& mesh = *problem.mesh;
    if (static_cast<int>(problem.bc.kind.size()) != mesh.n_boundary_faces() ||
        problem.bc.value.size() != problem.bc.kind.size())
        throw std::invalid_argument("SpatialProblem: boundary conditions do not match the mesh");
    if (static_cast<int>(problem.diffusivity.size()) != mesh.n_cells())
        throw std::invalid_argument("SpatialProblem: diffusivity has wrong size");
    for (double d : problem.diffusivity)
        if (!(d >= 0.0) || !std::isfinite(d))
            throw std::invalid_argument("SpatialProblem: diffusivity must be finite and >= 0");
    if (!(problem.pressure_scale > 0.0) || !std::isfinite(problem.pressure_scale))
        throw std::invalid_argument("SpatialProblem: pressure scale must be > 0");
    if (problem.convection == ConvectionMode::frozen)
        check_size(problem.frozen_flux.face.size(), mesh.n_faces(), "frozen flux");
    if (problem.cross_field) check_field(mesh, *problem.cross_field, "SpatialProblem cross field");
    check_size(problem.source.size(), mesh.n_cells(), "source");
    check_size(problem.momentum_rhs.size(), mesh.n_cells(), "momentum rhs");
    check_size(problem.continuity_rhs.size(), mesh.n_cells(), "continuity rhs");
    if (!(problem.disc.upwind_blend >= 0.0 && problem.disc.upwind_blend <= 1.0))
        throw std::invalid_argument("SpatialProblem: upwind blend must lie in [0, 1]");
}

void validate(const SimpleSettings& s)
{
    auto in_unit = [](double a) { return a > 0.0 && a <= 1.0; };
    if (!in_unit(s.velocity_relaxation) || !in_unit(s.pressure_relaxation))
        throw std::invalid_argument("SimpleSettings: relaxation factors must lie in (0, 1]");
    if (s.pseudo_time && !(*s.pseudo_time > 0.0))
        throw std::invalid_argument("SimpleSettings: pseudo-time step must be > 0");
    if (!(s.momentum_tolerance > 0.0) || !(s.continuity_tolerance > 0.0))
        throw std::invalid_argument("SimpleSettings: tolerances must be > 0");
    if (s.max_iterations < 1) throw std::invalid_argument("SimpleSettings: max_iterations must be >= 1");
}

FlowState initial_state(const SpatialProblem& problem)
{
    const Mesh2D& mesh = *problem.mesh;
    FlowState st;
    st.u = VectorField(mesh);
    apply_dirichlet(problem.bc, st.u);
    st.p = ScalarField(mesh);
    st.flux = model_flux(mesh, problem.bc, problem.disc, st.u, st.p);
    return st;
}

ProblemResidual evaluate_residual(const SpatialProblem& problem, const VectorField& u,
                                  const ScalarField& p)
{
    const Mesh2D& mesh = *problem.mesh;
    const int n = mesh.n_cells();
    const double a3 = problem.pressure_scale;
    const FaceFluxField flux = model_flux(mesh, problem.bc, problem.disc, u, p);

    std::vector<Vec2> conv = has_convection(problem)
                                 ? convection(mesh, convecting_flux(problem, flux), u, problem.disc)
                                 : std::vector<Vec2>(n);
    std::vector<Vec2> cross;
    if (problem.cross_field) cross = convection(mesh, flux, *problem.cross_field, problem.disc);
    const std::vector<Vec2> diff = diffusion(mesh, problem.diffusivity, u);
    const std::vector<Vec2> pf = pressure_force(mesh, p);

    ProblemResidual res;
    res.momentum.assign(n, Vec2{});
    std::vector<Vec2> data(n);
    for (int c = 0; c < n; ++c) {
        if (!problem.source.empty()) data[c] += mesh.cell_volume(c) * problem.source[c];
        if (!problem.momentum_rhs.empty()) data[c] += problem.momentum_rhs[c];
        Vec2 r = data[c] - conv[c] + diff[c] - a3 * pf[c];
        if (!cross.empty()) r -= cross[c];
        res.momentum[c] = r;
    }

    const std::vector<double> div = divergence(mesh, flux);
    res.continuity.assign(n, 0.0);
    std::vector<double> flux_scale(n, 0.0);
    for (int f = 0; f < mesh.n_faces(); ++f) {
        flux_scale[mesh.owner(f)] += std::abs(flux.face[f]);
        if (!mesh.is_boundary(f)) flux_scale[mesh.neighbour(f)] += std::abs(flux.face[f]);
    }
    for (int c = 0; c < n; ++c) {
        const double rhs = problem.continuity_rhs.empty() ? 0.0 : problem.continuity_rhs[c];
        res.continuity[c] = rhs - a3 * div[c];
        flux_scale[c] = a3 * flux_scale[c] + std::abs(rhs);
    }
    // The pinned reference cell carries the global compatibility defect.
    std::vector<double> cont = res.continuity;
    if (!problem.bc.has_outlet()) {
        cont[0] = 0.0;
        flux_scale[0] = 0.0;
    }

    const double m_scale = l2_norm(mesh, conv) + norm_or_zero(mesh, cross) + l2_norm(mesh, diff) +
                           a3 * l2_norm(mesh, pf) + l2_norm(mesh, data);
    const double c_scale = l2_norm(mesh, flux_scale);
    res.normalised.momentum = m_scale > 0.0 ? l2_norm(mesh, res.momentum) / m_scale : 0.0;
    res.normalised.continuity = c_scale > 0.0 ? l2_norm(mesh, cont) / c_scale : 0.0;
    return res;
}

MomentumPrediction momentum_predictor(const FlowState& state, const SpatialProblem& problem,
                                      const SimpleSettings& settings)
{
    const Mesh2D& mesh = *problem.mesh;
    const int n = mesh.n_cells();

    Relaxation relax;
    if (settings.pseudo_time)
        relax.pseudo_time = settings.pseudo_time;
    else
        relax.factor = settings.velocity_relaxation;

    FaceFluxField no_flux;
    const FaceFluxField* fc = &convecting_flux(problem, state.flux);
    if (!has_convection(problem)) {
        no_flux = FaceFluxField(mesh);
        fc = &no_flux;
    }
    MomentumSystem sys =
        assemble_convection_diffusion(mesh, problem.bc, *fc, problem.diffusivity, relax, state.u, problem.disc);

    const std::vector<Vec2> pf = pressure_force(mesh, state.p);
    std::vector<Vec2> cross;
    if (problem.cross_field) cross = convection(mesh, state.flux, *problem.cross_field, problem.disc);
    for (int c = 0; c < n; ++c) {
        Vec2& s = sys.source[c];
        if (!problem.source.empty()) s += mesh.cell_volume(c) * problem.source[c];
        if (!problem.momentum_rhs.empty()) s += problem.momentum_rhs[c];
        s -= problem.pressure_scale * pf[c];
        if (!cross.empty()) s -= cross[c];
    }

    MomentumPrediction pred;
    pred.u = state.u;
    std::vector<double> x(n), b(n);
    for (int comp = 0; comp < 2; ++comp) {
        for (int c = 0; c < n; ++c) {
            x[c] = comp == 0 ? state.u.cells[c].x : state.u.cells[c].y;
            b[c] = comp == 0 ? sys.source[c].x : sys.source[c].y;
        }
        solve_sparse(sys.matrix, b, x, settings.momentum_solver);
        for (int c = 0; c < n; ++c) (comp == 0 ? pred.u.cells[c].x : pred.u.cells[c].y) = x[c];
    }
    apply_dirichlet(problem.bc, pred.u);
    extrapolate_outlets(mesh, problem.bc, pred.u);

    pred.diag = sys.matrix.diag();
    pred.rau.resize(n);
    for (int c = 0; c < n; ++c) {
        if (!(pred.diag[c] > 0.0))
            throw std::runtime_error("momentum_predictor: non-positive diagonal in cell " +
                                     std::to_string(c));
        pred.rau[c] = mesh.cell_volume(c) / pred.diag[c];
    }
    return pred;
}

ScalarField pressure_poisson(const MomentumPrediction& pred, const FlowState& state,
                             const SpatialProblem& problem, const SimpleSettings& settings,
                             PressureFactorCache* cache)
{
    const Mesh2D& mesh = *problem.mesh;
    const int n = mesh.n_cells();
    const double a3 = problem.pressure_scale;

    const FaceFluxField f_star = model_flux(mesh, problem.bc, problem.disc, pred.u, state.p);
    const std::vector<double> div = divergence(mesh, f_star);

    LduMatrix lap(mesh.addressing());
    auto& diag = lap.diag();
    const int ni = mesh.n_interior_faces();
    for (int f = 0; f < ni; ++f) {
        const int o = mesh.owner(f), nb = mesh.neighbour(f);
        const double w = mesh.weight(f);
        const double g = a3 * (w * pred.rau[o] + (1.0 - w) * pred.rau[nb]) * mesh.area(f) / mesh.delta(f);
        diag[o] += g;
        diag[nb] += g;
        lap.upper()[f] = -g;
        lap.lower()[f] = -g;
    }
    for (int f = ni; f < mesh.n_faces(); ++f)
        if (problem.bc.kind[mesh.boundary_index(f)] == BoundaryKind::outlet) {
            const int o = mesh.owner(f);
            diag[o] += a3 * pred.rau[o] * mesh.area(f) / mesh.delta(f);
        }

    std::vector<double> b(n), x(n, 0.0);
    for (int c = 0; c < n; ++c) {
        const double rhs = problem.continuity_rhs.empty() ? 0.0 : problem.continuity_rhs[c];
        b[c] = rhs / a3 - div[c];
    }
    if (!problem.bc.has_outlet()) {
        // Symmetric elimination of the reference value p'_0 = 0.
        b[0] = 0.0;
        const auto& addr = *mesh.addressing();
        for (std::size_t f = 0; f < addr.lower.size(); ++f)
            if (addr.lower[f] == 0) lap.upper()[f] = lap.lower()[f] = 0.0;
    }
    if (cache) {
        if (!cache->factor || cache->last_iterations > settings.pressure_refactor_iterations)
            cache->factor = std::make_unique<FactorisedPreconditioner>(lap);
        cache->last_iterations = solve_pcg(lap, b, x, settings.pressure_solver, *cache->factor).iterations;
    } else {
        solve_sparse(lap, b, x, settings.pressure_solver);
    }
    return pressure_with_boundary(mesh, problem.bc, x);
}

void velocity_correction(const MomentumPrediction& pred, const ScalarField& p_corr,
                         const SpatialProblem& problem, const SimpleSettings& settings,
                         FlowState& state)
{
    const Mesh2D& mesh = *problem.mesh;
    const double a3 = problem.pressure_scale;
    const std::vector<Vec2> grad = gauss_gradient(mesh, p_corr);
    state.u = pred.u;
    for (int c = 0; c < mesh.n_cells(); ++c) state.u.cells[c] -= (a3 * pred.rau[c]) * grad[c];
    extrapolate_outlets(mesh, problem.bc, state.u);
    for (int c = 0; c < mesh.n_cells(); ++c)
        state.p.cells[c] += settings.pressure_relaxation * p_corr.cells[c];
    apply_pressure_boundary(mesh, problem.bc, state.p);
    state.flux = model_flux(mesh, problem.bc, problem.disc, state.u, state.p);
}

FlowState simple_solve(const SpatialProblem& problem, const SimpleSettings& settings,
                       std::optional<FlowState> init)
{
    validate(problem);
    validate(settings);
    const Mesh2D& mesh = *problem.mesh;

    FlowState state = init ? std::move(*init) : initial_state(problem);
    check_field(mesh, state.u, "simple_solve initial velocity");
    if (static_cast<int>(state.p.cells.size()) != mesh.n_cells())
        throw std::invalid_argument("simple_solve: initial pressure has wrong size");
    apply_dirichlet(problem.bc, state.u);
    extrapolate_outlets(mesh, problem.bc, state.u);
    apply_pressure_boundary(mesh, problem.bc, state.p);
    state.flux = model_flux(mesh, problem.bc, problem.disc, state.u, state.p);
    state.converged = false;

    PressureFactorCache cache;
    for (int it = 0; it < settings.max_iterations; ++it) {
        const MomentumPrediction pred = momentum_predictor(state, problem, settings);
        const ScalarField p_corr = pressure_poisson(pred, state, problem, settings, &cache);
        velocity_correction(pred, p_corr, problem, settings, state);
        ++state.iterations;

        const OuterResidual r = evaluate_residual(problem, state.u, state.p).normalised;
        if (!std::isfinite(r.momentum) || !std::isfinite(r.continuity)) {
            state.history.push_back(r);
            break;
        }
        state.history.push_back(r);
        if (r.momentum <= settings.momentum_tolerance && r.continuity <= settings.continuity_tolerance) {
            state.converged = true;
            break;
        }
    }
    return state;
}

}  // namespace pgdflow
