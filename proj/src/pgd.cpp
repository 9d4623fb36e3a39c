#include "pgdflow/pgd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pgdflow {

namespace {

double dot_cells(std::span<const Vec2> a, std::span<const Vec2> b)
{
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += dot(a[c], b[c]);
    return s;
}

double dot_cells(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
    return s;
}

void add(std::vector<Vec2>& acc, double a, const std::vector<Vec2>& x)
{
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += a * x[c];
}

void add(std::vector<double>& acc, double a, const std::vector<double>& x)
{
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += a * x[c];
}

double param_norm(const ParametricGrid& grid, std::span<const double> v)
{
    std::vector<double> sq(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) sq[j] = v[j] * v[j];
    return std::sqrt(parametric_integral(grid, sq));
}

FaceFluxField mode_flux(const PgdData& data, const Mode& m)
{
    return model_flux(*data.mesh, data.bc, data.disc, m.velocity(), m.pressure());
}

std::vector<FaceFluxField> mode_fluxes(const PgdData& data, std::span<const Mode> modes)
{
    std::vector<FaceFluxField> out;
    out.reserve(modes.size());
    for (const Mode& m : modes) out.push_back(mode_flux(data, m));
    return out;
}

std::vector<Mode> with_predictor(std::span<const Mode> previous, const Mode& predictor)
{
    std::vector<Mode> trial(previous.begin(), previous.end());
    trial.push_back(predictor);
    return trial;
}

bool use_separated(const PgdData& data, const AdsSettings& s)
{
    switch (s.residual_evaluation) {
    case ResidualEvaluation::separated:
        return true;
    case ResidualEvaluation::direct:
        return false;
    default:
        return data.disc.upwind_blend == 0.0;
    }
}

}  // namespace

VectorField Mode::velocity() const
{
    VectorField u = fu;
    scale(u, sigma_u);
    return u;
}

ScalarField Mode::pressure() const
{
    ScalarField p = fp;
    scale(p, sigma_p);
    return p;
}

BoundaryConditions PgdData::homogeneous_bc() const
{
    BoundaryConditions h = bc;
    std::fill(h.value.begin(), h.value.end(), Vec2{});
    return h;
}

void validate(const PgdData& data)
{
    if (!data.mesh || !data.grid) throw std::invalid_argument("PgdData: mesh and grid are required");
    const Mesh2D& mesh = *data.mesh;
    if (static_cast<int>(data.bc.kind.size()) != mesh.n_boundary_faces())
        throw std::invalid_argument("PgdData: boundary conditions do not match the mesh");
    if (data.viscosity.terms.empty()) throw std::invalid_argument("PgdData: viscosity has no terms");
    for (const auto& [psi, d] : data.viscosity.terms) {
        if (psi.grid != data.grid) throw std::invalid_argument("PgdData: viscosity term on another grid");
        if (static_cast<int>(d.size()) != mesh.n_cells())
            throw std::invalid_argument("PgdData: viscosity term on another mesh");
    }
    for (int j = 0; j < data.grid->size(); ++j)
        for (double nu : evaluate_separable(data.viscosity, j))
            if (!(nu > 0.0)) throw std::invalid_argument("PgdData: viscosity must be positive on the grid");
    for (const auto& [eta, s] : data.source.terms) {
        if (eta.grid != data.grid) throw std::invalid_argument("PgdData: source term on another grid");
        if (static_cast<int>(s.cells.size()) != mesh.n_cells())
            throw std::invalid_argument("PgdData: source term on another mesh");
    }
    if (data.convection == ConvectionMode::frozen)
        for (const auto& [chi, f] : data.frozen.terms) {
            if (chi.grid != data.grid) throw std::invalid_argument("PgdData: convection term on another grid");
            if (static_cast<int>(f.face.size()) != mesh.n_faces())
                throw std::invalid_argument("PgdData: convection term on another mesh");
        }
}

int PgdExpansion::n_bc_modes() const
{
    return static_cast<int>(std::count_if(modes.begin(), modes.end(), [](const Mode& m) {
        return m.origin == ModeOrigin::boundary_condition;
    }));
}

int PgdExpansion::n_computed() const { return static_cast<int>(modes.size()) - n_bc_modes(); }

namespace {

std::pair<VectorField, ScalarField> combine(std::span<const Mode> modes, const std::vector<double>& coef)
{
    if (modes.empty()) throw std::invalid_argument("evaluate: expansion has no modes");
    VectorField u;
    u.cells.assign(modes[0].fu.cells.size(), Vec2{});
    u.boundary.assign(modes[0].fu.boundary.size(), Vec2{});
    ScalarField p;
    p.cells.assign(modes[0].fp.cells.size(), 0.0);
    p.boundary.assign(modes[0].fp.boundary.size(), 0.0);
    for (std::size_t m = 0; m < modes.size(); ++m) {
        axpy(modes[m].sigma_u * coef[m], modes[m].fu, u);
        axpy(modes[m].sigma_p * coef[m], modes[m].fp, p);
    }
    return {std::move(u), std::move(p)};
}

}  // namespace

std::pair<VectorField, ScalarField> evaluate_node(std::span<const Mode> modes, int node)
{
    std::vector<double> coef;
    for (const Mode& m : modes) coef.push_back(m.phi.values.at(node));
    return combine(modes, coef);
}

std::pair<VectorField, ScalarField> evaluate_online(const PgdExpansion& expansion, double mu)
{
    if (!expansion.grid->contains(mu))
        throw DomainError("parameter " + std::to_string(mu) + " outside the expansion interval");
    std::vector<double> coef;
    for (const Mode& m : expansion.modes) coef.push_back(m.phi.at(mu));
    return combine(expansion.modes, coef);
}

std::vector<Mode> compute_bc_modes(const std::vector<BcModeRecipe>& recipes, const SimpleSettings& settings)
{
    std::vector<Mode> out;
    for (const BcModeRecipe& r : recipes) {
        FlowState st = simple_solve(r.problem, settings);
        if (!st.converged) {
            std::ostringstream msg;
            msg << "boundary-condition mode '" << r.label << "' did not converge after " << st.iterations
                << " iterations";
            if (!st.history.empty())
                msg << " (momentum " << st.history.back().momentum << ", continuity "
                    << st.history.back().continuity << ")";
            throw std::runtime_error(msg.str());
        }
        const Mesh2D& mesh = *r.problem.mesh;
        Mode m;
        m.origin = ModeOrigin::boundary_condition;
        m.phi = r.phi;
        m.fu = std::move(st.u);
        m.fp = std::move(st.p);
        m.sigma_u = l2_norm(mesh, m.fu);
        m.sigma_p = l2_norm(mesh, m.fp);
        if (m.sigma_u > 0.0) scale(m.fu, 1.0 / m.sigma_u);
        if (m.sigma_p > 0.0) scale(m.fp, 1.0 / m.sigma_p);
        m.iterations = st.iterations;
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------

SpatialCoefficients spatial_coefficients(const ParametricFunction& phi_n, std::span<const Mode> modes,
                                         const PgdData& data)
{
    SpatialCoefficients c;
    for (const Mode& m : modes) c.alpha1.push_back(integral_of_product({&phi_n, &phi_n, &m.phi}));
    if (data.convection == ConvectionMode::frozen)
        for (const auto& [chi, f] : data.frozen.terms)
            c.alpha1_frozen.push_back(integral_of_product({&phi_n, &phi_n, &chi}));
    for (const auto& [psi, d] : data.viscosity.terms)
        c.alpha2.push_back(integral_of_product({&phi_n, &phi_n, &psi}));
    c.alpha3 = integral_of_product({&phi_n, &phi_n});
    return c;
}

SpatialResidual node_residual(const PgdData& data, std::span<const Mode> modes, int node)
{
    const Mesh2D& mesh = *data.mesh;
    const int n = mesh.n_cells();
    auto [u, p] = evaluate_node(modes, node);
    const FaceFluxField flux = model_flux(mesh, data.bc, data.disc, u, p);

    std::vector<Vec2> conv;
    if (data.convection == ConvectionMode::self_convecting) {
        conv = convection(mesh, flux, u, data.disc);
    } else if (!data.frozen.terms.empty()) {
        FaceFluxField a(mesh);
        for (const auto& [chi, f] : data.frozen.terms) axpy(chi[node], f, a);
        conv = convection(mesh, a, u, data.disc);
    } else {
        conv.assign(n, Vec2{});
    }
    const std::vector<double> nu = evaluate_separable(data.viscosity, node);
    const std::vector<Vec2> diff = diffusion(mesh, nu, u);
    const std::vector<Vec2> pf = pressure_force(mesh, p);

    SpatialResidual r;
    r.momentum.resize(n);
    std::vector<Vec2> src(n);
    if (!data.source.terms.empty()) src = evaluate_separable(data.source, node).cells;
    for (int c = 0; c < n; ++c)
        r.momentum[c] = mesh.cell_volume(c) * src[c] - conv[c] + diff[c] - pf[c];
    r.continuity = divergence(mesh, flux);
    for (double& v : r.continuity) v = -v;
    return r;
}

SpatialResidual spatial_residual_direct(const PgdData& data, std::span<const Mode> modes,
                                        const ParametricFunction& test)
{
    const Mesh2D& mesh = *data.mesh;
    const ParametricGrid& grid = *data.grid;
    SpatialResidual out{std::vector<Vec2>(mesh.n_cells()), std::vector<double>(mesh.n_cells(), 0.0)};
    for (int j = 0; j < grid.size(); ++j) {
        const double w = grid.weights()[j] * test[j];
        if (w == 0.0) continue;
        const SpatialResidual r = node_residual(data, modes, j);
        add(out.momentum, w, r.momentum);
        add(out.continuity, w, r.continuity);
    }
    return out;
}

SpatialResidual spatial_residual_separated(const PgdData& data, std::span<const Mode> modes,
                                           const ParametricFunction& test)
{
    const Mesh2D& mesh = *data.mesh;
    const int n = mesh.n_cells();
    const std::size_t nm = modes.size();
    SpatialResidual out{std::vector<Vec2>(n), std::vector<double>(n, 0.0)};
    if (nm == 0 && data.source.terms.empty()) return out;

    // source: alpha4 S
    for (const auto& [eta, s] : data.source.terms) {
        const double a4 = integral_of_product({&test, &eta});
        for (int c = 0; c < n; ++c) out.momentum[c] += (a4 * mesh.cell_volume(c)) * s.cells[c];
    }
    if (nm == 0) return out;

    std::vector<VectorField> U;
    std::vector<ScalarField> P;
    for (const Mode& m : modes) {
        U.push_back(m.velocity());
        P.push_back(m.pressure());
    }

    // convection: alpha5^{mq} div(U_m (x) U_q), or the frozen-field analogue
    if (data.convection == ConvectionMode::self_convecting) {
        const std::vector<FaceFluxField> F = mode_fluxes(data, modes);
        for (std::size_t m = 0; m < nm; ++m)
            for (std::size_t q = 0; q < nm; ++q) {
                const double a5 = integral_of_product({&test, &modes[m].phi, &modes[q].phi});
                if (a5 != 0.0) add(out.momentum, -a5, convection(mesh, F[q], U[m], data.disc));
            }
    } else {
        for (std::size_t m = 0; m < nm; ++m)
            for (const auto& [chi, f] : data.frozen.terms) {
                const double a5 = integral_of_product({&test, &modes[m].phi, &chi});
                if (a5 != 0.0) add(out.momentum, -a5, convection(mesh, f, U[m], data.disc));
            }
    }

    // diffusion: sum_i div(D_i grad(sum_m alpha6^{m,i} U_m))
    for (const auto& [psi, d] : data.viscosity.terms) {
        VectorField acc(mesh);
        for (std::size_t m = 0; m < nm; ++m)
            axpy(integral_of_product({&test, &modes[m].phi, &psi}), U[m], acc);
        add(out.momentum, 1.0, diffusion(mesh, d, acc));
    }

    // pressure and continuity: alpha7^m
    VectorField u7(mesh);
    ScalarField p7(mesh);
    for (std::size_t m = 0; m < nm; ++m) {
        const double a7 = integral_of_product({&test, &modes[m].phi});
        axpy(a7, U[m], u7);
        axpy(a7, P[m], p7);
    }
    add(out.momentum, -1.0, pressure_force(mesh, p7));
    out.continuity = divergence(mesh, model_flux(mesh, data.bc, data.disc, u7, p7));
    for (double& v : out.continuity) v = -v;
    return out;
}

SpatialProblem spatial_problem(const PgdData& data, std::span<const Mode> modes,
                               const SpatialCoefficients& coef, const SpatialResidual& residual)
{
    const Mesh2D& mesh = *data.mesh;
    SpatialProblem pb;
    pb.mesh = data.mesh.get();
    pb.bc = data.homogeneous_bc();
    pb.disc = data.disc;
    pb.convection = ConvectionMode::frozen;
    pb.frozen_flux = FaceFluxField(mesh);
    if (data.convection == ConvectionMode::self_convecting) {
        VectorField a(mesh);
        for (std::size_t m = 0; m < modes.size(); ++m) {
            axpy(coef.alpha1[m], mode_flux(data, modes[m]), pb.frozen_flux);
            axpy(coef.alpha1[m] * modes[m].sigma_u, modes[m].fu, a);
        }
        pb.cross_field = std::move(a);
    } else {
        for (std::size_t j = 0; j < data.frozen.terms.size(); ++j)
            axpy(coef.alpha1_frozen[j], data.frozen.terms[j].second, pb.frozen_flux);
    }
    pb.diffusivity.assign(mesh.n_cells(), 0.0);
    for (std::size_t i = 0; i < data.viscosity.terms.size(); ++i)
        add(pb.diffusivity, coef.alpha2[i], data.viscosity.terms[i].second);
    // round-off can leave tiny negatives where a term vanishes
    for (double& d : pb.diffusivity) d = std::max(d, 0.0);
    pb.pressure_scale = coef.alpha3;
    pb.momentum_rhs = residual.momentum;
    pb.continuity_rhs = residual.continuity;
    return pb;
}

// ---------------------------------------------------------------------------

ParametricCoefficients parametric_coefficients(const PgdData& data, std::span<const Mode> modes,
                                               const VectorField& tu, const ScalarField& tp)
{
    const Mesh2D& mesh = *data.mesh;
    const std::size_t nm = modes.size();
    ParametricCoefficients c;
    if (nm == 0) throw std::invalid_argument("parametric_coefficients: no modes");

    std::vector<VectorField> U;
    std::vector<ScalarField> P;
    for (const Mode& m : modes) {
        U.push_back(m.velocity());
        P.push_back(m.pressure());
    }
    const std::vector<FaceFluxField> F = mode_fluxes(data, modes);
    const VectorField& Un = U.back();
    const ScalarField& Pn = P.back();
    const FaceFluxField& Fn = F.back();

    if (data.convection == ConvectionMode::self_convecting) {
        for (std::size_t m = 0; m < nm; ++m)
            c.a1.push_back(dot_cells(tu.cells, convection(mesh, F[m], Un, data.disc)) +
                           dot_cells(tu.cells, convection(mesh, Fn, U[m], data.disc)));
        c.a5.assign(nm, std::vector<double>(nm, 0.0));
        for (std::size_t m = 0; m < nm; ++m)
            for (std::size_t q = 0; q < nm; ++q)
                c.a5[m][q] = dot_cells(tu.cells, convection(mesh, F[q], U[m], data.disc));
    } else {
        for (const auto& [chi, f] : data.frozen.terms)
            c.a1.push_back(dot_cells(tu.cells, convection(mesh, f, Un, data.disc)));
        c.a5.assign(nm, std::vector<double>(data.frozen.terms.size(), 0.0));
        for (std::size_t m = 0; m < nm; ++m)
            for (std::size_t j = 0; j < data.frozen.terms.size(); ++j)
                c.a5[m][j] = dot_cells(tu.cells, convection(mesh, data.frozen.terms[j].second, U[m], data.disc));
    }

    for (const auto& [psi, d] : data.viscosity.terms) c.a2.push_back(dot_cells(tu.cells, diffusion(mesh, d, Un)));
    c.a3 = dot_cells(tu.cells, pressure_force(mesh, Pn)) + dot_cells(tp.cells, divergence(mesh, Fn));

    for (const auto& [eta, s] : data.source.terms) {
        double a4 = 0.0;
        for (int cell = 0; cell < mesh.n_cells(); ++cell)
            a4 += mesh.cell_volume(cell) * dot(tu.cells[cell], s.cells[cell]);
        c.a4.push_back(a4);
    }
    c.a6.assign(nm, std::vector<double>(data.viscosity.terms.size(), 0.0));
    for (std::size_t m = 0; m < nm; ++m) {
        for (std::size_t i = 0; i < data.viscosity.terms.size(); ++i)
            c.a6[m][i] = dot_cells(tu.cells, diffusion(mesh, data.viscosity.terms[i].second, U[m]));
        c.a7.push_back(dot_cells(tu.cells, pressure_force(mesh, P[m])));
        c.a8.push_back(dot_cells(tp.cells, divergence(mesh, F[m])));
    }
    return c;
}

ParametricResidual parametric_residual_separated(const PgdData& data, std::span<const Mode> modes,
                                                 const ParametricCoefficients& c)
{
    const int nj = data.grid->size();
    const std::size_t nm = modes.size();
    ParametricResidual r{std::vector<double>(nj, 0.0), std::vector<double>(nj, 0.0)};
    for (int j = 0; j < nj; ++j) {
        double ru = 0.0;
        for (std::size_t i = 0; i < data.source.terms.size(); ++i) ru += c.a4[i] * data.source.terms[i].first[j];
        for (std::size_t m = 0; m < nm; ++m) {
            double conv = 0.0;
            if (data.convection == ConvectionMode::self_convecting)
                for (std::size_t q = 0; q < nm; ++q) conv += c.a5[m][q] * modes[q].phi[j];
            else
                for (std::size_t k = 0; k < data.frozen.terms.size(); ++k)
                    conv += c.a5[m][k] * data.frozen.terms[k].first[j];
            double diff = 0.0;
            for (std::size_t i = 0; i < data.viscosity.terms.size(); ++i)
                diff += c.a6[m][i] * data.viscosity.terms[i].first[j];
            ru += (-conv + diff - c.a7[m]) * modes[m].phi[j];
            r.rp[j] -= c.a8[m] * modes[m].phi[j];
        }
        r.ru[j] = ru;
    }
    return r;
}

ParametricResidual parametric_residual_direct(const PgdData& data, std::span<const Mode> modes,
                                              const VectorField& tu, const ScalarField& tp)
{
    const int nj = data.grid->size();
    ParametricResidual r{std::vector<double>(nj, 0.0), std::vector<double>(nj, 0.0)};
    for (int j = 0; j < nj; ++j) {
        const SpatialResidual res = node_residual(data, modes, j);
        r.ru[j] = dot_cells(tu.cells, res.momentum);
        r.rp[j] = dot_cells(tp.cells, res.continuity);
    }
    return r;
}

std::vector<double> collocation_denominator(const PgdData& data, std::span<const Mode> modes,
                                            const ParametricCoefficients& c)
{
    const int nj = data.grid->size();
    std::vector<double> den(nj, c.a3);
    for (int j = 0; j < nj; ++j) {
        if (data.convection == ConvectionMode::self_convecting)
            for (std::size_t m = 0; m < modes.size(); ++m) den[j] += c.a1[m] * modes[m].phi[j];
        else
            for (std::size_t k = 0; k < data.frozen.terms.size(); ++k)
                den[j] += c.a1[k] * data.frozen.terms[k].first[j];
        for (std::size_t i = 0; i < data.viscosity.terms.size(); ++i)
            den[j] -= c.a2[i] * data.viscosity.terms[i].first[j];
    }
    return den;
}

ParametricFunction parametric_iteration(const GridPtr& grid, std::span<const double> den,
                                        const ParametricResidual& residual, double threshold)
{
    const int nj = grid->size();
    if (static_cast<int>(den.size()) != nj || static_cast<int>(residual.ru.size()) != nj ||
        static_cast<int>(residual.rp.size()) != nj)
        throw std::invalid_argument("parametric_iteration: sizes do not match the grid");
    double max_den = 0.0;
    for (double d : den) max_den = std::max(max_den, std::abs(d));
    std::vector<double> dphi(nj, 0.0);
    for (int j = 0; j < nj; ++j) {
        const double rhs = residual.ru[j] + residual.rp[j];
        if (std::abs(den[j]) <= threshold * max_den || den[j] == 0.0) {
            if (rhs == 0.0) continue;
            throw SingularCollocation("parametric iteration: singular collocation at node " + std::to_string(j) +
                                          " (mu = " + std::to_string(grid->node(j)) + ")",
                                      j);
        }
        dphi[j] = rhs / den[j];
    }
    return ParametricFunction(grid, std::move(dphi));
}

// ---------------------------------------------------------------------------

void validate(const AdsSettings& s)
{
    if (!(s.greedy_tolerance > 0.0) || !(s.amplitude_tolerance > 0.0) || !(s.residual_tolerance > 0.0))
        throw std::invalid_argument("AdsSettings: tolerances must be > 0");
    if (s.max_alternating < 1 || s.max_modes < 1)
        throw std::invalid_argument("AdsSettings: iteration limits must be >= 1");
    if (!(s.predictor_amplitude > 0.0)) throw std::invalid_argument("AdsSettings: predictor amplitude must be > 0");
    validate(s.spatial_solver);
}

AdsState initial_ads_state(const PgdData& data, const Mode& last, double relative_amplitude)
{
    const Mesh2D& mesh = *data.mesh;
    AdsState st;
    Mode& m = st.mode;
    m.origin = ModeOrigin::computed;
    m.fu = last.fu;
    m.fp = last.fp;
    // Increments live in the homogeneous space: drop Dirichlet data inherited
    // from a boundary-condition mode.
    for (int b = 0; b < mesh.n_boundary_faces(); ++b)
        if (data.bc.kind[b] == BoundaryKind::dirichlet_velocity) m.fu.boundary[b] = Vec2{};
    extrapolate_outlets(mesh, data.bc, m.fu);
    apply_pressure_boundary(mesh, data.bc, m.fp);
    const double nu = l2_norm(mesh, m.fu), np = l2_norm(mesh, m.fp);
    if (nu > 0.0) scale(m.fu, 1.0 / nu);
    if (np > 0.0) scale(m.fp, 1.0 / np);

    m.phi = ParametricFunction::constant(data.grid, 1.0);
    const double pn = m.phi.norm();
    for (double& v : m.phi.values) v /= pn;

    const double weight = relative_amplitude * last.phi.norm();
    m.sigma_u = nu > 0.0 ? weight * last.sigma_u : 0.0;
    m.sigma_p = np > 0.0 ? weight * last.sigma_p : 0.0;
    return st;
}

SpatialUpdate spatial_iteration(const PgdData& data, std::span<const Mode> previous, const AdsSettings& settings,
                                AdsState& state)
{
    const Mesh2D& mesh = *data.mesh;
    const std::vector<Mode> trial = with_predictor(previous, state.mode);
    const ParametricFunction& phi = state.mode.phi;
    const SpatialCoefficients coef = spatial_coefficients(phi, trial, data);
    const SpatialResidual res = use_separated(data, settings) ? spatial_residual_separated(data, trial, phi)
                                                               : spatial_residual_direct(data, trial, phi);
    state.res_u = l2_norm(mesh, res.momentum);
    state.res_p = l2_norm(mesh, res.continuity);
    if (state.k == 0) {
        state.typ_u = state.res_u;
        state.typ_p = state.res_p;
    }

    SpatialProblem pb = spatial_problem(data, trial, coef, res);
    if (pb.cross_field && settings.cross_convection == CrossConvection::previous_increment) {
        if (!state.previous_du.cells.empty()) {
            const FaceFluxField f = model_flux(mesh, pb.bc, data.disc, state.previous_du, state.previous_dp);
            add(pb.momentum_rhs, -1.0, convection(mesh, f, *pb.cross_field, data.disc));
        }
        pb.cross_field.reset();
    }
    SpatialUpdate up;
    up.solve = simple_solve(pb, settings.spatial_solver);
    state.spatial_solver_iterations += up.solve.iterations;
    const OuterResidual last = up.solve.history.empty() ? OuterResidual{} : up.solve.history.back();
    if (!std::isfinite(last.momentum) || !std::isfinite(last.continuity))
        throw std::runtime_error("spatial iteration " + std::to_string(state.k) + ": solver diverged");
    up.du = up.solve.u;
    up.dp = up.solve.p;
    state.previous_du = up.du;
    state.previous_dp = up.dp;
    return up;
}

bool normalize_and_update(AdsState& st, const Mesh2D& mesh, const VectorField& du, const ScalarField& dp)
{
    Mode& m = st.mode;
    VectorField u = m.velocity();
    axpy(1.0, du, u);
    ScalarField p = m.pressure();
    axpy(1.0, dp, p);
    m.sigma_u = l2_norm(mesh, u);
    m.sigma_p = l2_norm(mesh, p);
    if (m.sigma_u > 0.0) {
        scale(u, 1.0 / m.sigma_u);
        m.fu = std::move(u);
    }
    if (m.sigma_p > 0.0) {
        scale(p, 1.0 / m.sigma_p);
        m.fp = std::move(p);
    }
    st.eps_u = m.sigma_u > 0.0 ? l2_norm(mesh, du) / m.sigma_u : 0.0;
    st.eps_p = m.sigma_p > 0.0 ? l2_norm(mesh, dp) / m.sigma_p : 0.0;
    return m.sigma_u > 0.0 || m.sigma_p > 0.0;
}

ParametricFunction parametric_step(const PgdData& data, std::span<const Mode> previous, const AdsSettings& settings,
                                   AdsState& state)
{
    const std::vector<Mode> trial = with_predictor(previous, state.mode);
    const VectorField tu = state.mode.velocity();
    const ScalarField tp = state.mode.pressure();
    const ParametricCoefficients coef = parametric_coefficients(data, trial, tu, tp);
    const std::vector<double> den = collocation_denominator(data, trial, coef);
    const ParametricResidual res = use_separated(data, settings)
                                       ? parametric_residual_separated(data, trial, coef)
                                       : parametric_residual_direct(data, trial, tu, tp);
    std::vector<double> total(res.ru.size());
    for (std::size_t j = 0; j < total.size(); ++j) total[j] = res.ru[j] + res.rp[j];
    state.res_phi = param_norm(*data.grid, total);
    if (state.k == 0) state.typ_phi = state.res_phi;
    return parametric_iteration(data.grid, den, res);
}

bool normalize_and_update(AdsState& st, const ParametricFunction& dphi)
{
    Mode& m = st.mode;
    ParametricFunction phi = m.phi;
    for (int j = 0; j < phi.size(); ++j) phi.values[j] += dphi[j];
    st.sigma_phi = phi.norm();
    if (!(st.sigma_phi > 0.0)) return false;
    for (double& v : phi.values) v /= st.sigma_phi;
    m.phi = std::move(phi);
    m.sigma_u *= st.sigma_phi;
    m.sigma_p *= st.sigma_phi;
    st.eps_phi = dphi.norm() / st.sigma_phi;
    return true;
}

double relative_amplitude(std::span<const Mode> computed)
{
    if (computed.empty()) throw std::invalid_argument("relative_amplitude: no computed modes");
    double su = 0.0, sp = 0.0;
    for (const Mode& m : computed) {
        su += m.sigma_u;
        sp += m.sigma_p;
    }
    const double ru = su > 0.0 ? computed.back().sigma_u / su : 0.0;
    const double rp = sp > 0.0 ? computed.back().sigma_p / sp : 0.0;
    return std::sqrt(ru * ru + rp * rp);
}

double relative_amplitude(const PgdExpansion& expansion)
{
    std::vector<Mode> computed;
    for (const Mode& m : expansion.modes)
        if (m.origin == ModeOrigin::computed) computed.push_back(m);
    return relative_amplitude(computed);
}

std::string to_string(EnrichmentStatus s)
{
    switch (s) {
    case EnrichmentStatus::converged:
        return "converged";
    case EnrichmentStatus::max_modes:
        return "max_modes";
    case EnrichmentStatus::degenerate:
        return "degenerate";
    case EnrichmentStatus::solver_failure:
        return "solver_failure";
    }
    return "unknown";
}

std::pair<double, double> global_residual(const PgdData& data, std::span<const Mode> modes)
{
    const ParametricGrid& grid = *data.grid;
    double su = 0.0, sp = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
        const SpatialResidual r = node_residual(data, modes, j);
        const double nu = l2_norm(*data.mesh, r.momentum), np = l2_norm(*data.mesh, r.continuity);
        su += grid.weights()[j] * nu * nu;
        sp += grid.weights()[j] * np * np;
    }
    return {std::sqrt(su), std::sqrt(sp)};
}

namespace {

bool greedy_done(const AdsSettings& s, std::span<const Mode> computed, double eta)
{
    const Mode& last = computed.back();
    switch (s.criterion) {
    case GreedyCriterion::relative_amplitude:
        return eta <= s.greedy_tolerance;
    case GreedyCriterion::first_amplitude: {
        const Mode& first = computed.front();
        return last.sigma_u <= s.greedy_tolerance * first.sigma_u &&
               last.sigma_p <= s.greedy_tolerance * first.sigma_p;
    }
    case GreedyCriterion::amplitude_sum: {
        double su = 0.0, sp = 0.0;
        for (const Mode& m : computed) {
            su += m.sigma_u;
            sp += m.sigma_p;
        }
        return last.sigma_u < s.greedy_tolerance * su && last.sigma_p <= s.greedy_tolerance * sp;
    }
    }
    return false;
}

}  // namespace

EnrichmentResult enrich(const PgdData& data, std::vector<Mode> bc_modes, const AdsSettings& settings,
                        const ProgressSink& sink)
{
    validate(data);
    validate(settings);
    if (bc_modes.empty()) throw std::invalid_argument("enrich: at least one boundary-condition mode is required");
    const Mesh2D& mesh = *data.mesh;

    EnrichmentResult result;
    result.expansion.mesh = data.mesh;
    result.expansion.grid = data.grid;
    result.expansion.modes = std::move(bc_modes);
    std::tie(result.initial_residual_u, result.initial_residual_p) =
        global_residual(data, result.expansion.modes);
    result.status = EnrichmentStatus::max_modes;

    std::vector<Mode> computed;
    for (int n = 1; n <= settings.max_modes; ++n) {
        const std::vector<Mode>& accepted = result.expansion.modes;
        AdsState st = initial_ads_state(data, accepted.back(), settings.predictor_amplitude);
        bool ads_converged = false;
        try {
            for (st.k = 0; st.k < settings.max_alternating;) {
                const SpatialUpdate up = spatial_iteration(data, accepted, settings, st);
                if (!normalize_and_update(st, mesh, up.du, up.dp)) {
                    result.status = EnrichmentStatus::degenerate;
                    result.message = "mode " + std::to_string(n) + ": zero spatial amplitude";
                    break;
                }
                const ParametricFunction dphi = parametric_step(data, accepted, settings, st);
                if (!normalize_and_update(st, dphi)) {
                    result.status = EnrichmentStatus::degenerate;
                    result.message = "mode " + std::to_string(n) + ": zero parametric amplitude";
                    break;
                }
                ++st.k;
                const double eta = settings.amplitude_tolerance, rt = settings.residual_tolerance;
                if (st.eps_u <= eta && st.eps_p <= eta && st.eps_phi <= eta && st.res_u <= rt * st.typ_u &&
                    st.res_p <= rt * st.typ_p && st.res_phi <= rt * st.typ_phi) {
                    ads_converged = true;
                    break;
                }
            }
        } catch (const std::exception& e) {
            result.status = EnrichmentStatus::solver_failure;
            result.message = "mode " + std::to_string(n) + ", alternating iteration " + std::to_string(st.k) +
                             ": " + e.what();
            return result;
        }
        if (result.status == EnrichmentStatus::degenerate) return result;

        st.mode.iterations = st.k;
        result.expansion.modes.push_back(st.mode);
        computed.push_back(st.mode);

        ModeReport rep;
        rep.mode = n;
        rep.sigma_u = st.mode.sigma_u;
        rep.sigma_p = st.mode.sigma_p;
        rep.eta = relative_amplitude(computed);
        rep.iterations = st.k;
        rep.ads_converged = ads_converged;
        std::tie(rep.residual_u, rep.residual_p) = global_residual(data, result.expansion.modes);
        result.reports.push_back(rep);
        if (sink) sink(rep);

        if (greedy_done(settings, computed, rep.eta)) {
            result.status = EnrichmentStatus::converged;
            break;
        }
    }
    if (result.status == EnrichmentStatus::max_modes)
        result.message = "reached " + std::to_string(settings.max_modes) + " computed modes";
    return result;
}

}  // namespace pgdflow
