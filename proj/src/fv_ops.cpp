#include "pgdflow/fv_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pgdflow {

double reference_rc_tau(const Mesh2D& mesh, double nu_ref, double u_ref)
{
    const double dx = mesh.dx(), dy = mesh.dy();
    const double a_ref = 2.0 * nu_ref * (dy / dx + dx / dy) + u_ref * (dx + dy);
    if (!(a_ref > 0.0)) throw std::invalid_argument("reference_rc_tau: need nu_ref or u_ref > 0");
    return dx * dy / a_ref;
}

double l2_norm(const Mesh2D& mesh, std::span<const double> cells)
{
    double s = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) s += cells[c] * cells[c] * mesh.cell_volume(c);
    return std::sqrt(s);
}

double l2_norm(const Mesh2D& mesh, std::span<const Vec2> cells)
{
    double s = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) s += dot(cells[c], cells[c]) * mesh.cell_volume(c);
    return std::sqrt(s);
}

std::vector<Vec2> gauss_gradient(const Mesh2D& mesh, const ScalarField& f)
{
    if (static_cast<int>(f.cells.size()) != mesh.n_cells())
        throw std::invalid_argument("gauss_gradient: cell count mismatch");
    if (static_cast<int>(f.boundary.size()) != mesh.n_boundary_faces())
        throw std::invalid_argument("gauss_gradient: boundary values missing");
    std::vector<Vec2> g = pressure_force(mesh, f);
    for (int c = 0; c < mesh.n_cells(); ++c) g[c] *= 1.0 / mesh.cell_volume(c);
    return g;
}

std::vector<Vec2> pressure_force(const Mesh2D& mesh, const ScalarField& p)
{
    std::vector<Vec2> g(mesh.n_cells());
    const int ni = mesh.n_interior_faces();
    for (int f = 0; f < ni; ++f) {
        const int o = mesh.owner(f), n = mesh.neighbour(f);
        const double w = mesh.weight(f);
        const Vec2 s = mesh.normal(f) * (mesh.area(f) * (w * p.cells[o] + (1.0 - w) * p.cells[n]));
        g[o] += s;
        g[n] -= s;
    }
    for (int f = ni; f < mesh.n_faces(); ++f)
        g[mesh.owner(f)] += mesh.normal(f) * (mesh.area(f) * p.boundary[mesh.boundary_index(f)]);
    return g;
}

void apply_pressure_boundary(const Mesh2D& mesh, const BoundaryConditions& bc, ScalarField& p)
{
    p.boundary.resize(mesh.n_boundary_faces());
    for (int b = 0; b < mesh.n_boundary_faces(); ++b)
        p.boundary[b] = bc.kind[b] == BoundaryKind::outlet
                            ? 0.0
                            : p.cells[mesh.owner(mesh.boundary_face(b))];
}

ScalarField pressure_with_boundary(const Mesh2D& mesh, const BoundaryConditions& bc,
                                   std::span<const double> p_cells)
{
    ScalarField p;
    p.cells.assign(p_cells.begin(), p_cells.end());
    apply_pressure_boundary(mesh, bc, p);
    return p;
}

void extrapolate_outlets(const Mesh2D& mesh, const BoundaryConditions& bc, VectorField& u)
{
    for (int b = 0; b < mesh.n_boundary_faces(); ++b)
        if (bc.kind[b] == BoundaryKind::outlet)
            u.boundary[b] = u.cells[mesh.owner(mesh.boundary_face(b))];
}

FaceFluxField interpolated_flux(const Mesh2D& mesh, const VectorField& u)
{
    FaceFluxField flux(mesh);
    const int ni = mesh.n_interior_faces();
    for (int f = 0; f < ni; ++f) {
        const double w = mesh.weight(f);
        const Vec2 uf = w * u.cells[mesh.owner(f)] + (1.0 - w) * u.cells[mesh.neighbour(f)];
        flux.face[f] = dot(uf, mesh.normal(f)) * mesh.area(f);
    }
    for (int f = ni; f < mesh.n_faces(); ++f)
        flux.face[f] = dot(u.boundary[mesh.boundary_index(f)], mesh.normal(f)) * mesh.area(f);
    return flux;
}

namespace {

FaceFluxField rhie_chow_impl(const Mesh2D& mesh, const BoundaryConditions& bc, const VectorField& u,
                             const ScalarField& p, std::span<const double> rau)
{
    FaceFluxField flux = interpolated_flux(mesh, u);
    const std::vector<Vec2> grad = gauss_gradient(mesh, p);
    const int ni = mesh.n_interior_faces();
    for (int f = 0; f < ni; ++f) {
        const int o = mesh.owner(f), n = mesh.neighbour(f);
        const double w = mesh.weight(f);
        const double tau = w * rau[o] + (1.0 - w) * rau[n];
        const double sn_grad = (p.cells[n] - p.cells[o]) / mesh.delta(f);
        const double avg_grad = dot(w * grad[o] + (1.0 - w) * grad[n], mesh.normal(f));
        flux.face[f] -= tau * mesh.area(f) * (sn_grad - avg_grad);
    }
    for (int f = ni; f < mesh.n_faces(); ++f) {
        const int b = mesh.boundary_index(f);
        if (bc.kind[b] != BoundaryKind::outlet) continue;
        const int o = mesh.owner(f);
        const double sn_grad = (p.boundary[b] - p.cells[o]) / mesh.delta(f);
        flux.face[f] -= rau[o] * mesh.area(f) * (sn_grad - dot(grad[o], mesh.normal(f)));
    }
    return flux;
}

}  // namespace

FaceFluxField rhie_chow_flux(const Mesh2D& mesh, const BoundaryConditions& bc, const VectorField& u,
                             const ScalarField& p, std::span<const double> momentum_diag)
{
    if (static_cast<int>(momentum_diag.size()) != mesh.n_cells())
        throw std::invalid_argument("rhie_chow_flux: momentum diagonal size mismatch");
    std::vector<double> rau(mesh.n_cells());
    for (int c = 0; c < mesh.n_cells(); ++c) {
        if (momentum_diag[c] == 0.0)
            throw std::invalid_argument("rhie_chow_flux: zero momentum diagonal in cell " +
                                        std::to_string(c));
        rau[c] = mesh.cell_volume(c) / momentum_diag[c];
    }
    return rhie_chow_impl(mesh, bc, u, p, rau);
}

FaceFluxField model_flux(const Mesh2D& mesh, const BoundaryConditions& bc, const Discretisation& disc,
                         const VectorField& u, const ScalarField& p)
{
    if (disc.rc_tau == 0.0) return interpolated_flux(mesh, u);
    const std::vector<double> rau(mesh.n_cells(), disc.rc_tau);
    return rhie_chow_impl(mesh, bc, u, p, rau);
}

std::vector<Vec2> convection(const Mesh2D& mesh, const FaceFluxField& flux, const VectorField& u,
                             const Discretisation& disc)
{
    std::vector<Vec2> out(mesh.n_cells());
    const int ni = mesh.n_interior_faces();
    const double beta = disc.upwind_blend;
    for (int f = 0; f < ni; ++f) {
        const int o = mesh.owner(f), n = mesh.neighbour(f);
        const double F = flux.face[f];
        const double w = mesh.weight(f);
        Vec2 uf = w * u.cells[o] + (1.0 - w) * u.cells[n];
        if (beta != 0.0) uf = (1.0 - beta) * uf + beta * (F >= 0.0 ? u.cells[o] : u.cells[n]);
        const Vec2 c = F * uf;
        out[o] += c;
        out[n] -= c;
    }
    for (int f = ni; f < mesh.n_faces(); ++f) {
        const int o = mesh.owner(f);
        Vec2 ub = u.boundary[mesh.boundary_index(f)];
        if (disc.mean_boundary_convection) ub = 0.5 * (ub + u.cells[o]);
        out[o] += flux.face[f] * ub;
    }
    return out;
}

std::vector<Vec2> diffusion(const Mesh2D& mesh, std::span<const double> diffusivity,
                            const VectorField& u)
{
    std::vector<Vec2> out(mesh.n_cells());
    const int ni = mesh.n_interior_faces();
    for (int f = 0; f < ni; ++f) {
        const int o = mesh.owner(f), n = mesh.neighbour(f);
        const double w = mesh.weight(f);
        const double g = (w * diffusivity[o] + (1.0 - w) * diffusivity[n]) * mesh.area(f) / mesh.delta(f);
        const Vec2 c = g * (u.cells[n] - u.cells[o]);
        out[o] += c;
        out[n] -= c;
    }
    for (int f = ni; f < mesh.n_faces(); ++f) {
        const int o = mesh.owner(f);
        const double g = diffusivity[o] * mesh.area(f) / mesh.delta(f);
        out[o] += g * (u.boundary[mesh.boundary_index(f)] - u.cells[o]);
    }
    return out;
}

std::vector<double> divergence(const Mesh2D& mesh, const FaceFluxField& flux)
{
    std::vector<double> out(mesh.n_cells(), 0.0);
    const int ni = mesh.n_interior_faces();
    for (int f = 0; f < ni; ++f) {
        out[mesh.owner(f)] += flux.face[f];
        out[mesh.neighbour(f)] -= flux.face[f];
    }
    for (int f = ni; f < mesh.n_faces(); ++f) out[mesh.owner(f)] += flux.face[f];
    return out;
}

MomentumSystem assemble_convection_diffusion(const Mesh2D& mesh, const BoundaryConditions& bc,
                                             const FaceFluxField& flux,
                                             std::span<const double> diffusivity,
                                             const Relaxation& relax, const VectorField& old,
                                             const Discretisation& disc)
{
    for (double d : diffusivity)
        if (d < 0.0) throw std::invalid_argument("assemble_convection_diffusion: negative diffusivity");
    if (relax.pseudo_time && !(*relax.pseudo_time > 0.0))
        throw std::invalid_argument("assemble_convection_diffusion: pseudo-time step must be positive");
    if (relax.factor && !(*relax.factor > 0.0 && *relax.factor <= 1.0))
        throw std::invalid_argument("assemble_convection_diffusion: relaxation factor must lie in (0, 1]");

    MomentumSystem sys{LduMatrix(mesh.addressing()), std::vector<Vec2>(mesh.n_cells())};
    auto& diag = sys.matrix.diag();
    auto& upper = sys.matrix.upper();
    auto& lower = sys.matrix.lower();
    auto& src = sys.source;
    const double central = 1.0 - disc.upwind_blend;

    const int ni = mesh.n_interior_faces();
    for (int f = 0; f < ni; ++f) {
        const int o = mesh.owner(f), n = mesh.neighbour(f);
        const double F = flux.face[f];
        const double w = mesh.weight(f);
        const double g = (w * diffusivity[o] + (1.0 - w) * diffusivity[n]) * mesh.area(f) / mesh.delta(f);
        diag[o] += std::max(F, 0.0) + g;
        upper[f] = std::min(F, 0.0) - g;
        diag[n] += std::max(-F, 0.0) + g;
        lower[f] = -std::max(F, 0.0) - g;
        if (central != 0.0) {
            const Vec2 uc = w * old.cells[o] + (1.0 - w) * old.cells[n];
            const Vec2 uu = F >= 0.0 ? old.cells[o] : old.cells[n];
            const Vec2 corr = (central * F) * (uc - uu);
            src[o] -= corr;
            src[n] += corr;
        }
    }
    for (int f = ni; f < mesh.n_faces(); ++f) {
        const int o = mesh.owner(f);
        const int b = mesh.boundary_index(f);
        const double F = flux.face[f];
        if (bc.kind[b] == BoundaryKind::outlet) {
            if (F >= 0.0)
                diag[o] += F;
            else
                src[o] -= F * old.cells[o];
        } else {
            const double g = diffusivity[o] * mesh.area(f) / mesh.delta(f);
            diag[o] += g;
            src[o] += g * old.boundary[b];
            if (!disc.mean_boundary_convection) {
                src[o] -= F * old.boundary[b];
            } else {
                src[o] -= 0.5 * F * old.boundary[b];
                if (F >= 0.0)
                    diag[o] += 0.5 * F;
                else
                    src[o] -= 0.5 * F * old.cells[o];
            }
        }
    }

    if (relax.pseudo_time) {
        for (int c = 0; c < mesh.n_cells(); ++c) {
            const double a = mesh.cell_volume(c) / *relax.pseudo_time;
            diag[c] += a;
            src[c] += a * old.cells[c];
        }
    }
    if (relax.factor && *relax.factor < 1.0) {
        const double alpha = *relax.factor;
        for (int c = 0; c < mesh.n_cells(); ++c) {
            const double d = diag[c] / alpha;
            src[c] += (d - diag[c]) * old.cells[c];
            diag[c] = d;
        }
    }
    return sys;
}

}  // namespace pgdflow
