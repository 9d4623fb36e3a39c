#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pgdflow/field.hpp"
#include "pgdflow/linear_solver.hpp"
#include "pgdflow/mesh.hpp"

namespace pgdflow {

/// Settings that define the discrete model itself (as opposed to how it is
/// solved). Every residual, flux and matrix in the library uses these, so a
/// full-order solution and a PGD expansion built with the same values are
/// solutions of the same algebraic system.
struct Discretisation {
    /// Rhie-Chow coefficient (s) used in the face flux of a (u, p) pair.
    /// Fixed per case so the flux stays linear in (u, p).
    double rc_tau = 0.0;
    /// 0 = central differencing, 1 = first-order upwind.
    double upwind_blend = 0.0;
    /// Convect the mean of the Dirichlet value and the owner value on
    /// Dirichlet faces. Keeps the boundary contribution to u . C(u) zero, so
    /// central convection stays energy-neutral at outflow walls.
    bool mean_boundary_convection = false;
};

/// Rhie-Chow coefficient V / a_ref with a_ref built from reference viscosity
/// and speed, i.e. the momentum diagonal of a typical cell.
double reference_rc_tau(const Mesh2D& mesh, double nu_ref, double u_ref);

double l2_norm(const Mesh2D& mesh, std::span<const double> cells);
double l2_norm(const Mesh2D& mesh, std::span<const Vec2> cells);
inline double l2_norm(const Mesh2D& mesh, const ScalarField& f) { return l2_norm(mesh, f.cells); }
inline double l2_norm(const Mesh2D& mesh, const VectorField& f) { return l2_norm(mesh, f.cells); }

/// Cell-averaged gradient (1/V) sum_f phi_f A_f n_f. Interior face values are
/// linearly interpolated; boundary face values come from f.boundary.
std::vector<Vec2> gauss_gradient(const Mesh2D& mesh, const ScalarField& f);

/// Pressure face values implied by the boundary kinds: zero normal gradient on
/// Dirichlet-velocity patches, zero on outlets.
void apply_pressure_boundary(const Mesh2D& mesh, const BoundaryConditions& bc, ScalarField& p);
ScalarField pressure_with_boundary(const Mesh2D& mesh, const BoundaryConditions& bc,
                                   std::span<const double> p_cells);

/// Sets outlet boundary values of a velocity field to the owner cell value
/// (zero gradient); Dirichlet values are left untouched.
void extrapolate_outlets(const Mesh2D& mesh, const BoundaryConditions& bc, VectorField& u);

/// Flux of linearly interpolated cell velocities; boundary faces use u.boundary.
FaceFluxField interpolated_flux(const Mesh2D& mesh, const VectorField& u);

/// Rhie-Chow face flux: interpolated velocity plus the difference between the
/// compact and the interpolated pressure gradient, weighted by rAU = V / a_P.
/// u must carry complete boundary values and p its boundary values.
/// Dirichlet faces carry the prescribed flux.
FaceFluxField rhie_chow_flux(const Mesh2D& mesh, const BoundaryConditions& bc, const VectorField& u,
                             const ScalarField& p, std::span<const double> momentum_diag);

/// Flux of a (u, p) pair under the discrete model (Rhie-Chow with rc_tau).
FaceFluxField model_flux(const Mesh2D& mesh, const BoundaryConditions& bc, const Discretisation& disc,
                         const VectorField& u, const ScalarField& p);

/// Cell-integrated convection sum_f F_f u_f of u by the face flux; u_f is
/// central with an upwind blend. Boundary faces take u.boundary (or its mean
/// with the owner value, see Discretisation).
std::vector<Vec2> convection(const Mesh2D& mesh, const FaceFluxField& flux, const VectorField& u,
                             const Discretisation& disc);

/// Cell-integrated diffusion sum_f D_f A_f (u_nb - u_P) / delta. Boundary faces
/// use u.boundary, so extrapolated outlets contribute nothing.
std::vector<Vec2> diffusion(const Mesh2D& mesh, std::span<const double> diffusivity,
                            const VectorField& u);

/// Cell-integrated divergence sum_f F_f (outward).
std::vector<double> divergence(const Mesh2D& mesh, const FaceFluxField& flux);

/// Cell-integrated pressure force sum_f p_f A_f n_f, i.e. V * gauss_gradient.
std::vector<Vec2> pressure_force(const Mesh2D& mesh, const ScalarField& p);

/// Momentum matrix shared by both velocity components plus its right-hand side.
struct MomentumSystem {
    LduMatrix matrix;
    std::vector<Vec2> source;
};

struct Relaxation {
    std::optional<double> factor;          // implicit under-relaxation in (0, 1]
    std::optional<double> pseudo_time;     // adds V / dt to the diagonal
};

/// Implicit momentum operator for convection by `flux` plus diffusion. The
/// matrix uses upwind convection; the difference to the blended scheme is a
/// deferred correction evaluated at `old`, so a converged iterate satisfies the
/// blended scheme. Dirichlet data enter the source.
MomentumSystem assemble_convection_diffusion(const Mesh2D& mesh, const BoundaryConditions& bc,
                                             const FaceFluxField& flux,
                                             std::span<const double> diffusivity,
                                             const Relaxation& relax, const VectorField& old,
                                             const Discretisation& disc);

}  // namespace pgdflow
