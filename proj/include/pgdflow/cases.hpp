#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pgdflow/mesh.hpp"
#include "pgdflow/parametric.hpp"
#include "pgdflow/pgd.hpp"
#include "pgdflow/simple.hpp"

namespace pgdflow {

// ---------------------------------------------------------------------------
// Kovasznay flow on [-1, 1]^2 with nu(mu) = mu

double kovasznay_lambda(double mu);

struct KovasznayPoint {
    Vec2 u;
    double p = 0.0;
};

/// Exact solution; the pressure carries the additive constant c.
KovasznayPoint kovasznay_exact(Vec2 x, double mu, double c = 0.0);

/// Constant that makes the exact pressure vanish at `reference`.
double kovasznay_pressure_constant(Vec2 reference, double mu);

/// One term lambda(mu)^power * field(x) of the truncated Kovasznay velocity.
struct TaylorTerm {
    int power = 0;
    std::function<Vec2(Vec2)> field;
};

/// Kovasznay velocity with e^{lambda x} truncated to `order` Taylor terms,
/// grouped by powers of lambda (order + 1 terms).
std::vector<TaylorTerm> taylor_terms(int order);

/// The truncated field as separable data: cell-centroid and boundary-face
/// samples of each term times lambda^power on the grid.
SeparableVector taylor_separated_convection(int order, const GridPtr& grid, const Mesh2D& mesh);

/// Same terms as face fluxes (normal component sampled at face centroids).
SeparableFlux taylor_separated_flux(int order, const GridPtr& grid, const Mesh2D& mesh);

/// Velocity field and face flux sampled from an analytic profile.
VectorField sample_velocity(const Mesh2D& mesh, const std::function<Vec2(Vec2)>& f);
FaceFluxField sample_flux(const Mesh2D& mesh, const std::function<Vec2(Vec2)>& f);

// ---------------------------------------------------------------------------
// Cavity profiles

/// Lid velocity 400 mu r(x) with linear ramps on [0, 0.06] and [0.94, 1].
Vec2 lid_profile(double x, double mu);

/// Ramp factor of the lid profiles in [0, 1].
double lid_ramp(double x);

enum class JetWall { right_bottom, right_top, left_top };

/// Jet velocity mu * profile; zero outside the jet interval. `smooth` selects
/// the bump 1 - cos form on the bottom-right jet instead of the printed one.
Vec2 jet_profile(JetWall wall, double y, double mu, bool smooth = false);

/// Area-weighted average of the adjacent-cell pressure over a patch.
double pressure_drop(const ScalarField& p, const Mesh2D& mesh, const std::string& patch);

// ---------------------------------------------------------------------------
// Case registry

struct CaseParameters {
    int cells = 0;          // cells per side
    int n_intervals = 40;   // parametric grid
    double upwind_blend = 0.0;
    bool mean_boundary_convection = true;  // see Discretisation
    int taylor_order = 4;   // Kovasznay only
    bool smooth_jets = false;
    SimpleSettings solver;  // full-order and spatial PGD solves
};

CaseParameters default_parameters(const std::string& name);
std::vector<std::string> case_names();

struct FlowCase {
    std::string name;
    CaseParameters params;
    std::shared_ptr<const Mesh2D> mesh;
    GridPtr grid;
    PgdData data;
    std::vector<BcModeRecipe> bc_recipes;
    /// Full-order problem at one parameter value (points into `mesh`).
    std::function<SpatialProblem(double)> full_order;
    /// Patch whose averaged pressure is the case QoI; empty when none.
    std::string qoi_patch;
    /// Analytic reference, Kovasznay only.
    std::function<KovasznayPoint(Vec2, double)> exact;
};

/// Throws std::invalid_argument for unknown names or invalid parameters.
FlowCase make_case(const std::string& name, const CaseParameters& params);
inline FlowCase make_case(const std::string& name) { return make_case(name, default_parameters(name)); }

// ---------------------------------------------------------------------------
// Mesh convergence against the analytic Kovasznay solution

struct ConvergenceLevel {
    int cells = 0;
    double h = 0.0;           // 1 / cells (normalised by the domain length)
    double err_u = 0.0;       // relative L2 over space and the parameter nodes
    double err_p = 0.0;
    bool converged = true;    // every full-order solve converged
    double seconds = 0.0;
};

/// Full-order solves of `base` (a Kovasznay case) on each level at every node
/// of its parametric grid. Errors are relative discrete L2(Omega x I) norms with
/// the exact pressure shifted to vanish at the pinned cell.
std::vector<ConvergenceLevel> kovasznay_convergence(const std::string& case_name, const CaseParameters& base,
                                                    const std::vector<int>& levels);

/// log(e_coarse / e_fine) / log(h_coarse / h_fine)
double observed_order(double e_coarse, double e_fine, double h_coarse, double h_fine);

}  // namespace pgdflow
