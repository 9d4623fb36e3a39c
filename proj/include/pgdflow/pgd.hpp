#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgdflow/field.hpp"
#include "pgdflow/fv_ops.hpp"
#include "pgdflow/mesh.hpp"
#include "pgdflow/parametric.hpp"
#include "pgdflow/simple.hpp"

namespace pgdflow {

enum class ModeOrigin { boundary_condition, computed };

/// One separable term sigma_u f_u(x) phi(mu) (velocity) and sigma_p f_p(x) phi(mu)
/// (pressure). Spatial functions carry boundary values so that sums of modes
/// are complete fields.
struct Mode {
    VectorField fu;
    ScalarField fp;
    ParametricFunction phi;
    double sigma_u = 0.0;
    double sigma_p = 0.0;
    ModeOrigin origin = ModeOrigin::computed;
    int iterations = 0;  // alternating iterations spent on this mode

    VectorField velocity() const;  // sigma_u f_u
    ScalarField pressure() const;  // sigma_p f_p
};

/// Frozen convecting flux in separated form, sum_j chi_j(mu) F_j.
struct SeparableFlux {
    std::vector<std::pair<ParametricFunction, FaceFluxField>> terms;
};

/// Affine problem data seen by the PGD engine.
struct PgdData {
    std::shared_ptr<const Mesh2D> mesh;
    GridPtr grid;
    Discretisation disc;
    BoundaryConditions bc;        // boundary kinds; values are ignored
    SeparableScalar viscosity;    // nu(x, mu) = sum psi_i D_i
    SeparableVector source;       // s(x, mu) = sum eta_i S_i, per unit volume; may be empty
    ConvectionMode convection = ConvectionMode::self_convecting;
    SeparableFlux frozen;         // frozen mode only

    /// Boundary conditions with the same kinds and zero Dirichlet values.
    BoundaryConditions homogeneous_bc() const;
};

void validate(const PgdData& data);

struct PgdExpansion {
    std::shared_ptr<const Mesh2D> mesh;
    GridPtr grid;
    std::vector<Mode> modes;  // boundary-condition modes first
    std::string case_name;

    int n_bc_modes() const;
    int n_computed() const;
};

/// Expansion at a grid node / at an arbitrary parameter (piecewise-linear in
/// the parametric functions; DomainError outside the interval).
std::pair<VectorField, ScalarField> evaluate_node(std::span<const Mode> modes, int node);
std::pair<VectorField, ScalarField> evaluate_online(const PgdExpansion& expansion, double mu);

// ---------------------------------------------------------------------------
// Boundary-condition modes

struct BcModeRecipe {
    std::string label;
    SpatialProblem problem;   // full-order problem carrying the Dirichlet data
    ParametricFunction phi;   // prescribed, not normalised
};

/// Solves every recipe with the full-order engine. Throws std::runtime_error
/// if a solve does not converge.
std::vector<Mode> compute_bc_modes(const std::vector<BcModeRecipe>& recipes, const SimpleSettings& settings);

// ---------------------------------------------------------------------------
// Spatial iteration

struct SpatialCoefficients {
    std::vector<double> alpha1;     // per mode: int phi_n^2 phi_m
    std::vector<double> alpha1_frozen;  // per frozen term: int phi_n^2 chi_j
    std::vector<double> alpha2;     // per viscosity term: int phi_n^2 psi_i
    double alpha3 = 0.0;            // int phi_n^2
};

SpatialCoefficients spatial_coefficients(const ParametricFunction& phi_n, std::span<const Mode> modes,
                                         const PgdData& data);

/// Momentum (cell-integrated vectors) and continuity residuals of the
/// expansion tested with a parametric function.
struct SpatialResidual {
    std::vector<Vec2> momentum;
    std::vector<double> continuity;
};

/// Separated evaluation: every parametric factor is a product integral, every
/// spatial factor one discrete operator applied to single modes.
SpatialResidual spatial_residual_separated(const PgdData& data, std::span<const Mode> modes,
                                           const ParametricFunction& test);

/// Direct evaluation: expand the modes at each node, assemble the residual,
/// integrate against the test function.
SpatialResidual spatial_residual_direct(const PgdData& data, std::span<const Mode> modes,
                                        const ParametricFunction& test);

/// Residual of the full expansion at one node.
SpatialResidual node_residual(const PgdData& data, std::span<const Mode> modes, int node);

/// Spatial problem for the increment of the last mode in `modes`.
SpatialProblem spatial_problem(const PgdData& data, std::span<const Mode> modes,
                               const SpatialCoefficients& coef, const SpatialResidual& residual);

// ---------------------------------------------------------------------------
// Parametric iteration

struct ParametricCoefficients {
    // left-hand side
    std::vector<double> a1;         // per mode (self-convecting) or per frozen term
    std::vector<double> a2;         // per viscosity term
    double a3 = 0.0;
    // residual
    std::vector<double> a4;                   // per source term
    std::vector<std::vector<double>> a5;      // [m][q] or [m][frozen term]
    std::vector<std::vector<double>> a6;      // [m][viscosity term]
    std::vector<double> a7;                   // [m]
    std::vector<double> a8;                   // [m]
};

/// Coefficients for the parametric step of the last mode, tested with
/// (test_u, test_p) = (sigma_u f_u, sigma_p f_p) of that mode.
ParametricCoefficients parametric_coefficients(const PgdData& data, std::span<const Mode> modes,
                                               const VectorField& test_u, const ScalarField& test_p);

struct ParametricResidual {
    std::vector<double> ru;
    std::vector<double> rp;
};

ParametricResidual parametric_residual_separated(const PgdData& data, std::span<const Mode> modes,
                                                 const ParametricCoefficients& coef);
ParametricResidual parametric_residual_direct(const PgdData& data, std::span<const Mode> modes,
                                              const VectorField& test_u, const ScalarField& test_p);

/// Nodal factor sum_m a1^m phi^m - sum_i a2_i psi_i + a3 multiplying the increment.
std::vector<double> collocation_denominator(const PgdData& data, std::span<const Mode> modes,
                                            const ParametricCoefficients& coef);

class SingularCollocation : public std::runtime_error {
public:
    SingularCollocation(const std::string& what, int node) : std::runtime_error(what), node_(node) {}
    int node() const { return node_; }

private:
    int node_;
};

/// Nodewise division. Throws SingularCollocation when a denominator is below
/// threshold * max |denominator| (or all are zero while the rhs is not).
ParametricFunction parametric_iteration(const GridPtr& grid, std::span<const double> denominator,
                                        const ParametricResidual& residual, double threshold = 1e-12);

// ---------------------------------------------------------------------------
// Alternating directions and enrichment

enum class GreedyCriterion {
    relative_amplitude,  // combined u-p amplitude relative to all computed modes
    first_amplitude,     // sigma^n <= tol sigma^1 (first computed mode)
    amplitude_sum        // sigma^n < tol sum_m sigma^m, separately for u and p
};

enum class ResidualEvaluation { automatic, separated, direct };

/// Treatment of the cross convection C(F(du, dp); A) in the spatial problem
/// of a self-convecting case: lagged inside the spatial solver, or explicit
/// with the increment of the previous alternating iteration.
enum class CrossConvection { lagged, previous_increment };

struct AdsSettings {
    GreedyCriterion criterion = GreedyCriterion::relative_amplitude;
    double greedy_tolerance = 1e-3;
    double amplitude_tolerance = 1e-3;   // eta_o on the increments
    double residual_tolerance = 1e-3;    // relative to the k = 0 residual norms
    int max_alternating = 20;
    int max_modes = 15;                  // computed modes
    double predictor_amplitude = 1e-2;   // initial sigma relative to the last mode
    ResidualEvaluation residual_evaluation = ResidualEvaluation::automatic;
    CrossConvection cross_convection = CrossConvection::lagged;
    SimpleSettings spatial_solver;
};

void validate(const AdsSettings& settings);

struct AdsState {
    Mode mode;  // current predictor (phi normalised)
    double sigma_phi = 1.0;
    double eps_u = 1.0, eps_p = 1.0, eps_phi = 1.0;
    double res_u = 0.0, res_p = 0.0, res_phi = 0.0;
    double typ_u = 0.0, typ_p = 0.0, typ_phi = 0.0;
    int k = 0;
    int spatial_solver_iterations = 0;
    VectorField previous_du;  // empty before the first spatial iteration
    ScalarField previous_dp;
};

/// Predictor for a new mode: spatial functions of `last` with homogeneous
/// Dirichlet values, phi = 1 normalised, amplitude relative to `last`.
AdsState initial_ads_state(const PgdData& data, const Mode& last, double relative_amplitude);

struct SpatialUpdate {
    VectorField du;
    ScalarField dp;
    FlowState solve;  // solver report
};

/// Coefficients, residual and the spatial solve for the predictor in `state`;
/// `modes` are the accepted modes (the predictor is appended internally).
SpatialUpdate spatial_iteration(const PgdData& data, std::span<const Mode> modes, const AdsSettings& settings,
                                AdsState& state);

/// Absorb the spatial increment (sigma <- ||sigma f + df||).
/// Returns false when both amplitudes vanish (degenerate mode).
bool normalize_and_update(AdsState& state, const Mesh2D& mesh, const VectorField& du, const ScalarField& dp);

/// Parametric half-step for the predictor in `state`: returns the increment.
ParametricFunction parametric_step(const PgdData& data, std::span<const Mode> modes, const AdsSettings& settings,
                                   AdsState& state);

/// phi <- (phi + dphi) / ||phi + dphi||; the norm is absorbed into both
/// amplitudes. Returns false on a zero norm.
bool normalize_and_update(AdsState& state, const ParametricFunction& dphi);

/// Relative amplitude indicator over the computed modes.
double relative_amplitude(const PgdExpansion& expansion);
double relative_amplitude(std::span<const Mode> computed);

struct ModeReport {
    int mode = 0;  // 1-based index among computed modes
    double sigma_u = 0.0, sigma_p = 0.0;
    double eta = 0.0;
    int iterations = 0;
    bool ads_converged = false;
    double residual_u = 0.0, residual_p = 0.0;  // global residual after accepting the mode
};

enum class EnrichmentStatus { converged, max_modes, degenerate, solver_failure };

std::string to_string(EnrichmentStatus s);

struct EnrichmentResult {
    PgdExpansion expansion;
    std::vector<ModeReport> reports;
    EnrichmentStatus status = EnrichmentStatus::converged;
    std::string message;
    double initial_residual_u = 0.0, initial_residual_p = 0.0;  // BC modes only
};

using ProgressSink = std::function<void(const ModeReport&)>;

/// L2 over the parameter interval of the cell-residual norms (momentum,
/// continuity) of an expansion.
std::pair<double, double> global_residual(const PgdData& data, std::span<const Mode> modes);

/// Greedy enrichment on top of the given boundary-condition modes.
EnrichmentResult enrich(const PgdData& data, std::vector<Mode> bc_modes, const AdsSettings& settings,
                        const ProgressSink& sink = {});

}  // namespace pgdflow
