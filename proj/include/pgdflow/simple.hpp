#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pgdflow/field.hpp"
#include "pgdflow/fv_ops.hpp"
#include "pgdflow/linear_solver.hpp"
#include "pgdflow/mesh.hpp"

namespace pgdflow {

enum class ConvectionMode {
    self_convecting,  // u convected by the flux of the previous outer iterate
    frozen            // u convected by SpatialProblem::frozen_flux
};

/// Everything the full-order engine needs to know about one steady problem
///
///   C(Fc; u) + C(F(u, p); A) - L(D; u) + a3 V grad p = V s + rhs_m
///   a3 div F(u, p) = rhs_c
///
/// with C(F; X) the convection of X by the face flux F and F(u, p) the model
/// flux of the discretisation. The cross term involving A is optional and is
/// lagged by one outer iteration.
struct SpatialProblem {
    const Mesh2D* mesh = nullptr;
    BoundaryConditions bc;
    Discretisation disc;

    ConvectionMode convection = ConvectionMode::self_convecting;
    FaceFluxField frozen_flux;            // frozen mode only; empty = no convection
    std::optional<VectorField> cross_field;

    std::vector<double> diffusivity;      // per cell, already scaled (m^2/s)
    double pressure_scale = 1.0;
    std::vector<Vec2> source;             // per unit volume; empty = 0
    std::vector<Vec2> momentum_rhs;       // cell-integrated; empty = 0
    std::vector<double> continuity_rhs;   // cell-integrated; empty = 0
};

/// Throws std::invalid_argument when a SpatialProblem violates its invariants.
void validate(const SpatialProblem& problem);

struct SimpleSettings {
    double velocity_relaxation = 0.7;
    double pressure_relaxation = 0.3;
    /// When set, the momentum predictor uses a pseudo-time step instead of
    /// implicit under-relaxation.
    std::optional<double> pseudo_time;
    double momentum_tolerance = 1e-6;
    double continuity_tolerance = 1e-6;
    int max_iterations = 5000;
    SolverControl momentum_solver{1e-3, 1e-300, 200};
    SolverControl pressure_solver{1e-3, 1e-300, 1000};
    /// The pressure-correction matrix changes slowly between outer iterations,
    /// so a sparse factorisation is reused as PCG preconditioner until a solve
    /// needs more than this many iterations.
    int pressure_refactor_iterations = 6;
};

void validate(const SimpleSettings& settings);

struct OuterResidual {
    double momentum = 0.0;
    double continuity = 0.0;
};

struct FlowState {
    VectorField u;
    ScalarField p;
    FaceFluxField flux;  // model flux of (u, p)
    std::vector<OuterResidual> history;
    int iterations = 0;
    bool converged = false;
};

/// Zero state carrying the problem's boundary values.
FlowState initial_state(const SpatialProblem& problem);

/// Unnormalised residual vectors of a (u, p) pair; the momentum residual is
/// V s + rhs_m - C - X + L - a3 V grad p, the continuity residual is
/// rhs_c - a3 div F.
struct ProblemResidual {
    std::vector<Vec2> momentum;
    std::vector<double> continuity;
    OuterResidual normalised;
};

ProblemResidual evaluate_residual(const SpatialProblem& problem, const VectorField& u,
                                  const ScalarField& p);

struct MomentumPrediction {
    VectorField u;                    // intermediate velocity
    std::vector<double> diag;         // relaxed momentum diagonal
    std::vector<double> rau;          // V / a_P
};

/// Reusable pressure-correction factorisation (owned by the outer loop).
struct PressureFactorCache {
    std::unique_ptr<FactorisedPreconditioner> factor;
    int last_iterations = 0;
};

MomentumPrediction momentum_predictor(const FlowState& state, const SpatialProblem& problem,
                                      const SimpleSettings& settings);

/// Solves the pressure-correction equation. Returns the correction p' with
/// its boundary values (zero on outlets, zero gradient elsewhere). Without an
/// outlet, p' is pinned to zero in cell 0.
ScalarField pressure_poisson(const MomentumPrediction& pred, const FlowState& state,
                             const SpatialProblem& problem, const SimpleSettings& settings,
                             PressureFactorCache* cache = nullptr);

/// Applies the correction to velocity and pressure and refreshes the flux.
void velocity_correction(const MomentumPrediction& pred, const ScalarField& p_corr,
                         const SpatialProblem& problem, const SimpleSettings& settings,
                         FlowState& state);

/// Outer SIMPLE loop. Does not throw on non-convergence; inspect
/// FlowState::converged and the history instead.
FlowState simple_solve(const SpatialProblem& problem, const SimpleSettings& settings,
                       std::optional<FlowState> init = std::nullopt);

}  // namespace pgdflow
