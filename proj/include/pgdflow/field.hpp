#pragma once

#include <span>
#include <vector>

#include "pgdflow/mesh.hpp"
#include "pgdflow/vec2.hpp"

namespace pgdflow {

/// Piecewise-constant scalar: one value per cell plus one per boundary face.
struct ScalarField {
    std::vector<double> cells;
    std::vector<double> boundary;

    ScalarField() = default;
    explicit ScalarField(const Mesh2D& mesh, double value = 0.0)
        : cells(mesh.n_cells(), value), boundary(mesh.n_boundary_faces(), value) {}
};

/// Piecewise-constant 2-vector: one value per cell plus one per boundary face.
/// For velocities the boundary part carries the Dirichlet data; outlet faces
/// mirror the owner cell (see extrapolate_outlets).
struct VectorField {
    std::vector<Vec2> cells;
    std::vector<Vec2> boundary;

    VectorField() = default;
    explicit VectorField(const Mesh2D& mesh, Vec2 value = {})
        : cells(mesh.n_cells(), value), boundary(mesh.n_boundary_faces(), value) {}
};

/// Volumetric flux per face (unit depth), oriented along the face normal.
struct FaceFluxField {
    std::vector<double> face;

    FaceFluxField() = default;
    explicit FaceFluxField(const Mesh2D& mesh) : face(mesh.n_faces(), 0.0) {}
};

// In-place linear algebra; all of these act on cells and boundary values alike.
void axpy(double a, const ScalarField& x, ScalarField& y);
void axpy(double a, const VectorField& x, VectorField& y);
void axpy(double a, const FaceFluxField& x, FaceFluxField& y);
void scale(ScalarField& f, double a);
void scale(VectorField& f, double a);

/// Throws std::invalid_argument when the value counts do not match the mesh or
/// a value is not finite.
void check_field(const Mesh2D& mesh, const ScalarField& f, const char* what);
void check_field(const Mesh2D& mesh, const VectorField& f, const char* what);

}  // namespace pgdflow
