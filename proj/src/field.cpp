#include "pgdflow/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pgdflow {

void axpy(double a, const ScalarField& x, ScalarField& y)
{
    for (std::size_t i = 0; i < y.cells.size(); ++i) y.cells[i] += a * x.cells[i];
    for (std::size_t i = 0; i < y.boundary.size(); ++i) y.boundary[i] += a * x.boundary[i];
}

void axpy(double a, const VectorField& x, VectorField& y)
{
    for (std::size_t i = 0; i < y.cells.size(); ++i) y.cells[i] += a * x.cells[i];
    for (std::size_t i = 0; i < y.boundary.size(); ++i) y.boundary[i] += a * x.boundary[i];
}

void axpy(double a, const FaceFluxField& x, FaceFluxField& y)
{
    for (std::size_t i = 0; i < y.face.size(); ++i) y.face[i] += a * x.face[i];
}

void scale(ScalarField& f, double a)
{
    for (auto& v : f.cells) v *= a;
    for (auto& v : f.boundary) v *= a;
}

void scale(VectorField& f, double a)
{
    for (auto& v : f.cells) v *= a;
    for (auto& v : f.boundary) v *= a;
}

void check_field(const Mesh2D& mesh, const ScalarField& f, const char* what)
{
    if (static_cast<int>(f.cells.size()) != mesh.n_cells() ||
        static_cast<int>(f.boundary.size()) != mesh.n_boundary_faces())
        throw std::invalid_argument(std::string(what) + ": field size does not match mesh");
    for (double v : f.cells)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

void check_field(const Mesh2D& mesh, const VectorField& f, const char* what)
{
    if (static_cast<int>(f.cells.size()) != mesh.n_cells() ||
        static_cast<int>(f.boundary.size()) != mesh.n_boundary_faces())
        throw std::invalid_argument(std::string(what) + ": field size does not match mesh");
    for (const Vec2& v : f.cells)
        if (!std::isfinite(v.x) || !std::isfinite(v.y))
            throw std::invalid_argument(std::string(what) + ": non-finite value");
}

}  // namespace pgdflow
