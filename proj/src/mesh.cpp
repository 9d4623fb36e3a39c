#include "pgdflow/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace pgdflow {

PatchLayout PatchLayout::uniform(const std::string& name)
{
    PatchLayout layout;
    for (auto& e : layout.edges) e.patch = name;
    return layout;
}

Vec2 Mesh2D::cell_centroid(int cell) const
{
    const int i = cell % nx_;
    const int j = cell / nx_;
    return {origin_.x + (i + 0.5) * dx_, origin_.y + (j + 0.5) * dy_};
}

Mesh2D Mesh2D::build_cartesian(int nx, int ny, Vec2 origin, Vec2 extent, const PatchLayout& layout)
{
    if (nx < 2 || ny < 2)
        throw MeshError("mesh needs at least 2 cells per direction, got " + std::to_string(nx) +
                        "x" + std::to_string(ny));
    if (!(extent.x > 0.0) || !(extent.y > 0.0))
        throw MeshError("mesh extent must be positive");
    for (const auto& e : layout.edges)
        if (e.patch.empty()) throw MeshError("every edge needs a default patch name");

    Mesh2D m;
    m.nx_ = nx;
    m.ny_ = ny;
    m.origin_ = origin;
    m.extent_ = extent;
    m.dx_ = extent.x / nx;
    m.dy_ = extent.y / ny;

    auto add_face = [&](int own, int nei, Vec2 n, double a, Vec2 c, double d) {
        m.owner_.push_back(own);
        m.neighbour_.push_back(nei);
        m.normal_.push_back(n);
        m.area_.push_back(a);
        m.face_centroid_.push_back(c);
        m.delta_.push_back(d);
        m.weight_.push_back(nei >= 0 ? 0.5 : 1.0);
    };

    // Interior faces in upper-triangular order: for each cell, east then north.
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int c = m.cell_index(i, j);
            const double xc = origin.x + (i + 0.5) * m.dx_;
            const double yc = origin.y + (j + 0.5) * m.dy_;
            if (i + 1 < nx)
                add_face(c, c + 1, {1.0, 0.0}, m.dy_, {xc + 0.5 * m.dx_, yc}, m.dx_);
            if (j + 1 < ny)
                add_face(c, c + nx, {0.0, 1.0}, m.dx_, {xc, yc + 0.5 * m.dy_}, m.dy_);
        }
    }
    m.n_interior_ = static_cast<int>(m.owner_.size());

    auto patch_index = [&](const std::string& name) {
        for (std::size_t p = 0; p < m.patches_.size(); ++p)
            if (m.patches_[p].name == name) return static_cast<int>(p);
        m.patches_.push_back({name, {}});
        return static_cast<int>(m.patches_.size() - 1);
    };
    auto assign = [&](Edge edge, double coord) {
        const EdgeLayout& el = layout[edge];
        const std::string* name = &el.patch;
        for (const auto& seg : el.segments) {
            if (coord >= seg.lo && coord <= seg.hi) {
                name = &seg.name;
                break;
            }
        }
        const int p = patch_index(*name);
        const int f = static_cast<int>(m.owner_.size()) - 1;
        m.patches_[p].faces.push_back(f);
        m.boundary_patch_.push_back(p);
    };

    const double x1 = origin.x + extent.x;
    const double y1 = origin.y + extent.y;
    for (int i = 0; i < nx; ++i) {
        const double xc = origin.x + (i + 0.5) * m.dx_;
        add_face(m.cell_index(i, 0), -1, {0.0, -1.0}, m.dx_, {xc, origin.y}, 0.5 * m.dy_);
        assign(Edge::bottom, xc);
    }
    for (int j = 0; j < ny; ++j) {
        const double yc = origin.y + (j + 0.5) * m.dy_;
        add_face(m.cell_index(nx - 1, j), -1, {1.0, 0.0}, m.dy_, {x1, yc}, 0.5 * m.dx_);
        assign(Edge::right, yc);
    }
    for (int i = 0; i < nx; ++i) {
        const double xc = origin.x + (i + 0.5) * m.dx_;
        add_face(m.cell_index(i, ny - 1), -1, {0.0, 1.0}, m.dx_, {xc, y1}, 0.5 * m.dy_);
        assign(Edge::top, xc);
    }
    for (int j = 0; j < ny; ++j) {
        const double yc = origin.y + (j + 0.5) * m.dy_;
        add_face(m.cell_index(0, j), -1, {-1.0, 0.0}, m.dy_, {origin.x, yc}, 0.5 * m.dx_);
        assign(Edge::left, yc);
    }

    auto addr = std::make_shared<LduAddressing>();
    addr->n_cells = m.n_cells();
    addr->lower.assign(m.owner_.begin(), m.owner_.begin() + m.n_interior_);
    addr->upper.assign(m.neighbour_.begin(), m.neighbour_.begin() + m.n_interior_);
    m.addressing_ = std::move(addr);
    return m;
}

bool Mesh2D::has_patch(const std::string& name) const
{
    return std::any_of(patches_.begin(), patches_.end(),
                       [&](const Patch& p) { return p.name == name; });
}

int Mesh2D::patch_id(const std::string& name) const
{
    for (std::size_t p = 0; p < patches_.size(); ++p)
        if (patches_[p].name == name) return static_cast<int>(p);
    throw MeshError("unknown patch '" + name + "'");
}

std::span<const int> Mesh2D::patch_faces(const std::string& name) const
{
    return patches_[patch_id(name)].faces;
}

BoundarySpec& BoundarySpec::set(const std::string& patch, PatchCondition c)
{
    for (auto& [name, cond] : conditions) {
        if (name == patch) {
            cond = std::move(c);
            return *this;
        }
    }
    conditions.emplace_back(patch, std::move(c));
    return *this;
}

BoundarySpec& BoundarySpec::wall(const std::string& patch)
{
    return set(patch, {BoundaryKind::dirichlet_velocity, {}});
}

BoundarySpec& BoundarySpec::outlet(const std::string& patch)
{
    return set(patch, {BoundaryKind::outlet, {}});
}

bool BoundaryConditions::has_outlet() const
{
    return std::find(kind.begin(), kind.end(), BoundaryKind::outlet) != kind.end();
}

BoundaryConditions resolve_boundary(const Mesh2D& mesh, const BoundarySpec& spec)
{
    const auto& patches = mesh.patches();
    std::vector<const PatchCondition*> per_patch(patches.size(), nullptr);
    for (const auto& [name, cond] : spec.conditions) {
        const int p = mesh.patch_id(name);
        per_patch[p] = &cond;
    }
    for (std::size_t p = 0; p < patches.size(); ++p)
        if (!per_patch[p])
            throw MeshError("patch '" + patches[p].name + "' has no boundary condition");

    BoundaryConditions bc;
    bc.kind.resize(mesh.n_boundary_faces());
    bc.value.resize(mesh.n_boundary_faces());
    for (int b = 0; b < mesh.n_boundary_faces(); ++b) {
        const PatchCondition& c = *per_patch[mesh.boundary_patch(b)];
        bc.kind[b] = c.kind;
        if (c.kind == BoundaryKind::dirichlet_velocity && c.value)
            bc.value[b] = c.value(mesh.face_centroid(mesh.boundary_face(b)));
    }
    return bc;
}

}  // namespace pgdflow
