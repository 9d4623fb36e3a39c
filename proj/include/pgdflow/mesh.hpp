#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgdflow/vec2.hpp"

namespace pgdflow {

class MeshError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Edge { bottom = 0, right = 1, top = 2, left = 3 };

/// A named sub-interval of one rectangle edge. The coordinate is x for the
/// bottom/top edges and y for the left/right edges; a boundary face belongs to
/// the segment when its centroid lies in [lo, hi].
struct PatchSegment {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
};

struct EdgeLayout {
    std::string patch;                   // faces not covered by a segment
    std::vector<PatchSegment> segments;  // first match wins
};

struct PatchLayout {
    std::array<EdgeLayout, 4> edges;

    static PatchLayout uniform(const std::string& name);
    EdgeLayout& operator[](Edge e) { return edges[static_cast<int>(e)]; }
    const EdgeLayout& operator[](Edge e) const { return edges[static_cast<int>(e)]; }
};

/// Owner/neighbour addressing of the interior faces, shared by every matrix
/// assembled on a mesh. Faces are sorted by owner and owner < neighbour.
struct LduAddressing {
    int n_cells = 0;
    std::vector<int> lower;  // owner of interior face f
    std::vector<int> upper;  // neighbour of interior face f
};

struct Patch {
    std::string name;
    std::vector<int> faces;  // global face indices
};

/// Uniform Cartesian cell-centred mesh with unit depth: cell "volumes" are
/// areas and face "areas" are edge lengths. Interior faces come first, then
/// boundary faces edge by edge (bottom, right, top, left).
class Mesh2D {
public:
    static Mesh2D build_cartesian(int nx, int ny, Vec2 origin, Vec2 extent,
                                  const PatchLayout& layout);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    Vec2 origin() const { return origin_; }
    Vec2 extent() const { return extent_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }

    int n_cells() const { return nx_ * ny_; }
    int n_faces() const { return static_cast<int>(owner_.size()); }
    int n_interior_faces() const { return n_interior_; }
    int n_boundary_faces() const { return n_faces() - n_interior_; }

    int cell_index(int i, int j) const { return i + nx_ * j; }
    double cell_volume(int /*cell*/) const { return dx_ * dy_; }
    Vec2 cell_centroid(int cell) const;

    int owner(int f) const { return owner_[f]; }
    /// -1 on boundary faces.
    int neighbour(int f) const { return neighbour_[f]; }
    bool is_boundary(int f) const { return f >= n_interior_; }
    /// Index into boundary-value arrays of fields.
    int boundary_index(int f) const { return f - n_interior_; }
    int boundary_face(int b) const { return b + n_interior_; }

    /// Unit normal, pointing owner -> neighbour (outward on boundary faces).
    Vec2 normal(int f) const { return normal_[f]; }
    double area(int f) const { return area_[f]; }
    Vec2 face_centroid(int f) const { return face_centroid_[f]; }
    /// Owner-to-neighbour centroid distance, or owner-to-face on the boundary.
    double delta(int f) const { return delta_[f]; }
    /// Interpolation weight of the owner value on interior faces.
    double weight(int f) const { return weight_[f]; }

    /// Patch owning boundary face with boundary index b.
    int boundary_patch(int b) const { return boundary_patch_[b]; }

    const std::vector<Patch>& patches() const { return patches_; }
    bool has_patch(const std::string& name) const;
    int patch_id(const std::string& name) const;
    std::span<const int> patch_faces(const std::string& name) const;

    const std::shared_ptr<const LduAddressing>& addressing() const { return addressing_; }

private:
    int nx_ = 0, ny_ = 0;
    Vec2 origin_{}, extent_{};
    double dx_ = 0.0, dy_ = 0.0;
    int n_interior_ = 0;

    std::vector<int> owner_, neighbour_;
    std::vector<Vec2> normal_, face_centroid_;
    std::vector<double> area_, delta_, weight_;
    std::vector<int> boundary_patch_;
    std::vector<Patch> patches_;
    std::shared_ptr<const LduAddressing> addressing_;
};

enum class BoundaryKind { dirichlet_velocity, outlet };

/// Per-patch boundary condition: a Dirichlet velocity profile evaluated at face
/// centroids, or a homogeneous free-traction outlet (zero-gradient velocity,
/// zero pressure).
struct PatchCondition {
    BoundaryKind kind = BoundaryKind::dirichlet_velocity;
    std::function<Vec2(Vec2)> value;  // unused for outlets; empty means zero
};

struct BoundarySpec {
    std::vector<std::pair<std::string, PatchCondition>> conditions;

    BoundarySpec& set(const std::string& patch, PatchCondition c);
    BoundarySpec& wall(const std::string& patch);
    BoundarySpec& outlet(const std::string& patch);
};

/// Boundary spec resolved onto the boundary faces of one mesh.
struct BoundaryConditions {
    std::vector<BoundaryKind> kind;  // per boundary face
    std::vector<Vec2> value;         // Dirichlet value per boundary face (zero on outlets)

    bool has_outlet() const;
};

BoundaryConditions resolve_boundary(const Mesh2D& mesh, const BoundarySpec& spec);

}  // namespace pgdflow
