#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "pgdflow/cases.hpp"
#include "pgdflow/mesh.hpp"

using namespace pgdflow;

namespace {

// sum of outward A n over the faces of every cell
double worst_closure(const Mesh2D& m)
{
    std::vector<Vec2> s(m.n_cells());
    for (int f = 0; f < m.n_faces(); ++f) {
        const Vec2 an = m.area(f) * m.normal(f);
        s[m.owner(f)] += an;
        if (!m.is_boundary(f)) s[m.neighbour(f)] -= an;
    }
    double worst = 0.0;
    for (const Vec2& v : s) worst = std::max(worst, std::hypot(v.x, v.y));
    return worst;
}

}  // namespace

TEST_CASE("2x2 mesh counts")
{
    const Mesh2D m = Mesh2D::build_cartesian(2, 2, {0, 0}, {1, 1}, PatchLayout::uniform("wall"));
    CHECK(m.n_cells() == 4);
    CHECK(m.n_interior_faces() == 4);
    CHECK(m.n_boundary_faces() == 8);
    CHECK(m.patch_faces("wall").size() == 8);
    CHECK(worst_closure(m) < 1e-15);
}

TEST_CASE("uniform tiling and geometry")
{
    const Mesh2D m = Mesh2D::build_cartesian(7, 5, {-1, -1}, {2, 2}, PatchLayout::uniform("b"));
    double total = 0.0;
    for (int c = 0; c < m.n_cells(); ++c) {
        CHECK(m.cell_volume(c) == doctest::Approx((2.0 / 7) * (2.0 / 5)).epsilon(1e-14));
        total += m.cell_volume(c);
    }
    CHECK(total == doctest::Approx(4.0).epsilon(1e-13));
    for (int f = 0; f < m.n_interior_faces(); ++f) {
        REQUIRE(m.owner(f) >= 0);
        REQUIRE(m.neighbour(f) < m.n_cells());
        CHECK(m.owner(f) < m.neighbour(f));
        // normal points owner -> neighbour
        const Vec2 d = m.cell_centroid(m.neighbour(f)) - m.cell_centroid(m.owner(f));
        CHECK(dot(d, m.normal(f)) > 0.0);
    }
    for (int f = m.n_interior_faces(); f < m.n_faces(); ++f) {
        const Vec2 d = m.face_centroid(f) - m.cell_centroid(m.owner(f));
        CHECK(dot(d, m.normal(f)) > 0.0);
    }
}

TEST_CASE("mesh ladder builds with closed cells")
{
    for (int n : {12, 25, 50, 100, 200, 400}) {
        const Mesh2D m = Mesh2D::build_cartesian(n, n, {-1, -1}, {2, 2}, PatchLayout::uniform("boundary"));
        CHECK(m.n_cells() == n * n);
        CHECK(worst_closure(m) < 1e-12);
    }
}

TEST_CASE("invalid dimensions are rejected")
{
    CHECK_THROWS(Mesh2D::build_cartesian(1, 4, {0, 0}, {1, 1}, PatchLayout::uniform("w")));
    CHECK_THROWS(Mesh2D::build_cartesian(4, 4, {0, 0}, {0, 1}, PatchLayout::uniform("w")));
    CHECK_THROWS(Mesh2D::build_cartesian(4, 4, {0, 0}, {1, -1}, PatchLayout::uniform("w")));
}

TEST_CASE("patch lookup")
{
    const FlowCase lid = make_case("lid", [] {
        CaseParameters p = default_parameters("lid");
        p.cells = 16;
        return p;
    }());
    const Mesh2D& m = *lid.mesh;
    const auto top = m.patch_faces("lid");
    CHECK(top.size() == 16);
    for (int f : top) {
        CHECK(m.is_boundary(f));
        CHECK(m.face_centroid(f).y == doctest::Approx(1.0));
    }
    CHECK_THROWS(m.patch_faces("nope"));

    // union of the patches is every boundary face, each exactly once
    std::multiset<int> seen;
    for (const Patch& p : m.patches()) seen.insert(p.faces.begin(), p.faces.end());
    CHECK(seen.size() == static_cast<std::size_t>(m.n_boundary_faces()));
    CHECK(std::set<int>(seen.begin(), seen.end()).size() == seen.size());
}

TEST_CASE("jets outlet faces by coordinate")
{
    CaseParameters p = default_parameters("jets");
    p.cells = 50;
    const FlowCase jets = make_case("jets", p);
    const Mesh2D& m = *jets.mesh;
    std::set<int> expected;
    for (int b = 0; b < m.n_boundary_faces(); ++b) {
        const int f = m.boundary_face(b);
        const Vec2 c = m.face_centroid(f);
        if (std::abs(c.x) < 1e-12 && c.y >= 0.0 && c.y <= 0.12) expected.insert(f);
    }
    const auto got = m.patch_faces("outlet");
    CHECK(std::set<int>(got.begin(), got.end()) == expected);
    CHECK(expected.size() == 6);  // centroids 0.01 .. 0.11
}

TEST_CASE("boundary spec must cover every patch")
{
    const Mesh2D m = Mesh2D::build_cartesian(3, 3, {0, 0}, {1, 1}, [] {
        PatchLayout l = PatchLayout::uniform("wall");
        l[Edge::top].patch = "lid";
        return l;
    }());
    BoundarySpec s;
    s.wall("wall");
    CHECK_THROWS(resolve_boundary(m, s));
    s.set("lid", {BoundaryKind::dirichlet_velocity, [](Vec2) { return Vec2{1.0, 0.0}; }});
    const BoundaryConditions bc = resolve_boundary(m, s);
    CHECK_FALSE(bc.has_outlet());
    int lid_faces = 0;
    for (std::size_t b = 0; b < bc.value.size(); ++b) lid_faces += bc.value[b].x == 1.0;
    CHECK(lid_faces == 3);
}
