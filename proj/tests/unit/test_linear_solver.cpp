#include <doctest.h>

#include <cmath>
#include <random>

#include "pgdflow/linear_solver.hpp"

using namespace pgdflow;

namespace {

// 5-point Laplacian (Dirichlet walls lumped into the diagonal) on an n x n mesh
LduMatrix laplacian(const Mesh2D& m)
{
    LduMatrix a(m.addressing());
    a.diag().assign(m.n_cells(), 0.0);
    for (int f = 0; f < m.n_interior_faces(); ++f) {
        const double g = m.area(f) / m.delta(f);
        a.diag()[m.owner(f)] += g;
        a.diag()[m.neighbour(f)] += g;
        a.upper()[f] = a.lower()[f] = -g;
    }
    for (int f = m.n_interior_faces(); f < m.n_faces(); ++f) a.diag()[m.owner(f)] += m.area(f) / m.delta(f);
    return a;
}

double norm(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("identity solves in one iteration")
{
    const Mesh2D m = Mesh2D::build_cartesian(4, 4, {0, 0}, {1, 1}, PatchLayout::uniform("w"));
    LduMatrix a(m.addressing());
    a.diag().assign(m.n_cells(), 1.0);
    std::vector<double> b(m.n_cells()), x(m.n_cells(), 0.0);
    for (int i = 0; i < m.n_cells(); ++i) b[i] = i - 3.5;
    const SolverReport r = solve_sparse(a, b, x, {1e-10, 1e-300, 100});
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
    for (int i = 0; i < m.n_cells(); ++i) CHECK(x[i] == doctest::Approx(b[i]));
}

TEST_CASE("manufactured Laplacian solution is recovered")
{
    const Mesh2D m = Mesh2D::build_cartesian(20, 20, {0, 0}, {1, 1}, PatchLayout::uniform("w"));
    const LduMatrix a = laplacian(m);
    CHECK(a.symmetric());
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> xs(m.n_cells()), b(m.n_cells());
    for (double& v : xs) v = u(rng);
    a.multiply(xs, b);

    for (int variant = 0; variant < 3; ++variant) {
        std::vector<double> x(m.n_cells(), 0.0);
        const SolverControl ctl{1e-10, 1e-300, 2000};
        SolverReport r;
        if (variant == 0) r = solve_pcg(a, b, x, ctl);
        if (variant == 1) r = solve_pbicgstab(a, b, x, ctl);
        if (variant == 2) {
            const FactorisedPreconditioner ldlt(a);
            r = solve_pcg(a, b, x, ctl, ldlt);
            CHECK(r.iterations <= 2);
        }
        CHECK(r.converged);
        std::vector<double> res(m.n_cells());
        a.residual(x, b, res);
        CHECK(norm(res) <= 1e-10 * norm(b) * 1.0001);
        double err = 0.0;
        for (int i = 0; i < m.n_cells(); ++i) err = std::max(err, std::abs(x[i] - xs[i]));
        CHECK(err < 1e-7);
    }
}

TEST_CASE("conjugate gradients decrease the energy error monotonically")
{
    // CG minimises the A-norm of the error over growing Krylov spaces, so the
    // A-norm error after k iterations cannot increase with k.
    const Mesh2D m = Mesh2D::build_cartesian(12, 12, {0, 0}, {1, 1}, PatchLayout::uniform("w"));
    const LduMatrix a = laplacian(m);
    std::vector<double> xs(m.n_cells()), b(m.n_cells());
    for (int i = 0; i < m.n_cells(); ++i) xs[i] = std::sin(0.3 * i);
    a.multiply(xs, b);
    double prev = INFINITY, first = 0.0;
    for (int k = 1; k <= 25; ++k) {
        std::vector<double> x(m.n_cells(), 0.0);
        solve_pcg(a, b, x, {1e-300, 1e-300, k});
        std::vector<double> e(m.n_cells()), ae(m.n_cells());
        for (int i = 0; i < m.n_cells(); ++i) e[i] = x[i] - xs[i];
        a.multiply(e, ae);
        double en = 0.0;
        for (int i = 0; i < m.n_cells(); ++i) en += e[i] * ae[i];
        if (k == 1) first = en;
        // below this the energy norm is rounding noise
        if (en > 1e-24 * first) CHECK(en <= prev * (1 + 1e-12));
        prev = en;
    }
}

TEST_CASE("nonsymmetric system goes to BiCGStab")
{
    const Mesh2D m = Mesh2D::build_cartesian(10, 10, {0, 0}, {1, 1}, PatchLayout::uniform("w"));
    LduMatrix a = laplacian(m);
    for (int f = 0; f < m.n_interior_faces(); ++f) a.upper()[f] -= 0.3;  // convection-like skew part
    for (double& d : a.diag()) d += 0.3 * 2;
    CHECK_FALSE(a.symmetric());
    std::vector<double> b(m.n_cells(), 1.0), x(m.n_cells(), 0.0);
    const SolverReport r = solve_sparse(a, b, x, {1e-9, 1e-300, 500});
    CHECK(r.converged);
    std::vector<double> res(m.n_cells());
    a.residual(x, b, res);
    CHECK(norm(res) <= 1e-9 * norm(b) * 1.0001);
}
