#include <doctest.h>

#include <cmath>

#include "pgdflow/cases.hpp"
#include "pgdflow/parametric.hpp"

using namespace pgdflow;

TEST_CASE("grid nodes and weights")
{
    const ParametricGrid g(5e-3, 1e-2, 10);
    CHECK(g.size() == 11);
    double sum = 0.0;
    for (int j = 0; j < g.size(); ++j) {
        CHECK(g.weights()[j] > 0.0);
        if (j) CHECK(g.node(j) > g.node(j - 1));
        sum += g.weights()[j];
    }
    CHECK(sum == doctest::Approx(5e-3).epsilon(1e-14));
    CHECK(g.node(10) == 1e-2);
    CHECK_THROWS(ParametricGrid(1.0, 1.0, 4));
    CHECK_THROWS(ParametricGrid(0.0, 1.0, 0));
}

TEST_CASE("trapezoidal integrals")
{
    for (int n : {1, 3, 40}) {
        auto g = std::make_shared<ParametricGrid>(0.0, 1.0, n);
        CHECK(parametric_integral(*g, ParametricFunction::from(g, [](double m) { return m; }).values) ==
              doctest::Approx(0.5).epsilon(1e-15));
    }
    const ParametricGrid k(5e-3, 1e-2, 7);
    CHECK(parametric_integral(k, std::vector<double>(8, 1.0)) == doctest::Approx(5e-3).epsilon(1e-14));
    auto g = std::make_shared<ParametricGrid>(0.0, 1.0, 40);
    const double sq = parametric_integral(*g, ParametricFunction::from(g, [](double m) { return m * m; }).values);
    CHECK(std::abs(sq - 1.0 / 3.0) < 1e-3);
    CHECK_THROWS(parametric_integral(*g, std::vector<double>(3, 1.0)));
}

TEST_CASE("integrals are linear and exact for piecewise-linear data")
{
    auto g = std::make_shared<ParametricGrid>(-1.0, 2.0, 6);
    const ParametricFunction a = ParametricFunction::from(g, [](double m) { return std::sin(m); });
    const ParametricFunction b = ParametricFunction::from(g, [](double m) { return m * m * m; });
    std::vector<double> c(g->size());
    for (int j = 0; j < g->size(); ++j) c[j] = 2.0 * a[j] - 3.0 * b[j];
    CHECK(parametric_integral(*g, c) ==
          doctest::Approx(2.0 * parametric_integral(*g, a.values) - 3.0 * parametric_integral(*g, b.values)));
    // the piecewise-linear interpolant integrates exactly: sum over intervals of h (f_j + f_j+1) / 2
    double exact = 0.0;
    for (int j = 0; j < g->n_intervals(); ++j) exact += 0.5 * (g->node(j + 1) - g->node(j)) * (a[j] + a[j + 1]);
    CHECK(parametric_integral(*g, a.values) == doctest::Approx(exact).epsilon(1e-15));
}

TEST_CASE("parametric functions")
{
    auto g = std::make_shared<ParametricGrid>(0.0, 1.0, 4);
    const ParametricFunction f = ParametricFunction::from(g, [](double m) { return 1.0 + m; });
    CHECK(f.at(0.25) == 1.25);
    CHECK(f.at(0.3) == doctest::Approx(1.3));
    CHECK(f.at(1.0) == 2.0);
    CHECK_THROWS_AS(f.at(1.01), DomainError);
    CHECK_THROWS_AS(f.at(-0.5), DomainError);
    CHECK_THROWS(ParametricFunction(g, {1.0, 2.0}));
    CHECK_THROWS(ParametricFunction(g, {1.0, 2.0, NAN, 0.0, 1.0}));
    const ParametricFunction one = ParametricFunction::constant(g, 1.0);
    CHECK(one.norm() == doctest::Approx(1.0));
    CHECK(integral_of_product({&f, &one, &one}) == doctest::Approx(1.5));
}

TEST_CASE("separable data evaluation")
{
    const Mesh2D m = Mesh2D::build_cartesian(3, 3, {0, 0}, {1, 1}, PatchLayout::uniform("w"));
    auto g = std::make_shared<ParametricGrid>(5e-3, 1e-2, 2);
    SeparableScalar nu;
    nu.terms.emplace_back(ParametricFunction::constant(g, 1.0), std::vector<double>(9, 0.3));
    for (double v : evaluate_separable(nu, 1)) CHECK(v == 0.3);

    SeparableScalar visc;
    visc.terms.emplace_back(ParametricFunction::from(g, [](double mu) { return mu; }), std::vector<double>(9, 1.0));
    for (double v : evaluate_separable(visc, 1)) CHECK(v == doctest::Approx(7.5e-3));

    // additivity over the term list
    SeparableScalar both = visc;
    both.terms.push_back(nu.terms.front());
    const auto s = evaluate_separable(both, 2);
    for (double v : s) CHECK(v == doctest::Approx(1e-2 + 0.3));

    SeparableScalar bad = visc;
    bad.terms.emplace_back(ParametricFunction::constant(g, 1.0), std::vector<double>(4, 1.0));
    CHECK_THROWS(evaluate_separable(bad, 0));
    auto other = std::make_shared<ParametricGrid>(5e-3, 1e-2, 2);
    SeparableScalar mixed = visc;
    mixed.terms.emplace_back(ParametricFunction::constant(other, 1.0), std::vector<double>(9, 1.0));
    CHECK_THROWS(evaluate_separable(mixed, 0));
    CHECK_THROWS(evaluate_separable(visc, 3));
}

TEST_CASE("Taylor-separated Kovasznay convection")
{
    const double mu = 1e-2;
    const Mesh2D m = Mesh2D::build_cartesian(100, 100, {-1, -1}, {2, 2}, PatchLayout::uniform("boundary"));
    auto g = std::make_shared<ParametricGrid>(5e-3, 1e-2, 4);
    const int node = 4;
    auto rel_error = [&](int order) {
        const VectorField a = evaluate_separable(taylor_separated_convection(order, g, m), node);
        double e = 0.0, r = 0.0;
        for (int c = 0; c < m.n_cells(); ++c) {
            const Vec2 ex = kovasznay_exact(m.cell_centroid(c), mu).u;
            const Vec2 d = a.cells[c] - ex;
            e += dot(d, d);
            r += dot(ex, ex);
        }
        return std::sqrt(e / r);
    };
    double prev = INFINITY;
    for (int order = 1; order <= 6; ++order) {
        const double e = rel_error(order);
        CHECK(e < prev);
        prev = e;
    }
    // the 4-term truncation error is of the order of a few 1e-3 (the exact value
    // depends on the norm; see the README)
    const double e4 = rel_error(4);
    CHECK(e4 < 4.3e-3);
    CHECK(e4 > 1e-5);

    // order 1 keeps the x-independent leading term (1 - cos 2 pi y, lambda/2pi sin 2 pi y)
    const VectorField a1 = evaluate_separable(taylor_separated_convection(1, g, m), node);
    const double lam = kovasznay_lambda(mu);
    for (int c = 0; c < m.n_cells(); c += 997) {
        const Vec2 x = m.cell_centroid(c);
        CHECK(a1.cells[c].x == doctest::Approx(1.0 - std::cos(2 * M_PI * x.y)).epsilon(1e-12));
        CHECK(a1.cells[c].y == doctest::Approx(lam / (2 * M_PI) * std::sin(2 * M_PI * x.y)).scale(1.0).epsilon(1e-12));
    }
}
