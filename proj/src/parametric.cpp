#include "pgdflow/parametric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pgdflow {

ParametricGrid::ParametricGrid(double lo, double hi, int n_intervals) : lo_(lo), hi_(hi)
{
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("ParametricGrid: need lo < hi");
    if (n_intervals < 1) throw std::invalid_argument("ParametricGrid: need at least one interval");
    const double h = (hi - lo) / n_intervals;
    nodes_.resize(n_intervals + 1);
    weights_.assign(n_intervals + 1, h);
    for (int j = 0; j <= n_intervals; ++j) nodes_[j] = lo + j * h;
    nodes_.back() = hi;
    weights_.front() = weights_.back() = 0.5 * h;
}

bool ParametricGrid::contains(double mu) const
{
    const double slack = 1e-12 * (hi_ - lo_);
    return mu >= lo_ - slack && mu <= hi_ + slack;
}

double parametric_integral(const ParametricGrid& grid, std::span<const double> values)
{
    if (static_cast<int>(values.size()) != grid.size())
        throw std::invalid_argument("parametric_integral: value count does not match the grid");
    double s = 0.0;
    for (int j = 0; j < grid.size(); ++j) s += grid.weights()[j] * values[j];
    return s;
}

ParametricFunction::ParametricFunction(GridPtr g, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v))
{
    if (!grid) throw std::invalid_argument("ParametricFunction: null grid");
    if (static_cast<int>(values.size()) != grid->size())
        throw std::invalid_argument("ParametricFunction: value count does not match the grid");
    for (double x : values)
        if (!std::isfinite(x)) throw std::invalid_argument("ParametricFunction: non-finite value");
}

ParametricFunction ParametricFunction::constant(GridPtr g, double c)
{
    const int n = g->size();
    return ParametricFunction(std::move(g), std::vector<double>(n, c));
}

ParametricFunction ParametricFunction::from(GridPtr g, const std::function<double(double)>& f)
{
    std::vector<double> v;
    for (double mu : g->nodes()) v.push_back(f(mu));
    return ParametricFunction(std::move(g), std::move(v));
}

double ParametricFunction::norm() const
{
    std::vector<double> sq(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) sq[j] = values[j] * values[j];
    return std::sqrt(parametric_integral(*grid, sq));
}

double ParametricFunction::at(double mu) const
{
    if (!grid->contains(mu))
        throw DomainError("parameter " + std::to_string(mu) + " outside [" + std::to_string(grid->lo()) +
                          ", " + std::to_string(grid->hi()) + "]");
    const double h = (grid->hi() - grid->lo()) / grid->n_intervals();
    const double s = std::clamp((mu - grid->lo()) / h, 0.0, static_cast<double>(grid->n_intervals()));
    const int j = std::min(static_cast<int>(s), grid->n_intervals() - 1);
    const double t = s - j;
    if (t == 0.0) return values[j];
    if (t == 1.0) return values[j + 1];
    return (1.0 - t) * values[j] + t * values[j + 1];
}

double integral_of_product(std::initializer_list<const ParametricFunction*> fs)
{
    if (fs.size() == 0) throw std::invalid_argument("integral_of_product: no functions");
    const ParametricGrid& grid = *(*fs.begin())->grid;
    double s = 0.0;
    for (int j = 0; j < grid.size(); ++j) {
        double prod = grid.weights()[j];
        for (const ParametricFunction* f : fs) prod *= f->values[j];
        s += prod;
    }
    return s;
}

std::vector<double> evaluate_separable(const SeparableScalar& data, int node)
{
    if (data.terms.empty()) throw std::invalid_argument("evaluate_separable: no terms");
    const std::size_t n = data.terms.front().second.size();
    std::vector<double> out(n, 0.0);
    for (const auto& [psi, d] : data.terms) {
        if (d.size() != n) throw std::invalid_argument("evaluate_separable: terms on different meshes");
        if (psi.grid != data.terms.front().first.grid)
            throw std::invalid_argument("evaluate_separable: terms on different grids");
        if (node < 0 || node >= psi.size()) throw std::out_of_range("evaluate_separable: node out of range");
        for (std::size_t c = 0; c < n; ++c) out[c] += psi[node] * d[c];
    }
    return out;
}

namespace {

VectorField combine(const SeparableVector& data, const std::function<double(const ParametricFunction&)>& coef)
{
    if (data.terms.empty()) throw std::invalid_argument("evaluate_separable: no terms");
    const VectorField& first = data.terms.front().second;
    VectorField out;
    out.cells.assign(first.cells.size(), Vec2{});
    out.boundary.assign(first.boundary.size(), Vec2{});
    for (const auto& [eta, s] : data.terms) {
        if (s.cells.size() != out.cells.size() || s.boundary.size() != out.boundary.size())
            throw std::invalid_argument("evaluate_separable: terms on different meshes");
        if (eta.grid != data.terms.front().first.grid)
            throw std::invalid_argument("evaluate_separable: terms on different grids");
        axpy(coef(eta), s, out);
    }
    return out;
}

}  // namespace

VectorField evaluate_separable(const SeparableVector& data, int node)
{
    return combine(data, [node](const ParametricFunction& eta) {
        if (node < 0 || node >= eta.size()) throw std::out_of_range("evaluate_separable: node out of range");
        return eta[node];
    });
}

VectorField evaluate_separable_at(const SeparableVector& data, double mu)
{
    return combine(data, [mu](const ParametricFunction& eta) { return eta.at(mu); });
}

}  // namespace pgdflow
