#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "pgdflow/field.hpp"
#include "pgdflow/mesh.hpp"

namespace pgdflow {

class DomainError : public std::domain_error {
    using std::domain_error::domain_error;
};

/// Uniform grid of n_intervals + 1 nodes on [lo, hi] with trapezoidal weights.
class ParametricGrid {
public:
    ParametricGrid(double lo, double hi, int n_intervals);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    int n_intervals() const { return size() - 1; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    double node(int j) const { return nodes_.at(j); }
    bool contains(double mu) const;

private:
    double lo_, hi_;
    std::vector<double> nodes_, weights_;
};

using GridPtr = std::shared_ptr<const ParametricGrid>;

/// Trapezoidal rule on the grid nodes.
double parametric_integral(const ParametricGrid& grid, std::span<const double> values);

struct ParametricFunction {
    GridPtr grid;
    std::vector<double> values;

    ParametricFunction() = default;
    ParametricFunction(GridPtr g, std::vector<double> v);
    static ParametricFunction constant(GridPtr g, double c);
    static ParametricFunction from(GridPtr g, const std::function<double(double)>& f);

    int size() const { return static_cast<int>(values.size()); }
    double operator[](int j) const { return values[j]; }
    /// L2 norm over the parametric interval.
    double norm() const;
    /// Piecewise-linear interpolation; throws DomainError outside the interval.
    double at(double mu) const;
};

/// Integral of the nodewise product of the given functions.
double integral_of_product(std::initializer_list<const ParametricFunction*> fs);

/// Sum_i psi_i(mu) D_i(x).
struct SeparableScalar {
    std::vector<std::pair<ParametricFunction, std::vector<double>>> terms;
};

/// Sum_i eta_i(mu) S_i(x).
struct SeparableVector {
    std::vector<std::pair<ParametricFunction, VectorField>> terms;
};

std::vector<double> evaluate_separable(const SeparableScalar& data, int node);
VectorField evaluate_separable(const SeparableVector& data, int node);

/// Value of a separable vector at a parameter between nodes (interpolated
/// parametric factors).
VectorField evaluate_separable_at(const SeparableVector& data, double mu);

}  // namespace pgdflow
