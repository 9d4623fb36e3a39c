#include "pgdflow/linear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace pgdflow {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_sizes(const LduMatrix& a, std::span<const double> b, std::span<double> x)
{
    if (static_cast<int>(b.size()) != a.size() || static_cast<int>(x.size()) != a.size())
        throw std::invalid_argument("linear solve: vector sizes do not match the matrix");
}

// Reciprocal diagonal of the incomplete factorisation that only modifies the
// diagonal (DIC for symmetric, DILU otherwise).
std::vector<double> factor_diagonal(const LduMatrix& a)
{
    const auto& l = a.addressing().lower;
    const auto& u = a.addressing().upper;
    std::vector<double> rd = a.diag();
    for (int f = 0; f < a.n_faces(); ++f) {
        if (rd[l[f]] == 0.0) throw LinearSolverError("zero pivot in incomplete factorisation", {});
        rd[u[f]] -= a.upper()[f] * a.lower()[f] / rd[l[f]];
    }
    for (double& d : rd) {
        if (d == 0.0 || !std::isfinite(d))
            throw LinearSolverError("zero pivot in incomplete factorisation", {});
        d = 1.0 / d;
    }
    return rd;
}

void precondition(const LduMatrix& a, const std::vector<double>& rd, std::span<const double> r,
                  std::span<double> w)
{
    const auto& l = a.addressing().lower;
    const auto& u = a.addressing().upper;
    const auto& lo = a.lower();
    const auto& up = a.upper();
    const int n = a.size();
    const int nf = a.n_faces();
    for (int i = 0; i < n; ++i) w[i] = rd[i] * r[i];
    for (int f = 0; f < nf; ++f) w[u[f]] -= rd[u[f]] * lo[f] * w[l[f]];
    for (int f = nf - 1; f >= 0; --f) w[l[f]] -= rd[l[f]] * up[f] * w[u[f]];
}

}  // namespace

LduMatrix::LduMatrix(std::shared_ptr<const LduAddressing> addressing)
    : addr_(std::move(addressing)),
      diag_(addr_->n_cells, 0.0),
      upper_(addr_->lower.size(), 0.0),
      lower_(addr_->lower.size(), 0.0)
{
}

bool LduMatrix::symmetric() const { return upper_ == lower_; }

void LduMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    const auto& l = addr_->lower;
    const auto& u = addr_->upper;
    const int n = size();
    for (int i = 0; i < n; ++i) y[i] = diag_[i] * x[i];
    const int nf = n_faces();
    for (int f = 0; f < nf; ++f) {
        y[l[f]] += upper_[f] * x[u[f]];
        y[u[f]] += lower_[f] * x[l[f]];
    }
}

void LduMatrix::residual(std::span<const double> x, std::span<const double> b,
                         std::span<double> r) const
{
    multiply(x, r);
    for (int i = 0; i < size(); ++i) r[i] = b[i] - r[i];
}

namespace {

template <class Precondition>
SolverReport pcg_impl(const LduMatrix& a, std::span<const double> b, std::span<double> x,
                      const SolverControl& control, Precondition&& precondition_into)
{
    check_sizes(a, b, x);
    const int n = a.size();
    SolverReport rep;
    std::vector<double> r(n), w(n), p(n), q(n);
    a.residual(x, b, r);
    rep.initial_residual = rep.final_residual = norm2(r);
    rep.history.push_back(rep.initial_residual);
    const double target = std::max(control.abs_tol, control.rel_tol * rep.initial_residual);
    if (rep.initial_residual <= target) {
        rep.converged = true;
        return rep;
    }

    double rho_old = 1.0;
    for (int it = 0; it < control.max_iter; ++it) {
        precondition_into(r, w);
        const double rho = dot(r, w);
        if (it == 0) {
            p = w;
        } else {
            const double beta = rho / rho_old;
            for (int i = 0; i < n; ++i) p[i] = w[i] + beta * p[i];
        }
        a.multiply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0) || !std::isfinite(pq))
            throw LinearSolverError("PCG breakdown: matrix not positive definite", rep.history);
        const double alpha = rho / pq;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rho_old = rho;
        rep.iterations = it + 1;
        rep.final_residual = norm2(r);
        rep.history.push_back(rep.final_residual);
        if (!std::isfinite(rep.final_residual))
            throw LinearSolverError("PCG diverged", rep.history);
        if (rep.final_residual <= target) {
            rep.converged = true;
            break;
        }
    }
    return rep;
}

}  // namespace

SolverReport solve_pcg(const LduMatrix& a, std::span<const double> b, std::span<double> x,
                       const SolverControl& control)
{
    check_sizes(a, b, x);
    std::vector<double> rd;
    return pcg_impl(a, b, x, control, [&](std::span<const double> r, std::span<double> w) {
        if (rd.empty()) rd = factor_diagonal(a);
        precondition(a, rd, r, w);
    });
}

SolverReport solve_pcg(const LduMatrix& a, std::span<const double> b, std::span<double> x,
                       const SolverControl& control, const FactorisedPreconditioner& precond)
{
    if (precond.size() != a.size())
        throw std::invalid_argument("solve_pcg: preconditioner size does not match the matrix");
    return pcg_impl(a, b, x, control,
                    [&](std::span<const double> r, std::span<double> w) { precond.apply(r, w); });
}

struct FactorisedPreconditioner::Impl {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

FactorisedPreconditioner::FactorisedPreconditioner(const LduMatrix& a)
    : impl_(std::make_unique<Impl>()), n_(a.size())
{
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(a.size() + 2 * a.n_faces());
    for (int i = 0; i < a.size(); ++i) t.emplace_back(i, i, a.diag()[i]);
    const auto& l = a.addressing().lower;
    const auto& u = a.addressing().upper;
    for (int f = 0; f < a.n_faces(); ++f) {
        if (a.upper()[f] == 0.0) continue;
        t.emplace_back(l[f], u[f], a.upper()[f]);
        t.emplace_back(u[f], l[f], a.lower()[f]);
    }
    Eigen::SparseMatrix<double> m(n_, n_);
    m.setFromTriplets(t.begin(), t.end());
    impl_->ldlt.compute(m);
    if (impl_->ldlt.info() != Eigen::Success)
        throw LinearSolverError("sparse LDL^T factorisation failed", {});
}

FactorisedPreconditioner::~FactorisedPreconditioner() = default;

void FactorisedPreconditioner::apply(std::span<const double> r, std::span<double> w) const
{
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), n_);
    Eigen::Map<Eigen::VectorXd> wv(w.data(), n_);
    wv = impl_->ldlt.solve(rv);
}

SolverReport solve_pbicgstab(const LduMatrix& a, std::span<const double> b, std::span<double> x,
                             const SolverControl& control)
{
    check_sizes(a, b, x);
    const int n = a.size();
    SolverReport rep;
    std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), y(n), s(n), z(n), t(n);
    a.residual(x, b, r);
    rep.initial_residual = rep.final_residual = norm2(r);
    rep.history.push_back(rep.initial_residual);
    const double target = std::max(control.abs_tol, control.rel_tol * rep.initial_residual);
    if (rep.initial_residual <= target) {
        rep.converged = true;
        return rep;
    }

    const std::vector<double> rd = factor_diagonal(a);
    r0 = r;
    const double r0_norm = rep.initial_residual;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (int it = 0; it < control.max_iter; ++it) {
        const double rho_new = dot(r0, r);
        if (std::abs(rho_new) <= 1e-30 * r0_norm * rep.final_residual)
            throw LinearSolverError("BiCGStab breakdown: rho vanished", rep.history);
        if (it == 0) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho_new;
        precondition(a, rd, p, y);
        a.multiply(y, v);
        const double r0v = dot(r0, v);
        if (r0v == 0.0 || !std::isfinite(r0v))
            throw LinearSolverError("BiCGStab breakdown: r0.v vanished", rep.history);
        alpha = rho / r0v;
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        rep.iterations = it + 1;
        const double s_norm = norm2(s);
        if (s_norm <= target) {
            for (int i = 0; i < n; ++i) x[i] += alpha * y[i];
            r = s;
            rep.final_residual = s_norm;
            rep.history.push_back(s_norm);
            rep.converged = true;
            break;
        }
        precondition(a, rd, s, z);
        a.multiply(z, t);
        const double tt = dot(t, t);
        if (tt == 0.0 || !std::isfinite(tt))
            throw LinearSolverError("BiCGStab breakdown: t vanished", rep.history);
        omega = dot(t, s) / tt;
        if (omega == 0.0)
            throw LinearSolverError("BiCGStab breakdown: omega vanished", rep.history);
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rep.final_residual = norm2(r);
        rep.history.push_back(rep.final_residual);
        if (!std::isfinite(rep.final_residual))
            throw LinearSolverError("BiCGStab diverged", rep.history);
        if (rep.final_residual <= target) {
            rep.converged = true;
            break;
        }
    }
    return rep;
}

SolverReport solve_sparse(const LduMatrix& a, std::span<const double> b, std::span<double> x,
                          const SolverControl& control)
{
    if (!(control.rel_tol > 0.0 && control.rel_tol < 1.0))
        throw std::invalid_argument("solve_sparse: rel_tol must lie in (0, 1)");
    return a.symmetric() ? solve_pcg(a, b, x, control) : solve_pbicgstab(a, b, x, control);
}

}  // namespace pgdflow
