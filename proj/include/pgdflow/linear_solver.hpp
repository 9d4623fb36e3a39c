#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgdflow/mesh.hpp"

namespace pgdflow {

/// Sparse matrix over cell unknowns in lower-diagonal-upper form: one diagonal
/// entry per cell and one lower/upper pair per interior face. This covers the
/// 5-point stencil of a structured mesh with cheap face-loop products.
class LduMatrix {
public:
    LduMatrix() = default;
    explicit LduMatrix(std::shared_ptr<const LduAddressing> addressing);

    int size() const { return addr_ ? addr_->n_cells : 0; }
    int n_faces() const { return static_cast<int>(upper_.size()); }
    const LduAddressing& addressing() const { return *addr_; }

    std::vector<double>& diag() { return diag_; }
    const std::vector<double>& diag() const { return diag_; }
    /// Coefficient of the neighbour unknown in the owner row.
    std::vector<double>& upper() { return upper_; }
    const std::vector<double>& upper() const { return upper_; }
    /// Coefficient of the owner unknown in the neighbour row.
    std::vector<double>& lower() { return lower_; }
    const std::vector<double>& lower() const { return lower_; }

    bool symmetric() const;

    void multiply(std::span<const double> x, std::span<double> y) const;
    /// y = b - A x
    void residual(std::span<const double> x, std::span<const double> b, std::span<double> r) const;

private:
    std::shared_ptr<const LduAddressing> addr_;
    std::vector<double> diag_, upper_, lower_;
};

struct SolverControl {
    double rel_tol = 1e-8;
    double abs_tol = 1e-300;
    int max_iter = 1000;
};

struct SolverReport {
    int iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    bool converged = false;
    std::vector<double> history;
};

class LinearSolverError : public std::runtime_error {
public:
    LinearSolverError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

/// Preconditioned conjugate gradients with diagonal incomplete Cholesky. The
/// matrix must be symmetric positive definite.
SolverReport solve_pcg(const LduMatrix& a, std::span<const double> b, std::span<double> x,
                       const SolverControl& control);

/// Sparse LDL^T factorisation of a symmetric LduMatrix. Used as a
/// preconditioner that can be reused while the matrix drifts slowly.
class FactorisedPreconditioner {
public:
    explicit FactorisedPreconditioner(const LduMatrix& a);
    ~FactorisedPreconditioner();
    FactorisedPreconditioner(const FactorisedPreconditioner&) = delete;
    FactorisedPreconditioner& operator=(const FactorisedPreconditioner&) = delete;

    void apply(std::span<const double> r, std::span<double> w) const;
    int size() const { return n_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int n_ = 0;
};

/// PCG with a user-supplied factorisation instead of DIC.
SolverReport solve_pcg(const LduMatrix& a, std::span<const double> b, std::span<double> x,
                       const SolverControl& control, const FactorisedPreconditioner& precond);

/// Preconditioned BiCGStab with diagonal incomplete LU.
SolverReport solve_pbicgstab(const LduMatrix& a, std::span<const double> b, std::span<double> x,
                             const SolverControl& control);

/// Picks PCG for symmetric systems and BiCGStab otherwise. Stops when the
/// residual 2-norm drops below max(abs_tol, rel_tol * initial) or after
/// max_iter iterations (reported through SolverReport::converged).
SolverReport solve_sparse(const LduMatrix& a, std::span<const double> b, std::span<double> x,
                          const SolverControl& control);

}  // namespace pgdflow
