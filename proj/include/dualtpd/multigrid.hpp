#pragma once

// Geometric multigrid for the Schur complement S = D^T I_sigma^{-1} D on a
// nested mesh hierarchy (Galerkin coarse operators, symmetric Gauss-Seidel
// smoothing, dense Cholesky on the coarsest level) and a preconditioned
// conjugate gradient driver.

#include "dualtpd/fem.hpp"
#include "dualtpd/mesh.hpp"
#include "dualtpd/sparse.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dualtpd {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MGConfig {
    double tol = 1e-2;  ///< relative residual target
    int max_cycles = 5; ///< V-cycle cap
    int pre_smooth = 2;
    int post_smooth = 2;

    void validate() const
    {
        if (!(tol > 0.0 && tol < 1.0)) {
            throw ConfigError("MGConfig: tol must lie in (0, 1)");
        }
        if (max_cycles < 1) {
            throw ConfigError("MGConfig: max_cycles must be >= 1");
        }
        if (pre_smooth < 0 || post_smooth < 0) {
            throw ConfigError("MGConfig: smoothing counts must be >= 0");
        }
    }
};

/// Interior-DoF prolongations of a mesh hierarchy, coarse to fine. Built once
/// and shared by every operator assembled on the finest mesh.
struct MultigridTransfer {
    std::vector<Index> level_sizes;
    std::vector<SparseMatrix> prolongations; ///< [l] maps level l to level l+1
};

inline MultigridTransfer make_transfer(const MeshHierarchy& hierarchy)
{
    MultigridTransfer tr;
    std::vector<P1Space> spaces;
    spaces.reserve(hierarchy.num_levels());
    for (const auto& m : hierarchy.levels) {
        spaces.emplace_back(m);
        tr.level_sizes.push_back(spaces.back().num_dofs());
    }
    for (std::size_t l = 0; l + 1 < hierarchy.num_levels(); ++l) {
        tr.prolongations.push_back(restrict_prolongation(hierarchy.prolongations[l], spaces[l], spaces[l + 1]));
    }
    return tr;
}

class MGHierarchy {
public:
    /// Galerkin-coarsens S_fine through every level of `transfer`.
    MGHierarchy(SparseMatrix s_fine, const MultigridTransfer& transfer) : prolongations_(&transfer.prolongations)
    {
        if (s_fine.rows() != s_fine.cols()) {
            throw DimensionError("build_mg: operator must be square");
        }
        if (transfer.level_sizes.empty() || s_fine.rows() != transfer.level_sizes.back()) {
            throw DimensionError("build_mg: operator size does not match the finest level");
        }
        if (s_fine.relative_asymmetry() > 1e-10) {
            throw std::invalid_argument("build_mg: operator is not symmetric");
        }
        const std::size_t nlev = transfer.level_sizes.size();
        ops_.resize(nlev);
        ops_[nlev - 1] = std::move(s_fine);
        for (std::size_t l = nlev - 1; l > 0; --l) {
            ops_[l - 1] = galerkin_triple(transfer.prolongations[l - 1], ops_[l]);
        }
        diags_.reserve(nlev);
        for (const auto& a : ops_) {
            diags_.push_back(a.diagonal());
        }
        coarse_ = DenseCholesky(ops_.front());
    }

    [[nodiscard]] std::size_t num_levels() const noexcept { return ops_.size(); }
    [[nodiscard]] const SparseMatrix& op(std::size_t level) const { return ops_[level]; }
    [[nodiscard]] const SparseMatrix& finest() const { return ops_.back(); }

    /// One V-cycle with zero initial guess: x = V b. Linear and symmetric in b.
    void vcycle(std::span<const double> b, std::span<double> x, int pre, int post) const
    {
        vcycle_level(ops_.size() - 1, b, x, pre, post);
    }

private:
    void gauss_seidel(std::size_t l, std::span<const double> b, std::span<double> x, bool forward) const
    {
        const SparseMatrix& a = ops_[l];
        const Vector& d = diags_[l];
        const auto n = a.rows();
        for (Index k = 0; k < n; ++k) {
            const Index i = forward ? k : n - 1 - k;
            double s = b[static_cast<std::size_t>(i)];
            const auto cs = a.row_cols(i);
            const auto vs = a.row_values(i);
            for (std::size_t j = 0; j < cs.size(); ++j) {
                if (cs[j] != i) {
                    s -= vs[j] * x[static_cast<std::size_t>(cs[j])];
                }
            }
            x[static_cast<std::size_t>(i)] = s / d[static_cast<std::size_t>(i)];
        }
    }

    void vcycle_level(std::size_t l, std::span<const double> b, std::span<double> x, int pre, int post) const
    {
        std::fill(x.begin(), x.end(), 0.0);
        if (l == 0) {
            std::copy(b.begin(), b.end(), x.begin());
            coarse_.solve_in_place(x);
            return;
        }
        for (int s = 0; s < pre; ++s) {
            gauss_seidel(l, b, x, true);
            gauss_seidel(l, b, x, false);
        }
        const SparseMatrix& a = ops_[l];
        const SparseMatrix& p = (*prolongations_)[l - 1];
        Vector r = spmv(a, x);
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = b[i] - r[i];
        }
        const Vector rc = spmv_transpose(p, r);
        Vector ec(rc.size());
        vcycle_level(l - 1, rc, ec, pre, post);
        const Vector e = spmv(p, ec);
        axpy(1.0, e, x);
        for (int s = 0; s < post; ++s) {
            gauss_seidel(l, b, x, true);
            gauss_seidel(l, b, x, false);
        }
    }

    const std::vector<SparseMatrix>* prolongations_;
    std::vector<SparseMatrix> ops_;
    std::vector<Vector> diags_;
    DenseCholesky coarse_;
};

inline MGHierarchy build_mg(SparseMatrix s_fine, const MultigridTransfer& transfer)
{
    return MGHierarchy(std::move(s_fine), transfer);
}

struct MGResult {
    Vector x;
    int cycles = 0;
    double rel_residual = 0.0;
};

/// V-cycles from x = 0 until ||b - S x|| / ||b|| <= tol or the cycle cap.
inline MGResult mg_solve(const MGHierarchy& mg, std::span<const double> b, const MGConfig& cfg)
{
    const SparseMatrix& a = mg.finest();
    detail::require_dims(static_cast<Index>(b.size()) == a.rows(), "mg_solve: rhs length mismatch");
    MGResult res;
    res.x.assign(b.size(), 0.0);
    const double bnorm = norm2(b);
    if (!std::isfinite(bnorm)) {
        throw SolverError("mg_solve: non-finite right-hand side");
    }
    if (bnorm == 0.0) {
        return res;
    }
    Vector r(b.begin(), b.end());
    Vector e(b.size());
    res.rel_residual = 1.0;
    while (res.rel_residual > cfg.tol && res.cycles < cfg.max_cycles) {
        mg.vcycle(r, e, cfg.pre_smooth, cfg.post_smooth);
        axpy(1.0, e, res.x);
        ++res.cycles;
        spmv(a, res.x, r);
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = b[i] - r[i];
        }
        res.rel_residual = norm2(r) / bnorm;
        if (!std::isfinite(res.rel_residual)) {
            throw SolverError("mg_solve: NaN detected");
        }
    }
    return res;
}

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

inline LinearOperator as_operator(const SparseMatrix& a)
{
    return [&a](std::span<const double> x, std::span<double> y) { spmv(a, x, y); };
}

/// Single V-cycle as a preconditioner.
inline LinearOperator vcycle_operator(const MGHierarchy& mg, const MGConfig& cfg)
{
    return [&mg, cfg](std::span<const double> x, std::span<double> y) {
        mg.vcycle(x, y, cfg.pre_smooth, cfg.post_smooth);
    };
}

struct PCGResult {
    Vector x;
    int iterations = 0;
    double rel_residual = 0.0;
};

/// Preconditioned CG from x = 0. Throws on breakdown (p^T S p <= 0) or when
/// the iteration count exceeds `max_iter` (default: the system dimension).
inline PCGResult pcg(const LinearOperator& s, std::span<const double> b, const LinearOperator& m_inv, double tol,
                     int max_iter = -1)
{
    const std::size_t n = b.size();
    if (max_iter < 0) {
        max_iter = static_cast<int>(std::max<std::size_t>(n, 1));
    }
    PCGResult res;
    res.x.assign(n, 0.0);
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        return res;
    }
    Vector r(b.begin(), b.end());
    Vector z(n);
    Vector sp(n);
    m_inv(r, z);
    Vector p = z;
    double rz = dot(r, z);
    res.rel_residual = 1.0;
    while (res.rel_residual > tol) {
        if (res.iterations >= max_iter) {
            std::ostringstream msg;
            msg << "pcg: no convergence in " << max_iter << " iterations (rel. residual " << res.rel_residual << ")";
            throw SolverError(msg.str());
        }
        s(p, sp);
        const double psp = dot(p, sp);
        if (!(psp > 0.0)) {
            throw SolverError("pcg: breakdown, p^T S p <= 0");
        }
        const double alpha = rz / psp;
        axpy(alpha, p, res.x);
        axpy(-alpha, sp, r);
        ++res.iterations;
        res.rel_residual = norm2(r) / bnorm;
        if (res.rel_residual <= tol) {
            break;
        }
        m_inv(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = z[i] + beta * p[i];
        }
    }
    return res;
}

} // namespace dualtpd
