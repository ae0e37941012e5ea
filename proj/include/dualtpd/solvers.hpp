#pragma once

// Outer iterations for the discrete dual saddle-point system
//
//   M^{gamma(sigma)} sigma - D u = 0,   D^T sigma = f,
//
// where M^{gamma(sigma)} sigma stacks |T| |sigma_T|^{p*-2} sigma_T. The
// transformed primal-dual (TPD) iteration is the main solver; the
// Chambolle-Pock style DualPD, primal preconditioned gradient descent and
// Newton are the comparison methods.

#include "dualtpd/fem.hpp"
#include "dualtpd/kernels.hpp"
#include "dualtpd/multigrid.hpp"
#include "dualtpd/problems.hpp"
#include "dualtpd/sparse.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace dualtpd {

struct DualState {
    Vector sigma; ///< 2 N_T
    Vector u;     ///< N_n
};

enum class InitKind { zero, random };
enum class InnerSolver { multigrid, pcg };
enum class PgdMode { line_search, fixed_step };

struct SolverConfig {
    double alpha = 1.0;
    SigmaPreconditioner preconditioner = SigmaPreconditioner::jacobian;
    double lambda = 1e-4;
    double eps0 = 1e-16;
    bool literal_middle_branch = false;
    MGConfig mg;
    InnerSolver inner = InnerSolver::multigrid;
    double stop_tol = 1e-6;
    int max_outer = 500;
    InitKind init = InitKind::zero;
    std::uint64_t seed = 0;
    /// DualPD extrapolation weight.
    double theta = 0.0;
    /// DualPD debug switch: the u-update reads sigma_k instead of sigma_{k+1}.
    bool dualpd_lagged_sigma = false;
    /// Divergence guard: stop once rel_r exceeds this value.
    double divergence_threshold = 1e6;

    void validate() const
    {
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
            throw ConfigError("SolverConfig: alpha must be >= 0");
        }
        if (!(stop_tol > 0.0)) {
            throw ConfigError("SolverConfig: stop_tol must be > 0");
        }
        if (max_outer < 0) {
            throw ConfigError("SolverConfig: max_outer must be >= 0");
        }
        if (!(theta >= 0.0 && theta <= 1.0)) {
            throw ConfigError("SolverConfig: theta must lie in [0, 1]");
        }
        mg.validate();
    }
};

struct SolveReport {
    std::string solver;
    int iterations = 0;
    std::vector<double> history; ///< rel_r at every tested iterate, history[0] is the initial one
    double avg_inner = 0.0;      ///< V-cycles (or PCG steps) per outer iteration
    double seconds = 0.0;
    bool converged = false;

    [[nodiscard]] double final_residual() const { return history.empty() ? 0.0 : history.back(); }
};

struct SolveResult {
    DualState state;
    SolveReport report;
};

/// The PowerLaw of the problem with the solver's regularization applied.
inline PowerLaw effective_law(const DiscreteProblem& prob, const SolverConfig& cfg)
{
    PowerLaw law(prob.law().p, cfg.lambda, cfg.eps0);
    law.literal_middle_branch = cfg.literal_middle_branch;
    return law;
}

inline DualState initial_state(const DiscreteProblem& prob, InitKind init, std::uint64_t seed)
{
    DualState s{Vector(static_cast<std::size_t>(prob.num_sigma()), 0.0), Vector(static_cast<std::size_t>(prob.num_u()), 0.0)};
    if (init == InitKind::random) {
        std::mt19937_64 gen(seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (double& v : s.sigma) {
            v = dist(gen);
        }
        for (double& v : s.u) {
            v = dist(gen);
        }
    }
    return s;
}

struct Residual {
    Vector r_sigma;
    Vector r_u;
    double rel_r = 0.0;
};

/// r_sigma = M^{gamma(sigma)} sigma - D u, r_u = D^T sigma - f,
/// rel_r = |(r_sigma, r_u)| / |f|.
inline Residual residual(const DualState& state, const DiscreteProblem& prob, const PowerLaw& law)
{
    Residual r;
    r.r_sigma = apply_nonlinear_mass<2>(state.sigma, prob.areas, law);
    const Vector du = spmv(prob.d, state.u);
    axpy(-1.0, du, r.r_sigma);
    r.r_u = spmv_transpose(prob.d, state.sigma);
    axpy(-1.0, prob.f, r.r_u);
    const double n2 = dot(r.r_sigma, r.r_sigma) + dot(r.r_u, r.r_u);
    r.rel_r = std::sqrt(n2) / prob.f_norm;
    return r;
}

inline Residual residual(const DualState& state, const DiscreteProblem& prob)
{
    return residual(state, prob, prob.law());
}

namespace detail {

struct InnerSolve {
    Vector x;
    int work = 0;
};

/// Approximate S^{-1} b with S = D^T I_sigma^{-1} D.
inline InnerSolve schur_solve(const DiscreteProblem& prob, const BlockDiag2& isigma_inv, std::span<const double> b,
                              const SolverConfig& cfg)
{
    MGHierarchy mg = build_mg(assemble_schur(*prob.p1, isigma_inv), prob.transfer);
    if (cfg.inner == InnerSolver::multigrid) {
        MGResult r = mg_solve(mg, b, cfg.mg);
        return {std::move(r.x), r.cycles};
    }
    PCGResult r = pcg(as_operator(mg.finest()), b, vcycle_operator(mg, cfg.mg), cfg.mg.tol);
    return {std::move(r.x), r.iterations};
}

/// One TPD correction from a precomputed residual; returns inner work.
inline int tpd_update(DualState& state, const Residual& res, const DiscreteProblem& prob, const SolverConfig& cfg,
                      const PowerLaw& law)
{
    const BlockDiag2 isigma_inv = sigma_preconditioner_inverse<2>(state.sigma, prob.areas, law, cfg.preconditioner);
    // du = I_u^{-1} (r_u - D^T I_sigma^{-1} r_sigma)
    const Vector w = apply_block_diag(isigma_inv, res.r_sigma);
    Vector rhs = spmv_transpose(prob.d, w);
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        rhs[i] = res.r_u[i] - rhs[i];
    }
    InnerSolve du = schur_solve(prob, isigma_inv, rhs, cfg);
    // dsigma = I_sigma^{-1} (r_sigma + D du)
    Vector t = spmv(prob.d, du.x);
    axpy(1.0, res.r_sigma, t);
    const Vector dsigma = apply_block_diag(isigma_inv, t);
    axpy(-cfg.alpha, dsigma, state.sigma);
    axpy(-cfg.alpha, du.x, state.u);
    return du.work;
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline std::string tpd_name(const SolverConfig& cfg)
{
    return cfg.preconditioner == SigmaPreconditioner::mass ? "DualTPD-M" : "DualTPD-J";
}

} // namespace detail

/// One step of the TPD iteration:
///   du = I_u^{-1}(r_u - D^T I_sigma^{-1} r_sigma),
///   dsigma = I_sigma^{-1}(r_sigma + D du),
///   (sigma, u) -= alpha (dsigma, du),
/// with I_sigma frozen at the incoming sigma. Returns the inner work.
inline int tpd_step(DualState& state, const DiscreteProblem& prob, const SolverConfig& cfg)
{
    const PowerLaw law = effective_law(prob, cfg);
    const Residual res = residual(state, prob, law);
    return detail::tpd_update(state, res, prob, cfg, law);
}

/// TPD iteration from `start` until rel_r <= stop_tol or max_outer steps.
inline SolveResult dual_tpd_solve(const DiscreteProblem& prob, const SolverConfig& cfg, DualState start)
{
    cfg.validate();
    const detail::Stopwatch clock;
    const PowerLaw law = effective_law(prob, cfg);
    SolveResult out{std::move(start), {}};
    out.report.solver = detail::tpd_name(cfg);
    long total_inner = 0;
    for (;;) {
        const Residual res = residual(out.state, prob, law);
        out.report.history.push_back(res.rel_r);
        if (res.rel_r <= cfg.stop_tol) {
            out.report.converged = true;
            break;
        }
        if (out.report.iterations >= cfg.max_outer || !std::isfinite(res.rel_r)
            || res.rel_r > cfg.divergence_threshold) {
            break;
        }
        total_inner += detail::tpd_update(out.state, res, prob, cfg, law);
        ++out.report.iterations;
    }
    out.report.avg_inner = out.report.iterations > 0 ? static_cast<double>(total_inner) / out.report.iterations : 0.0;
    out.report.seconds = clock.seconds();
    return out;
}

inline SolveResult dual_tpd_solve(const DiscreteProblem& prob, const SolverConfig& cfg)
{
    return dual_tpd_solve(prob, cfg, initial_state(prob, cfg.init, cfg.seed));
}

/// Newton's method: TPD with the Jacobian preconditioner, alpha = 1 and a
/// Schur solve tight enough to be exact (tol 1e-10, up to 100 V-cycles).
inline SolveResult newton_solve(const DiscreteProblem& prob, const SolverConfig& cfg)
{
    SolverConfig ncfg = cfg;
    ncfg.preconditioner = SigmaPreconditioner::jacobian;
    ncfg.alpha = 1.0;
    ncfg.inner = InnerSolver::multigrid;
    ncfg.mg.tol = 1e-10;
    ncfg.mg.max_cycles = 100;
    SolveResult out = dual_tpd_solve(prob, ncfg);
    out.report.solver = "Newton";
    return out;
}

/// Preconditioned primal-dual iteration without the transformation
/// (p-Laplacian analogue of the Chambolle-Pock variant):
///   sigma+ = sigma - alpha J^{-1}(M^{gamma(sigma)} sigma - D ubar),
///   u+     = u - alpha S^{-1}(D^T sigma+ - f),
///   ubar+  = u+ + theta (u+ - u).
/// The sigma preconditioner follows cfg.preconditioner; the stopping test
/// uses the non-extrapolated (sigma, u).
inline SolveResult dual_pd_solve(const DiscreteProblem& prob, const SolverConfig& cfg)
{
    cfg.validate();
    const detail::Stopwatch clock;
    const PowerLaw law = effective_law(prob, cfg);
    SolveResult out{initial_state(prob, cfg.init, cfg.seed), {}};
    out.report.solver = "DualPD";
    DualState& st = out.state;
    Vector ubar = st.u;
    long total_inner = 0;
    for (;;) {
        const Residual res = residual(st, prob, law);
        out.report.history.push_back(res.rel_r);
        if (res.rel_r <= cfg.stop_tol) {
            out.report.converged = true;
            break;
        }
        if (out.report.iterations >= cfg.max_outer || !std::isfinite(res.rel_r)
            || res.rel_r > cfg.divergence_threshold) {
            break;
        }
        const BlockDiag2 isigma_inv = sigma_preconditioner_inverse<2>(st.sigma, prob.areas, law, cfg.preconditioner);
        Vector rs = apply_nonlinear_mass<2>(st.sigma, prob.areas, law);
        axpy(-1.0, spmv(prob.d, ubar), rs);
        Vector sigma_new = st.sigma;
        axpy(-cfg.alpha, apply_block_diag(isigma_inv, rs), sigma_new);

        Vector ru = spmv_transpose(prob.d, cfg.dualpd_lagged_sigma ? st.sigma : sigma_new);
        axpy(-1.0, prob.f, ru);
        detail::InnerSolve du = detail::schur_solve(prob, isigma_inv, ru, cfg);
        total_inner += du.work;
        Vector u_new = st.u;
        axpy(-cfg.alpha, du.x, u_new);
        for (std::size_t i = 0; i < ubar.size(); ++i) {
            ubar[i] = u_new[i] + cfg.theta * (u_new[i] - st.u[i]);
        }
        st.sigma = std::move(sigma_new);
        st.u = std::move(u_new);
        ++out.report.iterations;
    }
    out.report.avg_inner = out.report.iterations > 0 ? static_cast<double>(total_inner) / out.report.iterations : 0.0;
    out.report.seconds = clock.seconds();
    return out;
}

/// Primal discrete energy sum_T |T|/p |grad u_T|^p - f^T u.
inline double primal_energy(const DiscreteProblem& prob, std::span<const double> u, const PowerLaw& law)
{
    const Vector du = spmv(prob.d, u);
    double e = 0.0;
    for (std::size_t t = 0; t < prob.areas.size(); ++t) {
        const double a = prob.areas[t];
        const double g = std::hypot(du[2 * t], du[2 * t + 1]) / a;
        e += a / law.p * std::pow(g, law.p);
    }
    return e - dot(prob.f, u);
}

/// sigma(u)_T = |grad u_T|^{p-2} grad u_T; the dual variable induced by u.
inline Vector primal_flux(const DiscreteProblem& prob, std::span<const double> u, const PowerLaw& law)
{
    Vector s = spmv(prob.d, u);
    for (std::size_t t = 0; t < prob.areas.size(); ++t) {
        const Vec<2> g{s[2 * t] / prob.areas[t], s[2 * t + 1] / prob.areas[t]};
        const Vec<2> q = grad_primal<2>(g, law);
        s[2 * t] = q[0];
        s[2 * t + 1] = q[1];
    }
    return s;
}

/// Preconditioned gradient descent on the primal energy,
///   u+ = u - alpha_k B^{-1}(D^T sigma(u) - f),
/// B the unit-coefficient P1 Laplacian applied by multigrid. Line-search mode
/// runs tight multigrid solves and Armijo backtracking from alpha = 1;
/// fixed-step mode uses cfg.alpha and the inexact cfg.mg solves. The returned
/// state carries sigma(u), so the reported rel_r is the dual residual of
/// (sigma(u), u), whose sigma row vanishes identically.
inline SolveResult pgd_solve(const DiscreteProblem& prob, const SolverConfig& cfg, PgdMode mode)
{
    cfg.validate();
    const detail::Stopwatch clock;
    const PowerLaw law = effective_law(prob, cfg);
    SolveResult out{initial_state(prob, cfg.init, cfg.seed), {}};
    out.report.solver = mode == PgdMode::line_search ? "PGD" : "PGD-fixed";
    MGConfig mgcfg = cfg.mg;
    if (mode == PgdMode::line_search) {
        mgcfg.tol = 1e-10;
        mgcfg.max_cycles = 100;
    }
    const MGHierarchy mg = build_mg(assemble_poisson(*prob.p1), prob.transfer);
    Vector& u = out.state.u;
    long total_inner = 0;
    for (;;) {
        const Vector s = primal_flux(prob, u, law);
        Vector grad = spmv_transpose(prob.d, s);
        axpy(-1.0, prob.f, grad);
        const double rel = norm2(grad) / prob.f_norm;
        out.report.history.push_back(rel);
        if (rel <= cfg.stop_tol) {
            out.report.converged = true;
            break;
        }
        if (out.report.iterations >= cfg.max_outer || !std::isfinite(rel) || rel > cfg.divergence_threshold) {
            break;
        }
        MGResult dir = mg_solve(mg, grad, mgcfg);
        total_inner += dir.cycles;
        double step = cfg.alpha;
        if (mode == PgdMode::line_search) {
            constexpr double armijo = 1e-4;
            const double e0 = primal_energy(prob, u, law);
            const double slope = dot(grad, dir.x);
            step = 1.0;
            for (;;) {
                Vector trial = u;
                axpy(-step, dir.x, trial);
                if (primal_energy(prob, trial, law) <= e0 - armijo * step * slope) {
                    break;
                }
                step *= 0.5;
                if (step < 1e-12) {
                    throw SolverError("pgd_solve: line search failed (step < 1e-12)");
                }
            }
        }
        axpy(-step, dir.x, u);
        ++out.report.iterations;
    }
    out.state.sigma = primal_flux(prob, u, law);
    out.report.avg_inner = out.report.iterations > 0 ? static_cast<double>(total_inner) / out.report.iterations : 0.0;
    out.report.seconds = clock.seconds();
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization

/// key=value lines; the history is a comma-separated list.
inline std::string to_key_value(const SolveReport& r)
{
    std::ostringstream os;
    os.precision(17);
    os << "solver=" << r.solver << '\n'
       << "iterations=" << r.iterations << '\n'
       << "converged=" << (r.converged ? "true" : "false") << '\n'
       << "avg_inner=" << r.avg_inner << '\n'
       << "seconds=" << r.seconds << '\n'
       << "final_rel_r=" << r.final_residual() << '\n'
       << "history=";
    for (std::size_t i = 0; i < r.history.size(); ++i) {
        os << (i ? "," : "") << r.history[i];
    }
    os << '\n';
    return os.str();
}

inline std::string csv_header()
{
    return "solver,iterations,converged,avg_inner,seconds,final_rel_r";
}

inline std::string to_csv_row(const SolveReport& r)
{
    std::ostringstream os;
    os.precision(10);
    os << r.solver << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << r.avg_inner << ',' << r.seconds
       << ',' << r.final_residual();
    return os.str();
}

} // namespace dualtpd
