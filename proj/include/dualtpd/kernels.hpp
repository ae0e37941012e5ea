#pragma once

// Elementwise constitutive math. Everything here acts on one element at a
// time: coefficients gamma(sigma_T), the Jacobian blocks of
// sigma_T -> gamma(sigma_T)|T| sigma_T and their closed-form inverses, for the
// power law (p-Laplacian, p-curl) and for the exponential B-H law
// nu(s) = a0 + a1 exp(-a2 s).

#include "dualtpd/sparse.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualtpd {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DegenerateInputError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Small dense blocks

template <std::size_t N>
using Vec = std::array<double, N>;

/// Row-major N x N block.
template <std::size_t N>
using Block = std::array<double, N * N>;

using Block2 = Block<2>;
using Block3 = Block<3>;

template <std::size_t N>
double norm(const Vec<N>& v)
{
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

template <std::size_t N>
Block<N> scaled_identity(double a)
{
    Block<N> b{};
    for (std::size_t i = 0; i < N; ++i) {
        b[i * N + i] = a;
    }
    return b;
}

/// a I + b v v^T
template <std::size_t N>
Block<N> identity_plus_rank_one(double a, double b, const Vec<N>& v)
{
    Block<N> m{};
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            m[i * N + j] = b * v[i] * v[j] + (i == j ? a : 0.0);
        }
    }
    return m;
}

template <std::size_t N>
Block<N> matmul(const Block<N>& a, const Block<N>& b)
{
    Block<N> c{};
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < N; ++k) {
            for (std::size_t j = 0; j < N; ++j) {
                c[i * N + j] += a[i * N + k] * b[k * N + j];
            }
        }
    }
    return c;
}

template <std::size_t N>
Vec<N> matvec(const Block<N>& a, const Vec<N>& x)
{
    Vec<N> y{};
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            y[i] += a[i * N + j] * x[j];
        }
    }
    return y;
}

/// Symmetric positive definite test for 2x2 / 3x3 blocks via leading minors.
template <std::size_t N>
bool is_spd(const Block<N>& b, double sym_tol = 1e-12)
{
    static_assert(N == 2 || N == 3);
    double scale = 0.0;
    for (double v : b) {
        scale = std::max(scale, std::abs(v));
    }
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = i + 1; j < N; ++j) {
            if (std::abs(b[i * N + j] - b[j * N + i]) > sym_tol * scale) {
                return false;
            }
        }
    }
    if (!(b[0] > 0.0)) {
        return false;
    }
    const double m2 = b[0] * b[N + 1] - b[1] * b[N];
    if (!(m2 > 0.0)) {
        return false;
    }
    if constexpr (N == 3) {
        const double m3 = b[0] * (b[4] * b[8] - b[5] * b[7]) - b[1] * (b[3] * b[8] - b[5] * b[6])
                          + b[2] * (b[3] * b[7] - b[4] * b[6]);
        return m3 > 0.0;
    }
    return true;
}

/// Cofactor inverse of a 3x3 block.
inline Block3 inverse3(const Block3& m)
{
    const double c00 = m[4] * m[8] - m[5] * m[7];
    const double c01 = m[5] * m[6] - m[3] * m[8];
    const double c02 = m[3] * m[7] - m[4] * m[6];
    const double det = m[0] * c00 + m[1] * c01 + m[2] * c02;
    if (det == 0.0 || !std::isfinite(det)) {
        throw DegenerateInputError("inverse3: singular block");
    }
    const double id = 1.0 / det;
    return {c00 * id,
            (m[2] * m[7] - m[1] * m[8]) * id,
            (m[1] * m[5] - m[2] * m[4]) * id,
            c01 * id,
            (m[0] * m[8] - m[2] * m[6]) * id,
            (m[2] * m[3] - m[0] * m[5]) * id,
            c02 * id,
            (m[1] * m[6] - m[0] * m[7]) * id,
            (m[0] * m[4] - m[1] * m[3]) * id};
}

/// One dense N x N block per element; element e owns entries [N e, N e + N).
template <std::size_t N>
struct BlockDiag {
    std::vector<Block<N>> blocks;

    [[nodiscard]] std::size_t num_elements() const noexcept { return blocks.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return N * blocks.size(); }
};

using BlockDiag2 = BlockDiag<2>;
using BlockDiag3 = BlockDiag<3>;

template <std::size_t N>
void apply_block_diag(const BlockDiag<N>& b, std::span<const double> x, std::span<double> y)
{
    detail::require_dims(x.size() == b.dim() && y.size() == b.dim(), "apply_block_diag: dimension mismatch");
    for (std::size_t e = 0; e < b.blocks.size(); ++e) {
        const auto& m = b.blocks[e];
        for (std::size_t i = 0; i < N; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < N; ++j) {
                s += m[i * N + j] * x[N * e + j];
            }
            y[N * e + i] = s;
        }
    }
}

template <std::size_t N>
Vector apply_block_diag(const BlockDiag<N>& b, std::span<const double> x)
{
    Vector y(x.size());
    apply_block_diag(b, x, y);
    return y;
}

template <std::size_t N>
Vec<N> element_slice(std::span<const double> x, std::size_t e)
{
    Vec<N> v{};
    for (std::size_t i = 0; i < N; ++i) {
        v[i] = x[N * e + i];
    }
    return v;
}

// ---------------------------------------------------------------------------
// Power law: grad F(g) = |g|^{p-2} g, grad F*(s) = |s|^{p*-2} s.

/// Exponent pair (p, p*) plus the regularization used by the preconditioners.
struct PowerLaw {
    double p = 2.0;
    double p_star = 2.0;
    double lambda = 1e-4;
    double eps0 = 1e-16;
    /// Evaluate the p* < 2 small-|sigma| branch as (gamma|sigma| + lambda)^{p*-2}
    /// instead of the default (|sigma| + lambda)^{p*-2}.
    bool literal_middle_branch = false;

    PowerLaw() = default;

    PowerLaw(double p_, double lambda_ = 1e-4, double eps0_ = 1e-16) : p(p_), lambda(lambda_), eps0(eps0_)
    {
        if (!(p > 1.0) || !std::isfinite(p)) {
            throw ConfigError("PowerLaw: p must be > 1");
        }
        if (!(lambda > 0.0) || !(eps0 > 0.0)) {
            throw ConfigError("PowerLaw: lambda and eps0 must be > 0");
        }
        p_star = p / (p - 1.0);
    }

    [[nodiscard]] bool is_linear() const noexcept { return p_star == 2.0; }
};

/// |sigma|^{p*-2}. At sigma = 0 this is 0 for p* > 2, 1 for p* = 2 and +inf
/// for p* < 2; callers test std::isinf for the last case.
template <std::size_t N>
double gamma_pow(const Vec<N>& sigma, const PowerLaw& law)
{
    const double r = norm(sigma);
    if (law.is_linear()) {
        return 1.0;
    }
    if (r == 0.0) {
        return law.p_star > 2.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::pow(r, law.p_star - 2.0);
}

/// gamma_pow on 3-vectors (p-curl coefficient).
inline double pcurl_gamma(const Vec<3>& sigma, const PowerLaw& law)
{
    return gamma_pow<3>(sigma, law);
}

/// Regularized coefficient gamma_lambda: finite and positive for every sigma.
template <std::size_t N>
double gamma_regularized(const Vec<N>& sigma, const PowerLaw& law)
{
    if (law.p_star > 2.0) {
        return gamma_pow(sigma, law) + law.lambda;
    }
    const double r = norm(sigma);
    if (law.p_star < 2.0 && r <= law.eps0) {
        const double base = law.literal_middle_branch && r > 0.0 ? gamma_pow(sigma, law) * r : r;
        return std::pow(base + law.lambda, law.p_star - 2.0);
    }
    return gamma_pow(sigma, law);
}

/// grad F*(sigma) = |sigma|^{p*-2} sigma, continuous through sigma = 0.
template <std::size_t N>
Vec<N> grad_conjugate(const Vec<N>& sigma, const PowerLaw& law)
{
    const double r = norm(sigma);
    Vec<N> out{};
    if (r == 0.0) {
        return out;
    }
    const double g = law.is_linear() ? 1.0 : std::pow(r, law.p_star - 2.0);
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = g * sigma[i];
    }
    return out;
}

/// grad F(g) = |g|^{p-2} g, continuous through g = 0.
template <std::size_t N>
Vec<N> grad_primal(const Vec<N>& grad_u, const PowerLaw& law)
{
    const double r = norm(grad_u);
    Vec<N> out{};
    if (r == 0.0) {
        return out;
    }
    const double g = law.p == 2.0 ? 1.0 : std::pow(r, law.p - 2.0);
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = g * grad_u[i];
    }
    return out;
}

/// Jacobian of sigma -> gamma(sigma)|T| sigma:
/// |sigma|^{p*-2}|T| I + (p*-2)|sigma|^{p*-4}|T| sigma sigma^T.
template <std::size_t N>
Block<N> jacobian_block_pow(const Vec<N>& sigma, double area, const PowerLaw& law)
{
    const double r = norm(sigma);
    if (r == 0.0) {
        throw DegenerateInputError("jacobian_block_pow: sigma_T = 0");
    }
    const double g = law.is_linear() ? 1.0 : std::pow(r, law.p_star - 2.0);
    Vec<N> e{};
    for (std::size_t i = 0; i < N; ++i) {
        e[i] = sigma[i] / r;
    }
    return identity_plus_rank_one<N>(g * area, (law.p_star - 2.0) * g * area, e);
}

/// Mass preconditioner block diag(1 / (gamma_lambda |T|)).
template <std::size_t N>
Block<N> mass_inverse_block_pow(const Vec<N>& sigma, double area, const PowerLaw& law)
{
    return scaled_identity<N>(1.0 / (gamma_regularized(sigma, law) * area));
}

/// Jacobian preconditioner block. Sherman-Morrison inverse of
/// jacobian_block_pow away from the degenerate set; the regularized mass
/// inverse when (p* > 2 and gamma <= eps0) or (p* < 2 and |sigma| <= eps0).
template <std::size_t N>
Block<N> jacobian_inverse_block_pow(const Vec<N>& sigma, double area, const PowerLaw& law)
{
    const double r = norm(sigma);
    if (law.is_linear()) {
        return scaled_identity<N>(1.0 / area);
    }
    const bool degenerate = (law.p_star > 2.0 && gamma_pow(sigma, law) <= law.eps0)
                            || (law.p_star < 2.0 && r <= law.eps0);
    if (degenerate || r == 0.0) {
        return mass_inverse_block_pow(sigma, area, law);
    }
    // |sigma|^{2-p*}/|T| (I - (p*-2)/(p*-1) e e^T), e = sigma/|sigma|
    const double s = std::pow(r, 2.0 - law.p_star) / area;
    Vec<N> e{};
    for (std::size_t i = 0; i < N; ++i) {
        e[i] = sigma[i] / r;
    }
    return identity_plus_rank_one<N>(s, -s * (law.p_star - 2.0) / (law.p_star - 1.0), e);
}

// ---------------------------------------------------------------------------
// Exponential B-H law: nu(s) = a0 + a1 exp(-a2 s), Phi(z) = nu(z) z.

class FerroSolveError : public std::runtime_error {
public:
    FerroSolveError(const std::string& what, double lo, double hi)
        : std::runtime_error(what), bracket_lo(lo), bracket_hi(hi)
    {
    }
    double bracket_lo;
    double bracket_hi;
};

struct FerroLaw {
    double a0 = 10.0;
    double a1 = 73.89;
    double a2 = 1.0;
    double newton_tol = 1e-12;
    int newton_maxit = 50;

    [[nodiscard]] double nu(double s) const { return a0 + a1 * std::exp(-a2 * s); }
    [[nodiscard]] double dnu(double s) const { return -a1 * a2 * std::exp(-a2 * s); }
    [[nodiscard]] double phi(double z) const { return nu(z) * z; }
    [[nodiscard]] double dphi(double z) const { return dnu(z) * z + nu(z); }

    /// min over z of Phi'(z), attained at z = 2 / a2: a0 - a1 e^{-2}.
    [[nodiscard]] double monotonicity_constant() const { return a0 - a1 * std::exp(-2.0); }
};

/// Solves Phi(z) = s for z >= 0 by Newton's method, falling back to bisection
/// whenever a step leaves the bracket [0, 2 s / a0 + 1].
inline double ferro_phi_inverse(double s, const FerroLaw& law)
{
    if (!(s >= 0.0)) {
        throw std::domain_error("ferro_phi_inverse: s must be >= 0");
    }
    if (s == 0.0) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 2.0 * s / law.a0 + 1.0;
    const double tol = law.newton_tol * std::max(1.0, s);
    double z = s / (law.a0 + law.a1); // nu <= a0 + a1, so this underestimates the root
    for (int it = 0; it < law.newton_maxit; ++it) {
        const double f = law.phi(z) - s;
        if (std::abs(f) <= tol) {
            return z;
        }
        if (f < 0.0) {
            lo = z;
        } else {
            hi = z;
        }
        const double df = law.dphi(z);
        double next = df > 0.0 ? z - f / df : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        z = next;
    }
    if (std::abs(law.phi(z) - s) <= tol) {
        return z;
    }
    std::ostringstream msg;
    msg << "ferro_phi_inverse: no convergence for s = " << s << " within " << law.newton_maxit << " iterations";
    throw FerroSolveError(msg.str(), lo, hi);
}

/// gamma(sigma) = 1 / nu(Phi^{-1}(|sigma|)).
inline double ferro_gamma(const Vec<3>& sigma, const FerroLaw& law)
{
    return 1.0 / law.nu(ferro_phi_inverse(norm(sigma), law));
}

/// t(sigma, z) = nu'(z) / (Phi'(z) nu(z)^2 |sigma|); negative since nu' < 0.
inline double ferro_t(double sigma_norm, double z, const FerroLaw& law)
{
    const double nu = law.nu(z);
    return law.dnu(z) / (law.dphi(z) * nu * nu * sigma_norm);
}

/// J_T = gamma |T| I - t |T| sigma sigma^T.
inline Block3 ferro_jacobian_block(const Vec<3>& sigma, double vol, const FerroLaw& law)
{
    const double r = norm(sigma);
    if (r == 0.0) {
        return scaled_identity<3>(vol / law.nu(0.0));
    }
    const double z = ferro_phi_inverse(r, law);
    return identity_plus_rank_one<3>(vol / law.nu(z), -ferro_t(r, z, law) * vol, sigma);
}

/// Woodbury inverse of ferro_jacobian_block:
/// nu/|T| I - t nu^2 / ((t nu |sigma|^2 - 1)|T|) sigma sigma^T.
/// Falls back to a cofactor inverse when |t nu |sigma|^2 - 1| <= 1e-8.
inline Block3 ferro_jacobian_inverse_block(const Vec<3>& sigma, double vol, const FerroLaw& law)
{
    const double r = norm(sigma);
    if (r == 0.0) {
        return scaled_identity<3>(law.nu(0.0) / vol);
    }
    const double z = ferro_phi_inverse(r, law);
    const double nu = law.nu(z);
    const double t = ferro_t(r, z, law);
    const double denom = t * nu * r * r - 1.0;
    if (std::abs(denom) <= 1e-8) {
        return inverse3(ferro_jacobian_block(sigma, vol, law));
    }
    return identity_plus_rank_one<3>(nu / vol, -t * nu * nu / (denom * vol), sigma);
}

// ---------------------------------------------------------------------------
// Whole-vector operations over P0 coefficient vectors (N entries per element)

/// M^{gamma(sigma)} sigma: element e gets |T_e| |sigma_e|^{p*-2} sigma_e.
template <std::size_t N>
Vector apply_nonlinear_mass(std::span<const double> sigma, std::span<const double> areas, const PowerLaw& law)
{
    detail::require_dims(sigma.size() == N * areas.size(), "apply_nonlinear_mass: dimension mismatch");
    Vector out(sigma.size());
    for (std::size_t e = 0; e < areas.size(); ++e) {
        const auto g = grad_conjugate<N>(element_slice<N>(sigma, e), law);
        for (std::size_t i = 0; i < N; ++i) {
            out[N * e + i] = areas[e] * g[i];
        }
    }
    return out;
}

enum class SigmaPreconditioner { mass, jacobian };

/// I_sigma^{-1} frozen at sigma.
template <std::size_t N>
BlockDiag<N> sigma_preconditioner_inverse(std::span<const double> sigma, std::span<const double> areas,
                                          const PowerLaw& law, SigmaPreconditioner kind)
{
    detail::require_dims(sigma.size() == N * areas.size(), "sigma_preconditioner_inverse: dimension mismatch");
    BlockDiag<N> out;
    out.blocks.resize(areas.size());
    for (std::size_t e = 0; e < areas.size(); ++e) {
        const auto s = element_slice<N>(sigma, e);
        out.blocks[e] = kind == SigmaPreconditioner::mass ? mass_inverse_block_pow<N>(s, areas[e], law)
                                                          : jacobian_inverse_block_pow<N>(s, areas[e], law);
    }
    return out;
}

} // namespace dualtpd
