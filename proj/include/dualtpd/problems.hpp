#pragma once

// Benchmark p-Laplacian problems and their discretization on a mesh level.

#include "dualtpd/config.hpp"
#include "dualtpd/fem.hpp"
#include "dualtpd/kernels.hpp"
#include "dualtpd/mesh.hpp"
#include "dualtpd/multigrid.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualtpd {

enum class Domain { square, disk };

inline std::string to_string(Domain d)
{
    return d == Domain::square ? "square" : "disk";
}

inline Domain parse_domain(const std::string& s)
{
    if (s == "square") {
        return Domain::square;
    }
    if (s == "disk") {
        return Domain::disk;
    }
    throw ConfigError("unknown domain: " + s);
}

/// -div(|grad u|^{p-2} grad u) = f with u = 0 on the boundary.
struct ProblemSpec {
    Domain domain = Domain::square;
    PowerLaw law;
    std::optional<ScalarField> exact_u;
    std::optional<VectorField> exact_sigma;
    ScalarField f;
    std::vector<int> levels; ///< mesh sizes h = 1/levels[i]
};

/// u = 10 x(x-1) y(y-1) on [0,1]^2; f from the expanded divergence
/// f = -(|g|^{p-2} lap u + (p-2)|g|^{p-4} g^T H g), g = grad u.
inline ProblemSpec square_manufactured(double p, std::vector<int> levels = {})
{
    ProblemSpec spec;
    spec.domain = Domain::square;
    spec.law = PowerLaw(p);
    spec.levels = std::move(levels);
    spec.exact_u = [](double x, double y) { return 10.0 * x * (x - 1.0) * y * (y - 1.0); };
    auto grad = [](double x, double y) -> Point2 {
        return {10.0 * (2.0 * x - 1.0) * y * (y - 1.0), 10.0 * x * (x - 1.0) * (2.0 * y - 1.0)};
    };
    spec.exact_sigma = [grad, p](double x, double y) -> Point2 {
        const Point2 g = grad(x, y);
        const double r = std::hypot(g[0], g[1]);
        const double c = r == 0.0 ? (p == 2.0 ? 1.0 : 0.0) : std::pow(r, p - 2.0);
        return {c * g[0], c * g[1]};
    };
    spec.f = [grad, p](double x, double y) {
        const Point2 g = grad(x, y);
        const double uxx = 20.0 * y * (y - 1.0);
        const double uyy = 20.0 * x * (x - 1.0);
        const double uxy = 10.0 * (2.0 * x - 1.0) * (2.0 * y - 1.0);
        const double lap = uxx + uyy;
        const double r2 = g[0] * g[0] + g[1] * g[1];
        if (p == 2.0) {
            return -lap;
        }
        if (r2 == 0.0) {
            // p > 2: continuous limit 0. p < 2: integrable singularity, never
            // hit by interior quadrature points.
            return 0.0;
        }
        const double gHg = g[0] * (uxx * g[0] + uxy * g[1]) + g[1] * (uxy * g[0] + uyy * g[1]);
        return -(std::pow(r2, 0.5 * (p - 2.0)) * lap + (p - 2.0) * std::pow(r2, 0.5 * (p - 4.0)) * gHg);
    };
    return spec;
}

/// f = 1 on the unit disk; u = (p-1)/p (1/2)^{1/(p-1)} (1 - |x|^{p/(p-1)}),
/// sigma = -x/2.
inline ProblemSpec disk_radial(double p, std::vector<int> levels = {})
{
    ProblemSpec spec;
    spec.domain = Domain::disk;
    spec.law = PowerLaw(p);
    spec.levels = std::move(levels);
    const double c = (p - 1.0) / p * std::pow(0.5, 1.0 / (p - 1.0));
    const double e = p / (p - 1.0);
    spec.exact_u = [c, e](double x, double y) { return c * (1.0 - std::pow(std::hypot(x, y), e)); };
    spec.exact_sigma = [](double x, double y) -> Point2 { return {-0.5 * x, -0.5 * y}; };
    spec.f = [](double, double) { return 1.0; };
    return spec;
}

/// Coarse subdivision count and level count with n = n0 * 2^(L-1), n0 <= 2
/// whenever n is a power of two.
inline std::pair<int, int> square_levels_for(int n)
{
    if (n < 1) {
        throw ConfigError("mesh size denominator must be >= 1");
    }
    int n0 = n;
    int levels = 1;
    while (n0 % 2 == 0 && n0 > 2) {
        n0 /= 2;
        ++levels;
    }
    return {n0, levels};
}

inline int disk_levels_for(int n)
{
    if (n < 1 || (n & (n - 1)) != 0) {
        throw ConfigError("disk mesh size denominator must be a power of two");
    }
    int levels = 1;
    while ((1 << (levels - 1)) < n) {
        ++levels;
    }
    return levels;
}

/// The assembled algebraic problem on one mesh level. The hierarchy is held
/// by pointer so the spaces stay valid when the object moves.
struct DiscreteProblem {
    ProblemSpec spec;
    int h_denominator = 0;
    std::unique_ptr<MeshHierarchy> hierarchy;
    MultigridTransfer transfer;
    std::unique_ptr<P1Space> p1;
    std::unique_ptr<P0VecSpace> p0;
    SparseMatrix d;     ///< weak gradient, (2 N_T) x N_n
    Vector f;           ///< load vector
    Vector areas;       ///< |T| per triangle
    double f_norm = 0.0;

    [[nodiscard]] const TriMesh& mesh() const { return hierarchy->finest(); }
    [[nodiscard]] const PowerLaw& law() const { return spec.law; }
    [[nodiscard]] Index num_u() const { return p1->num_dofs(); }
    [[nodiscard]] Index num_sigma() const { return p0->num_dofs(); }
    /// Size of the coupled (sigma, u) system.
    [[nodiscard]] Index num_dofs() const { return num_u() + num_sigma(); }
    [[nodiscard]] double h() const { return 1.0 / h_denominator; }
};

inline DiscreteProblem discretize(const ProblemSpec& spec, int h_denominator)
{
    DiscreteProblem prob;
    prob.spec = spec;
    prob.h_denominator = h_denominator;
    if (spec.domain == Domain::square) {
        const auto [n0, levels] = square_levels_for(h_denominator);
        prob.hierarchy = std::make_unique<MeshHierarchy>(unit_square_hierarchy(n0, levels));
    } else {
        prob.hierarchy = std::make_unique<MeshHierarchy>(unit_disk_hierarchy(disk_levels_for(h_denominator)));
    }
    prob.transfer = make_transfer(*prob.hierarchy);
    prob.p1 = std::make_unique<P1Space>(prob.hierarchy->finest());
    prob.p0 = std::make_unique<P0VecSpace>(prob.hierarchy->finest());
    prob.d = assemble_weak_gradient(*prob.p1, *prob.p0);
    prob.f = assemble_load(*prob.p1, spec.f);
    prob.areas = prob.p0->areas();
    prob.f_norm = norm2(prob.f);
    return prob;
}

/// Builds a ProblemSpec from the config keys `domain`, `p`, `levels`.
inline ProblemSpec problem_from_config(const KeyValueConfig& cfg)
{
    const Domain domain = parse_domain(cfg.get_string("domain", "square"));
    const double p = cfg.get_double("p", 2.0);
    std::vector<int> levels;
    for (double v : cfg.get_double_list("levels")) {
        levels.push_back(static_cast<int>(v));
    }
    if (levels.empty()) {
        levels = {32};
    }
    return domain == Domain::square ? square_manufactured(p, levels) : disk_radial(p, levels);
}

} // namespace dualtpd
