#pragma once

// P1 Lagrange (homogeneous Dirichlet, boundary DoFs eliminated) and
// elementwise-constant vector spaces on a TriMesh, and the assembly routines
// that couple them.

#include "dualtpd/kernels.hpp"
#include "dualtpd/mesh.hpp"
#include "dualtpd/sparse.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace dualtpd {

using ScalarField = std::function<double(double, double)>;
using VectorField = std::function<Point2(double, double)>;

/// 6-point symmetric triangle rule, exact for polynomials of degree <= 4.
/// Points are barycentric; weights sum to 1 (multiply by |T|).
struct QuadPoint {
    std::array<double, 3> bary;
    double weight;
};

inline const std::array<QuadPoint, 6>& triangle_quadrature()
{
    static constexpr double a1 = 0.445948490915964886318;
    static constexpr double b1 = 1.0 - 2.0 * a1;
    static constexpr double w1 = 0.223381589678011465944;
    static constexpr double a2 = 0.091576213509770743460;
    static constexpr double b2 = 1.0 - 2.0 * a2;
    static constexpr double w2 = 0.109951743655321867389;
    static const std::array<QuadPoint, 6> rule{{
        {{a1, a1, b1}, w1},
        {{a1, b1, a1}, w1},
        {{b1, a1, a1}, w1},
        {{a2, a2, b2}, w2},
        {{a2, b2, a2}, w2},
        {{b2, a2, a2}, w2},
    }};
    return rule;
}

inline Point2 map_to_physical(const TriMesh& mesh, std::size_t t, const std::array<double, 3>& bary)
{
    const auto& tri = mesh.triangle(t);
    Point2 x{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        const Point2& v = mesh.vertex(tri[static_cast<std::size_t>(i)]);
        x[0] += bary[static_cast<std::size_t>(i)] * v[0];
        x[1] += bary[static_cast<std::size_t>(i)] * v[1];
    }
    return x;
}

constexpr Index kBoundaryDof = -1;

/// Continuous P1 with zero boundary values; one DoF per interior vertex.
class P1Space {
public:
    explicit P1Space(const TriMesh& mesh) : mesh_(&mesh), dof_(mesh.num_vertices(), kBoundaryDof)
    {
        for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
            if (!mesh.is_boundary(static_cast<Index>(v))) {
                dof_[v] = n_++;
            }
        }
    }

    [[nodiscard]] const TriMesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] Index num_dofs() const noexcept { return n_; }
    /// DoF of a vertex, or kBoundaryDof.
    [[nodiscard]] Index dof(Index vertex) const { return dof_[static_cast<std::size_t>(vertex)]; }

    /// Nodal values at every vertex, boundary entries zero.
    [[nodiscard]] Vector to_vertex_values(std::span<const double> u) const
    {
        detail::require_dims(static_cast<Index>(u.size()) == n_, "P1Space: coefficient length mismatch");
        Vector out(mesh_->num_vertices(), 0.0);
        for (std::size_t v = 0; v < dof_.size(); ++v) {
            if (dof_[v] != kBoundaryDof) {
                out[v] = u[static_cast<std::size_t>(dof_[v])];
            }
        }
        return out;
    }

    /// Interior-node samples of f.
    [[nodiscard]] Vector interpolate(const ScalarField& f) const
    {
        Vector out(static_cast<std::size_t>(n_));
        for (std::size_t v = 0; v < dof_.size(); ++v) {
            if (dof_[v] != kBoundaryDof) {
                const Point2& x = mesh_->vertex(static_cast<Index>(v));
                out[static_cast<std::size_t>(dof_[v])] = f(x[0], x[1]);
            }
        }
        return out;
    }

private:
    const TriMesh* mesh_;
    std::vector<Index> dof_;
    Index n_ = 0;
};

/// Elementwise-constant vectors; triangle t owns entries (2t, 2t+1).
class P0VecSpace {
public:
    explicit P0VecSpace(const TriMesh& mesh) : mesh_(&mesh) {}

    [[nodiscard]] const TriMesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] Index num_elements() const noexcept { return static_cast<Index>(mesh_->num_triangles()); }
    [[nodiscard]] Index num_dofs() const noexcept { return 2 * num_elements(); }

    [[nodiscard]] std::vector<double> areas() const
    {
        std::vector<double> a(mesh_->num_triangles());
        for (std::size_t t = 0; t < a.size(); ++t) {
            a[t] = mesh_->area(t);
        }
        return a;
    }

    /// Elementwise mean of a vector field (degree-4 quadrature).
    [[nodiscard]] Vector project(const VectorField& f) const
    {
        Vector out(static_cast<std::size_t>(num_dofs()));
        for (std::size_t t = 0; t < mesh_->num_triangles(); ++t) {
            Point2 s{0.0, 0.0};
            for (const auto& q : triangle_quadrature()) {
                const Point2 x = map_to_physical(*mesh_, t, q.bary);
                const Point2 v = f(x[0], x[1]);
                s[0] += q.weight * v[0];
                s[1] += q.weight * v[1];
            }
            out[2 * t] = s[0];
            out[2 * t + 1] = s[1];
        }
        return out;
    }

private:
    const TriMesh* mesh_;
};

/// D with D[(T,c), i] = |T| d(phi_i)/dx_c for interior nodes i; (D u)_T is
/// |T| grad u_h on T and D^T sigma is the weak divergence <sigma, grad phi_i>.
inline SparseMatrix assemble_weak_gradient(const P1Space& p1, const P0VecSpace& p0)
{
    if (&p1.mesh() != &p0.mesh()) {
        throw std::invalid_argument("assemble_weak_gradient: spaces live on different meshes");
    }
    const TriMesh& mesh = p1.mesh();
    std::vector<Triplet> trip;
    trip.reserve(6 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double area = mesh.area(t);
        for (int i = 0; i < 3; ++i) {
            const Index d = p1.dof(tri[static_cast<std::size_t>(i)]);
            if (d == kBoundaryDof) {
                continue;
            }
            const Point2& g = mesh.grad_lambda(t, i);
            trip.push_back({static_cast<Index>(2 * t), d, area * g[0]});
            trip.push_back({static_cast<Index>(2 * t + 1), d, area * g[1]});
        }
    }
    return SparseMatrix::from_triplets(p0.num_dofs(), p1.num_dofs(), std::move(trip));
}

/// Per-triangle |T| grad(u_h) including boundary data, for checks where the
/// boundary values of u are data rather than unknowns.
inline Vector weak_gradient_with_boundary(const TriMesh& mesh, std::span<const double> vertex_values)
{
    detail::require_dims(vertex_values.size() == mesh.num_vertices(), "weak_gradient_with_boundary: length mismatch");
    Vector out(2 * mesh.num_triangles(), 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        for (int i = 0; i < 3; ++i) {
            const Point2& g = mesh.grad_lambda(t, i);
            const double u = vertex_values[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
            out[2 * t] += mesh.area(t) * g[0] * u;
            out[2 * t + 1] += mesh.area(t) * g[1] * u;
        }
    }
    return out;
}

/// b_v = integral of f phi_v over every vertex v, boundary vertices included.
inline Vector assemble_load_all_vertices(const TriMesh& mesh, const ScalarField& f)
{
    Vector b(mesh.num_vertices(), 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double area = mesh.area(t);
        for (const auto& q : triangle_quadrature()) {
            const Point2 x = map_to_physical(mesh, t, q.bary);
            const double fx = f(x[0], x[1]) * q.weight * area;
            for (int i = 0; i < 3; ++i) {
                b[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])] += fx * q.bary[static_cast<std::size_t>(i)];
            }
        }
    }
    return b;
}

/// b_i = integral of f phi_i over interior DoFs.
inline Vector assemble_load(const P1Space& p1, const ScalarField& f)
{
    const Vector all = assemble_load_all_vertices(p1.mesh(), f);
    Vector b(static_cast<std::size_t>(p1.num_dofs()));
    for (std::size_t v = 0; v < all.size(); ++v) {
        const Index d = p1.dof(static_cast<Index>(v));
        if (d != kBoundaryDof) {
            b[static_cast<std::size_t>(d)] = all[v];
        }
    }
    return b;
}

/// ||u_h - u||_{L2}; boundary values of u_h are zero.
inline double l2_error_p1(const P1Space& p1, std::span<const double> u_h, const ScalarField& u_exact)
{
    const TriMesh& mesh = p1.mesh();
    const Vector nodal = p1.to_vertex_values(u_h);
    double err = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        double local = 0.0;
        for (const auto& q : triangle_quadrature()) {
            const Point2 x = map_to_physical(mesh, t, q.bary);
            double uh = 0.0;
            for (int i = 0; i < 3; ++i) {
                uh += q.bary[static_cast<std::size_t>(i)] * nodal[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
            }
            const double d = uh - u_exact(x[0], x[1]);
            local += q.weight * d * d;
        }
        err += local * mesh.area(t);
    }
    return std::sqrt(err);
}

/// ||sigma_h - sigma||_{L2} for elementwise-constant sigma_h.
inline double l2_error_p0(const P0VecSpace& p0, std::span<const double> sigma_h, const VectorField& sigma_exact)
{
    detail::require_dims(static_cast<Index>(sigma_h.size()) == p0.num_dofs(), "l2_error_p0: length mismatch");
    const TriMesh& mesh = p0.mesh();
    double err = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        double local = 0.0;
        for (const auto& q : triangle_quadrature()) {
            const Point2 x = map_to_physical(mesh, t, q.bary);
            const Point2 s = sigma_exact(x[0], x[1]);
            const double dx = sigma_h[2 * t] - s[0];
            const double dy = sigma_h[2 * t + 1] - s[1];
            local += q.weight * (dx * dx + dy * dy);
        }
        err += local * mesh.area(t);
    }
    return std::sqrt(err);
}

/// D^T B D assembled element by element, B a 2x2 block per triangle. Equals
/// the sparse triple product but reuses the P1 stiffness pattern.
inline SparseMatrix assemble_schur(const P1Space& p1, const BlockDiag2& b)
{
    const TriMesh& mesh = p1.mesh();
    detail::require_dims(b.num_elements() == mesh.num_triangles(), "assemble_schur: block count mismatch");
    std::vector<Triplet> trip;
    trip.reserve(9 * mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double area = mesh.area(t);
        const Block2& m = b.blocks[t];
        // local columns of D: |T| grad(phi_i)
        std::array<Point2, 3> col;
        for (int i = 0; i < 3; ++i) {
            const Point2& g = mesh.grad_lambda(t, i);
            col[static_cast<std::size_t>(i)] = {area * g[0], area * g[1]};
        }
        for (int i = 0; i < 3; ++i) {
            const Index di = p1.dof(tri[static_cast<std::size_t>(i)]);
            if (di == kBoundaryDof) {
                continue;
            }
            const Point2& ci = col[static_cast<std::size_t>(i)];
            for (int j = 0; j < 3; ++j) {
                const Index dj = p1.dof(tri[static_cast<std::size_t>(j)]);
                if (dj == kBoundaryDof) {
                    continue;
                }
                const Point2& cj = col[static_cast<std::size_t>(j)];
                const double v = ci[0] * (m[0] * cj[0] + m[1] * cj[1]) + ci[1] * (m[2] * cj[0] + m[3] * cj[1]);
                trip.push_back({di, dj, v});
            }
        }
    }
    return SparseMatrix::from_triplets(p1.num_dofs(), p1.num_dofs(), std::move(trip));
}

/// Unit-coefficient P1 stiffness matrix, D^T diag(1/|T|) D.
inline SparseMatrix assemble_poisson(const P1Space& p1)
{
    BlockDiag2 b;
    b.blocks.resize(p1.mesh().num_triangles());
    for (std::size_t t = 0; t < b.blocks.size(); ++t) {
        b.blocks[t] = scaled_identity<2>(1.0 / p1.mesh().area(t));
    }
    return assemble_schur(p1, b);
}

/// Vertex prolongation restricted to interior DoFs of both levels.
inline SparseMatrix restrict_prolongation(const SparseMatrix& vertex_prolongation, const P1Space& coarse, const P1Space& fine)
{
    std::vector<Triplet> trip;
    for (Index v = 0; v < vertex_prolongation.rows(); ++v) {
        const Index r = fine.dof(v);
        if (r == kBoundaryDof) {
            continue;
        }
        const auto cs = vertex_prolongation.row_cols(v);
        const auto vs = vertex_prolongation.row_values(v);
        for (std::size_t k = 0; k < cs.size(); ++k) {
            const Index c = coarse.dof(cs[k]);
            if (c != kBoundaryDof) {
                trip.push_back({r, c, vs[k]});
            }
        }
    }
    return SparseMatrix::from_triplets(fine.num_dofs(), coarse.num_dofs(), std::move(trip));
}

} // namespace dualtpd
