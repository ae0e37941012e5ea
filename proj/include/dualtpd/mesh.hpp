#pragma once

// Nested triangulations of the unit square and the unit disk, with the nodal
// prolongation between consecutive levels.

#include "dualtpd/sparse.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dualtpd {

using Point2 = std::array<double, 2>;
using Tri = std::array<Index, 3>;

/// Triangle mesh with per-triangle geometry cached at construction.
class TriMesh {
public:
    TriMesh() = default;

    TriMesh(std::vector<Point2> vertices, std::vector<Tri> triangles, std::vector<bool> boundary)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary))
    {
        if (boundary_.size() != vertices_.size()) {
            throw std::invalid_argument("TriMesh: boundary flags must match vertex count");
        }
        areas_.resize(triangles_.size());
        grads_.resize(triangles_.size());
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            const auto& tri = triangles_[t];
            for (Index v : tri) {
                if (v < 0 || v >= static_cast<Index>(vertices_.size())) {
                    throw std::invalid_argument("TriMesh: triangle references missing vertex");
                }
            }
            const Point2& a = vertices_[static_cast<std::size_t>(tri[0])];
            const Point2& b = vertices_[static_cast<std::size_t>(tri[1])];
            const Point2& c = vertices_[static_cast<std::size_t>(tri[2])];
            const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            if (!(det > 0.0)) {
                throw std::invalid_argument("TriMesh: triangle is not counterclockwise or is degenerate");
            }
            areas_[t] = 0.5 * det;
            // grad(lambda_i) = rot90(opposite edge) / det
            grads_[t][0] = {(b[1] - c[1]) / det, (c[0] - b[0]) / det};
            grads_[t][1] = {(c[1] - a[1]) / det, (a[0] - c[0]) / det};
            grads_[t][2] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
        }
    }

    [[nodiscard]] std::size_t num_vertices() const noexcept { return vertices_.size(); }
    [[nodiscard]] std::size_t num_triangles() const noexcept { return triangles_.size(); }

    [[nodiscard]] const std::vector<Point2>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<Tri>& triangles() const noexcept { return triangles_; }
    [[nodiscard]] const std::vector<bool>& boundary() const noexcept { return boundary_; }

    [[nodiscard]] const Point2& vertex(Index v) const { return vertices_[static_cast<std::size_t>(v)]; }
    [[nodiscard]] const Tri& triangle(std::size_t t) const { return triangles_[t]; }
    [[nodiscard]] bool is_boundary(Index v) const { return boundary_[static_cast<std::size_t>(v)]; }

    [[nodiscard]] double area(std::size_t t) const { return areas_[t]; }
    /// Gradient of the barycentric coordinate of local vertex i on triangle t.
    [[nodiscard]] const Point2& grad_lambda(std::size_t t, int i) const
    {
        return grads_[t][static_cast<std::size_t>(i)];
    }

    [[nodiscard]] double total_area() const
    {
        double s = 0.0;
        for (double a : areas_) {
            s += a;
        }
        return s;
    }

    /// Longest edge over all triangles.
    [[nodiscard]] double max_edge_length() const
    {
        double h = 0.0;
        for (const auto& tri : triangles_) {
            for (int i = 0; i < 3; ++i) {
                const Point2& a = vertex(tri[static_cast<std::size_t>(i)]);
                const Point2& b = vertex(tri[static_cast<std::size_t>((i + 1) % 3)]);
                h = std::max(h, std::hypot(b[0] - a[0], b[1] - a[1]));
            }
        }
        return h;
    }

private:
    std::vector<Point2> vertices_;
    std::vector<Tri> triangles_;
    std::vector<bool> boundary_;
    std::vector<double> areas_;
    std::vector<std::array<Point2, 3>> grads_;
};

using EdgeKey = std::pair<Index, Index>;

inline EdgeKey edge_key(Index a, Index b)
{
    return a < b ? EdgeKey{a, b} : EdgeKey{b, a};
}

/// Number of triangles incident to each edge.
inline std::map<EdgeKey, int> edge_incidence(const TriMesh& mesh)
{
    std::map<EdgeKey, int> count;
    for (const auto& tri : mesh.triangles()) {
        for (int i = 0; i < 3; ++i) {
            ++count[edge_key(tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>((i + 1) % 3)])];
        }
    }
    return count;
}

/// Optional map applied to newly created boundary vertices during refinement.
using BoundaryProjection = std::function<Point2(const Point2&)>;

struct RefinedMesh {
    TriMesh mesh;
    SparseMatrix prolongation; ///< fine nodal values = P * coarse nodal values
};

/// Red refinement: every triangle is split into four through its edge
/// midpoints. Coarse vertices keep their indices; midpoints are appended.
inline RefinedMesh uniform_refine(const TriMesh& coarse, const std::optional<BoundaryProjection>& projection = std::nullopt)
{
    const auto incidence = edge_incidence(coarse);
    std::vector<Point2> verts = coarse.vertices();
    std::vector<bool> bnd = coarse.boundary();
    std::map<EdgeKey, Index> midpoint;
    std::vector<Triplet> pt;
    pt.reserve(coarse.num_vertices() + 2 * incidence.size());
    for (std::size_t v = 0; v < coarse.num_vertices(); ++v) {
        pt.push_back({static_cast<Index>(v), static_cast<Index>(v), 1.0});
    }
    for (const auto& [edge, count] : incidence) {
        const Point2& a = coarse.vertex(edge.first);
        const Point2& b = coarse.vertex(edge.second);
        Point2 m{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
        const bool on_boundary = count == 1;
        if (on_boundary && projection) {
            m = (*projection)(m);
        }
        const auto id = static_cast<Index>(verts.size());
        verts.push_back(m);
        bnd.push_back(on_boundary);
        midpoint.emplace(edge, id);
        pt.push_back({id, edge.first, 0.5});
        pt.push_back({id, edge.second, 0.5});
    }

    std::vector<Tri> tris;
    tris.reserve(4 * coarse.num_triangles());
    for (const auto& tri : coarse.triangles()) {
        const Index a = tri[0];
        const Index b = tri[1];
        const Index c = tri[2];
        const Index ab = midpoint.at(edge_key(a, b));
        const Index bc = midpoint.at(edge_key(b, c));
        const Index ca = midpoint.at(edge_key(c, a));
        tris.push_back({a, ab, ca});
        tris.push_back({ab, b, bc});
        tris.push_back({ca, bc, c});
        tris.push_back({ab, bc, ca});
    }
    const auto nfine = static_cast<Index>(verts.size());
    RefinedMesh out{TriMesh(std::move(verts), std::move(tris), std::move(bnd)), {}};
    out.prolongation = SparseMatrix::from_triplets(nfine, static_cast<Index>(coarse.num_vertices()), std::move(pt));
    return out;
}

/// Meshes ordered coarse to fine; prolongations[l] maps level l to level l+1.
struct MeshHierarchy {
    std::vector<TriMesh> levels;
    std::vector<SparseMatrix> prolongations;

    [[nodiscard]] const TriMesh& finest() const { return levels.back(); }
    [[nodiscard]] std::size_t num_levels() const noexcept { return levels.size(); }
};

inline MeshHierarchy build_hierarchy(TriMesh coarse, int num_levels, const std::optional<BoundaryProjection>& projection)
{
    if (num_levels < 1) {
        throw std::invalid_argument("mesh hierarchy needs at least one level");
    }
    MeshHierarchy h;
    h.levels.push_back(std::move(coarse));
    for (int l = 1; l < num_levels; ++l) {
        auto refined = uniform_refine(h.levels.back(), projection);
        h.levels.push_back(std::move(refined.mesh));
        h.prolongations.push_back(std::move(refined.prolongation));
    }
    return h;
}

/// n x n squares on [0,1]^2, each cut along its (0,0)-(1,1) diagonal.
inline TriMesh unit_square_mesh(int n)
{
    if (n < 1) {
        throw std::invalid_argument("unit_square_mesh: n must be >= 1");
    }
    const auto stride = static_cast<Index>(n + 1);
    std::vector<Point2> verts;
    std::vector<bool> bnd;
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
            bnd.push_back(i == 0 || j == 0 || i == n || j == n);
        }
    }
    std::vector<Tri> tris;
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const Index v00 = j * stride + i;
            const Index v10 = v00 + 1;
            const Index v01 = v00 + stride;
            const Index v11 = v01 + 1;
            tris.push_back({v00, v10, v11});
            tris.push_back({v00, v11, v01});
        }
    }
    return TriMesh(std::move(verts), std::move(tris), std::move(bnd));
}

/// Finest mesh size is 1 / (n0 * 2^(L-1)).
inline MeshHierarchy unit_square_hierarchy(int n0, int num_levels)
{
    if (n0 < 1) {
        throw std::invalid_argument("unit_square_hierarchy: n0 must be >= 1");
    }
    return build_hierarchy(unit_square_mesh(n0), num_levels, std::nullopt);
}

inline Point2 project_to_unit_circle(const Point2& p)
{
    const double r = std::hypot(p[0], p[1]);
    return {p[0] / r, p[1] / r};
}

/// Hexagonal fan around the origin with its rim on the unit circle. Refined
/// boundary vertices are pushed radially onto |x| = 1, so the polygon area
/// increases toward pi.
inline MeshHierarchy unit_disk_hierarchy(int num_levels)
{
    std::vector<Point2> verts{{0.0, 0.0}};
    std::vector<bool> bnd{false};
    for (int k = 0; k < 6; ++k) {
        const double th = 2.0 * std::numbers::pi * k / 6.0;
        verts.push_back({std::cos(th), std::sin(th)});
        bnd.push_back(true);
    }
    std::vector<Tri> tris;
    for (Index k = 0; k < 6; ++k) {
        tris.push_back({0, 1 + k, 1 + (k + 1) % 6});
    }
    return build_hierarchy(TriMesh(std::move(verts), std::move(tris), std::move(bnd)), num_levels,
                           BoundaryProjection(project_to_unit_circle));
}

/// Plain-text dump: "OFF", counts, vertex lines, triangle lines.
inline void write_off(std::ostream& os, const TriMesh& mesh)
{
    os << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << " 0\n";
    os.precision(17);
    for (const auto& v : mesh.vertices()) {
        os << v[0] << ' ' << v[1] << " 0\n";
    }
    for (const auto& t : mesh.triangles()) {
        os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
}

} // namespace dualtpd
