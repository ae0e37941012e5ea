#include "dualtpd/fem.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace dualtpd;

namespace {

TriMesh reference_triangle()
{
    return TriMesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {true, true, true});
}

} // namespace

TEST(Fem, QuadratureWeightsSumToOne)
{
    double s = 0.0;
    for (const auto& q : triangle_quadrature()) {
        s += q.weight;
        EXPECT_NEAR(q.bary[0] + q.bary[1] + q.bary[2], 1.0, 1e-15);
    }
    EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(Fem, QuadratureExactForDegreeFour)
{
    // On the reference triangle, int x^a y^b = a! b! / (a + b + 2)!.
    const auto m = reference_triangle();
    auto integrate = [&](int a, int b) {
        double s = 0.0;
        for (const auto& q : triangle_quadrature()) {
            const Point2 x = map_to_physical(m, 0, q.bary);
            s += q.weight * std::pow(x[0], a) * std::pow(x[1], b);
        }
        return s * m.area(0);
    };
    auto fact = [](int n) { return std::tgamma(n + 1.0); };
    for (int a = 0; a <= 4; ++a) {
        for (int b = 0; a + b <= 4; ++b) {
            EXPECT_NEAR(integrate(a, b), fact(a) * fact(b) / fact(a + b + 2), 1e-15) << a << "," << b;
        }
    }
}

TEST(Fem, LoadOnReferenceTriangle)
{
    const Vector b = assemble_load_all_vertices(reference_triangle(), [](double x, double) { return x; });
    EXPECT_NEAR(b[0], 1.0 / 24.0, 1e-15);
    EXPECT_NEAR(b[1], 1.0 / 12.0, 1e-15);
    EXPECT_NEAR(b[2], 1.0 / 24.0, 1e-15);
}

TEST(Fem, P1DofsSkipBoundary)
{
    const auto m = unit_square_mesh(4);
    const P1Space p1(m);
    EXPECT_EQ(p1.num_dofs(), 9);
    EXPECT_EQ(p1.dof(0), kBoundaryDof);
    const Vector u(9, 1.0);
    const Vector nodal = p1.to_vertex_values(u);
    EXPECT_DOUBLE_EQ(nodal[0], 0.0);
    EXPECT_DOUBLE_EQ(nodal[6], 1.0);
    EXPECT_THROW(p1.to_vertex_values(Vector(3)), DimensionError);
}

TEST(Fem, WeakGradientOfLinearFunction)
{
    const auto m = unit_square_mesh(3);
    Vector vals;
    for (const auto& v : m.vertices()) {
        vals.push_back(2.0 * v[0] - 3.0 * v[1] + 1.0);
    }
    const Vector g = weak_gradient_with_boundary(m, vals);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        EXPECT_NEAR(g[2 * t], 2.0 * m.area(t), 1e-14);
        EXPECT_NEAR(g[2 * t + 1], -3.0 * m.area(t), 1e-14);
    }
}

TEST(Fem, WeakGradientMatchesBoundaryVersionForInteriorData)
{
    const auto m = unit_square_mesh(4);
    const P1Space p1(m);
    const P0VecSpace p0(m);
    const auto d = assemble_weak_gradient(p1, p0);
    EXPECT_EQ(d.rows(), 2 * 32);
    EXPECT_EQ(d.cols(), 9);
    const Vector u = p1.interpolate([](double x, double y) { return std::sin(3 * x) * y * (1 - y) * x * (1 - x); });
    const Vector a = spmv(d, u);
    const Vector b = weak_gradient_with_boundary(m, p1.to_vertex_values(u));
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a[i], b[i], 1e-15);
    }
}

TEST(Fem, WeakGradientRejectsMismatchedMeshes)
{
    const auto m1 = unit_square_mesh(2);
    const auto m2 = unit_square_mesh(2);
    EXPECT_THROW(assemble_weak_gradient(P1Space(m1), P0VecSpace(m2)), std::invalid_argument);
}

TEST(Fem, PoissonFivePointStencilOnDiagonalMesh)
{
    const auto m = unit_square_mesh(4);
    const P1Space p1(m);
    const auto s = assemble_poisson(p1);
    // centre vertex (2,2)
    const Index c = p1.dof(2 * 5 + 2);
    EXPECT_NEAR(s.at(c, c), 4.0, 1e-14);
    EXPECT_NEAR(s.at(c, p1.dof(2 * 5 + 1)), -1.0, 1e-14);
    EXPECT_NEAR(s.at(c, p1.dof(1 * 5 + 2)), -1.0, 1e-14);
    EXPECT_NEAR(s.at(c, p1.dof(1 * 5 + 1)), 0.0, 1e-14);
    EXPECT_NEAR(s.at(c, p1.dof(3 * 5 + 3)), 0.0, 1e-14);
    EXPECT_LE(s.relative_asymmetry(), 1e-15);
}

TEST(Fem, SchurEqualsTripleProduct)
{
    const auto m = unit_square_mesh(3);
    const P1Space p1(m);
    const P0VecSpace p0(m);
    const auto d = assemble_weak_gradient(p1, p0);
    BlockDiag2 b;
    b.blocks.resize(m.num_triangles());
    std::vector<Triplet> bt;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const double a = 1.0 + 0.1 * static_cast<double>(t);
        b.blocks[t] = {a, 0.2, 0.2, 2.0};
        const auto r = static_cast<Index>(2 * t);
        bt.push_back({r, r, a});
        bt.push_back({r, r + 1, 0.2});
        bt.push_back({r + 1, r, 0.2});
        bt.push_back({r + 1, r + 1, 2.0});
    }
    const auto bm = SparseMatrix::from_triplets(d.rows(), d.rows(), bt);
    const auto ref = multiply(d.transpose(), multiply(bm, d));
    const auto s = assemble_schur(p1, b);
    for (Index i = 0; i < s.rows(); ++i) {
        for (Index j = 0; j < s.cols(); ++j) {
            EXPECT_NEAR(s.at(i, j), ref.at(i, j), 1e-13);
        }
    }
}

TEST(Fem, P0ProjectionOfConstantIsExact)
{
    const auto m = unit_square_mesh(3);
    const P0VecSpace p0(m);
    const VectorField f = [](double, double) { return Point2{1.5, -2.0}; };
    const Vector s = p0.project(f);
    EXPECT_NEAR(l2_error_p0(p0, s, f), 0.0, 1e-14);
}

TEST(Fem, InterpolationErrorRates)
{
    const ScalarField u = [](double x, double y) { return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); };
    const VectorField g = [](double x, double y) {
        return Point2{std::cos(std::numbers::pi * x) * std::sin(std::numbers::pi * y),
                      std::sin(std::numbers::pi * x) * std::cos(std::numbers::pi * y)};
    };
    double eu_prev = 0.0;
    double eg_prev = 0.0;
    for (int n : {8, 16, 32, 64}) {
        const auto m = unit_square_mesh(n);
        const P1Space p1(m);
        const P0VecSpace p0(m);
        const double eu = l2_error_p1(p1, p1.interpolate(u), u);
        const double eg = l2_error_p0(p0, p0.project(g), g);
        if (n > 8) {
            EXPECT_NEAR(std::log2(eu_prev / eu), 2.0, 0.05);
            EXPECT_NEAR(std::log2(eg_prev / eg), 1.0, 0.05);
        }
        eu_prev = eu;
        eg_prev = eg;
    }
}

TEST(Fem, RestrictedProlongationDropsBoundary)
{
    const auto h = unit_square_hierarchy(2, 2);
    const P1Space coarse(h.levels[0]);
    const P1Space fine(h.levels[1]);
    const auto p = restrict_prolongation(h.prolongations[0], coarse, fine);
    EXPECT_EQ(p.rows(), 9);
    EXPECT_EQ(p.cols(), 1);
    // centre coarse node feeds itself and its six neighbours on the diagonal mesh
    double s = 0.0;
    for (double v : spmv(p, Vector{1.0})) {
        s += v;
    }
    EXPECT_DOUBLE_EQ(s, 1.0 + 6 * 0.5);
}
