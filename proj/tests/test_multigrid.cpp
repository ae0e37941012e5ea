#include "dualtpd/multigrid.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dualtpd;

namespace {

struct PoissonSetup {
    MeshHierarchy hierarchy;
    MultigridTransfer transfer;
    std::unique_ptr<P1Space> p1;
    SparseMatrix s;

    explicit PoissonSetup(int levels, int n0 = 2) : hierarchy(unit_square_hierarchy(n0, levels))
    {
        transfer = make_transfer(hierarchy);
        p1 = std::make_unique<P1Space>(hierarchy.finest());
        s = assemble_poisson(*p1);
    }
};

Vector random_vector(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Vector v(n);
    for (double& x : v) {
        x = d(gen);
    }
    return v;
}

double energy_norm(const SparseMatrix& a, const Vector& x)
{
    return std::sqrt(dot(x, spmv(a, x)));
}

} // namespace

TEST(Multigrid, CoarseOperatorEqualsDirectPoisson)
{
    PoissonSetup fine(4);
    const MGHierarchy mg(fine.s, fine.transfer);
    ASSERT_EQ(mg.num_levels(), 4u);
    for (std::size_t l = 0; l + 1 < mg.num_levels(); ++l) {
        const P1Space p1(fine.hierarchy.levels[l]);
        const SparseMatrix direct = assemble_poisson(p1);
        const SparseMatrix& g = mg.op(l);
        ASSERT_EQ(g.rows(), direct.rows());
        for (Index i = 0; i < g.rows(); ++i) {
            for (Index j = 0; j < g.cols(); ++j) {
                EXPECT_NEAR(g.at(i, j), direct.at(i, j), 1e-12);
            }
        }
    }
}

TEST(Multigrid, ContractionOnPoisson)
{
    for (int levels : {5, 6, 7}) { // h = 1/32, 1/64, 1/128
        PoissonSetup ps(levels);
        const MGHierarchy mg(ps.s, ps.transfer);
        const auto n = static_cast<std::size_t>(ps.s.rows());
        // error propagation e <- (I - V S) e from a random error, b = 0
        Vector e = random_vector(n, 17);
        Vector c(n);
        double worst = 0.0;
        for (int k = 0; k < 8; ++k) {
            const double before = energy_norm(ps.s, e);
            const Vector r = spmv(ps.s, e);
            mg.vcycle(r, c, 2, 2);
            axpy(-1.0, c, e);
            worst = std::max(worst, energy_norm(ps.s, e) / before);
        }
        EXPECT_LE(worst, 0.5) << "levels " << levels;
    }
}

TEST(Multigrid, VcycleIsSymmetric)
{
    PoissonSetup ps(5);
    const MGHierarchy mg(ps.s, ps.transfer);
    const auto n = static_cast<std::size_t>(ps.s.rows());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Vector a = random_vector(n, 2 * seed);
        const Vector b = random_vector(n, 2 * seed + 1);
        Vector va(n);
        Vector vb(n);
        mg.vcycle(a, va, 2, 2);
        mg.vcycle(b, vb, 2, 2);
        const double l = dot(b, va);
        const double r = dot(a, vb);
        EXPECT_NEAR(l, r, 1e-10 * std::max(1.0, std::abs(l)));
    }
}

TEST(Multigrid, SolveReachesTolerance)
{
    PoissonSetup ps(6);
    const MGHierarchy mg(ps.s, ps.transfer);
    const Vector b = random_vector(static_cast<std::size_t>(ps.s.rows()), 3);
    MGConfig cfg;
    cfg.tol = 1e-10;
    cfg.max_cycles = 100;
    const MGResult r = mg_solve(mg, b, cfg);
    EXPECT_LE(r.rel_residual, 1e-10);
    EXPECT_LE(r.cycles, 30);
    Vector res = spmv(ps.s, r.x);
    axpy(-1.0, b, res);
    EXPECT_LE(norm2(res), 1e-10 * norm2(b));
}

TEST(Multigrid, CycleCapIsRespected)
{
    PoissonSetup ps(5);
    const MGHierarchy mg(ps.s, ps.transfer);
    const Vector b = random_vector(static_cast<std::size_t>(ps.s.rows()), 4);
    MGConfig cfg;
    cfg.tol = 1e-14;
    cfg.max_cycles = 3;
    EXPECT_EQ(mg_solve(mg, b, cfg).cycles, 3);
}

TEST(Multigrid, ZeroRhsGivesZero)
{
    PoissonSetup ps(3);
    const MGHierarchy mg(ps.s, ps.transfer);
    const MGResult r = mg_solve(mg, Vector(static_cast<std::size_t>(ps.s.rows()), 0.0), MGConfig{});
    EXPECT_EQ(r.cycles, 0);
    EXPECT_EQ(norm2(r.x), 0.0);
}

TEST(Multigrid, RejectsBadInput)
{
    PoissonSetup ps(3);
    EXPECT_THROW(MGHierarchy(SparseMatrix::identity(3), ps.transfer), DimensionError);
    const auto n = ps.s.rows();
    const auto asym = SparseMatrix::from_triplets(n, n, {{0, 1, 1.0}, {0, 0, 1.0}, {1, 1, 1.0}});
    EXPECT_THROW(MGHierarchy(asym, ps.transfer), std::invalid_argument);
    const MGHierarchy mg(ps.s, ps.transfer);
    Vector b(static_cast<std::size_t>(n), 1.0);
    b[0] = NAN;
    EXPECT_THROW(mg_solve(mg, b, MGConfig{}), SolverError);
    MGConfig bad;
    bad.tol = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Pcg, IdentityPreconditionerSolvesSmallSystem)
{
    const auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 3.0}});
    const auto id = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
    const PCGResult r = pcg(as_operator(a), Vector{1.0, 2.0}, id, 1e-14);
    EXPECT_LE(r.iterations, 2);
    EXPECT_NEAR(r.x[0], 1.0 / 11.0, 1e-14);
    EXPECT_NEAR(r.x[1], 7.0 / 11.0, 1e-14);
}

TEST(Pcg, VcyclePreconditionerIsMeshIndependent)
{
    std::vector<int> its;
    for (int levels : {5, 6, 7}) {
        PoissonSetup ps(levels);
        const MGHierarchy mg(ps.s, ps.transfer);
        const Vector b = random_vector(static_cast<std::size_t>(ps.s.rows()), 8);
        const PCGResult r = pcg(as_operator(ps.s), b, vcycle_operator(mg, MGConfig{}), 1e-10);
        EXPECT_LE(r.rel_residual, 1e-10);
        its.push_back(r.iterations);
    }
    EXPECT_LE(*std::max_element(its.begin(), its.end()), 12);
    EXPECT_LE(its.back() - its.front(), 2);
}

TEST(Pcg, IterationCapThrows)
{
    PoissonSetup ps(4);
    const auto id = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
    const Vector b = random_vector(static_cast<std::size_t>(ps.s.rows()), 2);
    EXPECT_THROW(pcg(as_operator(ps.s), b, id, 1e-12, 2), SolverError);
}

TEST(Pcg, BreakdownOnIndefiniteThrows)
{
    const auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}});
    const auto id = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
    EXPECT_THROW(pcg(as_operator(a), Vector{0.0, 1.0}, id, 1e-12), SolverError);
}
