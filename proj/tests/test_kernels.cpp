#include "dualtpd/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dualtpd;

namespace {

template <std::size_t N>
Vec<N> mass_map(const Vec<N>& s, double area, const PowerLaw& law)
{
    Vec<N> g = grad_conjugate<N>(s, law);
    for (double& v : g) {
        v *= area;
    }
    return g;
}

template <std::size_t N>
Block<N> fd_jacobian(const std::function<Vec<N>(const Vec<N>&)>& f, const Vec<N>& x, double h)
{
    Block<N> j{};
    for (std::size_t c = 0; c < N; ++c) {
        Vec<N> xp = x;
        Vec<N> xm = x;
        xp[c] += h;
        xm[c] -= h;
        const Vec<N> fp = f(xp);
        const Vec<N> fm = f(xm);
        for (std::size_t r = 0; r < N; ++r) {
            j[r * N + c] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    return j;
}

template <std::size_t N>
double frob(const Block<N>& a)
{
    double s = 0.0;
    for (double v : a) {
        s += v * v;
    }
    return std::sqrt(s);
}

template <std::size_t N>
double frob_diff(const Block<N>& a, const Block<N>& b)
{
    Block<N> d{};
    for (std::size_t i = 0; i < N * N; ++i) {
        d[i] = a[i] - b[i];
    }
    return frob<N>(d);
}

template <std::size_t N>
double identity_defect(const Block<N>& a)
{
    return frob_diff<N>(a, scaled_identity<N>(1.0));
}

} // namespace

TEST(Kernels, PowerLawValidation)
{
    EXPECT_THROW(PowerLaw(1.0), ConfigError);
    EXPECT_THROW(PowerLaw(0.5), ConfigError);
    EXPECT_THROW(PowerLaw(2.0, 0.0), ConfigError);
    EXPECT_THROW(PowerLaw(2.0, 1e-4, -1.0), ConfigError);
    EXPECT_DOUBLE_EQ(PowerLaw(1.5).p_star, 3.0);
    EXPECT_DOUBLE_EQ(PowerLaw(4.0).p_star, 4.0 / 3.0);
    EXPECT_TRUE(PowerLaw(2.0).is_linear());
}

TEST(Kernels, GammaAtZero)
{
    const Vec<2> z{0.0, 0.0};
    EXPECT_EQ(gamma_pow<2>(z, PowerLaw(1.5)), 0.0);
    EXPECT_TRUE(std::isinf(gamma_pow<2>(z, PowerLaw(4.0))));
    EXPECT_EQ(gamma_pow<2>(z, PowerLaw(2.0)), 1.0);
    EXPECT_THROW(jacobian_block_pow<2>(z, 1.0, PowerLaw(1.5)), DegenerateInputError);
}

TEST(Kernels, RegularizedGammaBranches)
{
    const PowerLaw above(1.5, 1e-3); // p* = 3
    const Vec<2> s{0.3, 0.4};
    EXPECT_NEAR(gamma_regularized<2>(s, above), 0.5 + 1e-3, 1e-15);
    EXPECT_NEAR(gamma_regularized<2>(Vec<2>{0.0, 0.0}, above), 1e-3, 1e-18);

    const PowerLaw below(4.0, 1e-4, 1e-2); // p* = 4/3
    EXPECT_NEAR(gamma_regularized<2>(s, below), std::pow(0.5, -2.0 / 3.0), 1e-14);
    const Vec<2> tiny{3e-3, 4e-3};
    EXPECT_NEAR(gamma_regularized<2>(tiny, below), std::pow(5e-3 + 1e-4, -2.0 / 3.0), 1e-10);
    EXPECT_TRUE(std::isfinite(gamma_regularized<2>(Vec<2>{0.0, 0.0}, below)));
}

TEST(Kernels, JacobianMatchesFiniteDifferences)
{
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> ps(1.05, 10.0);
    std::uniform_real_distribution<double> comp(-2.0, 2.0);
    std::uniform_real_distribution<double> area(1e-4, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const PowerLaw law(ps(gen));
        Vec<2> s{comp(gen), comp(gen)};
        if (norm(s) < 1e-2) {
            s[0] += 0.5;
        }
        const double a = area(gen);
        const auto j = jacobian_block_pow<2>(s, a, law);
        const auto fd = fd_jacobian<2>([&](const Vec<2>& x) { return mass_map<2>(x, a, law); }, s, 1e-6 * norm(s));
        ASSERT_LE(frob_diff<2>(j, fd), 1e-6 * frob<2>(j)) << "p=" << law.p;
    }
}

TEST(Kernels, JacobianInverseIsInverse)
{
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> ps(1.05, 10.0);
    std::uniform_real_distribution<double> comp(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const PowerLaw law(ps(gen));
        const Vec<2> s{comp(gen), comp(gen)};
        const double a = 0.01 + 0.5 * (comp(gen) + 3.0);
        const auto prod = matmul<2>(jacobian_inverse_block_pow<2>(s, a, law), jacobian_block_pow<2>(s, a, law));
        ASSERT_LE(identity_defect<2>(prod), 1e-12);
    }
}

TEST(Kernels, JacobianInverseLinearCase)
{
    const auto b = jacobian_inverse_block_pow<2>(Vec<2>{0.0, 0.0}, 0.25, PowerLaw(2.0));
    EXPECT_DOUBLE_EQ(b[0], 4.0);
    EXPECT_DOUBLE_EQ(b[1], 0.0);
    EXPECT_DOUBLE_EQ(b[3], 4.0);
}

TEST(Kernels, JacobianInverseFallsBackToMassInDegenerateBranch)
{
    const PowerLaw law(1.5, 1e-4, 1e-3); // p* = 3, gamma = |sigma|
    const Vec<2> s{1e-4, 0.0};
    const auto b = jacobian_inverse_block_pow<2>(s, 2.0, law);
    const auto m = mass_inverse_block_pow<2>(s, 2.0, law);
    EXPECT_EQ(b, m);
    EXPECT_TRUE(is_spd<2>(b));
}

TEST(Kernels, PreconditionerBlocksAreSpd)
{
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> comp(-1.0, 1.0);
    for (double p : {1.05, 1.3, 1.5, 4.0, 10.0}) {
        const PowerLaw law(p, 1e-4, 1e-4);
        for (int i = 0; i < 200; ++i) {
            const Vec<2> s{comp(gen), comp(gen)};
            EXPECT_TRUE(is_spd<2>(jacobian_inverse_block_pow<2>(s, 0.1, law)));
            EXPECT_TRUE(is_spd<2>(mass_inverse_block_pow<2>(s, 0.1, law)));
        }
    }
}

TEST(Kernels, ConjugateRoundTrip)
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ps(1.05, 10.0);
    std::uniform_real_distribution<double> comp(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const PowerLaw law(ps(gen));
        const Vec<2> g{comp(gen), comp(gen)};
        const Vec<2> back = grad_conjugate<2>(grad_primal<2>(g, law), law);
        for (int c = 0; c < 2; ++c) {
            ASSERT_NEAR(back[c], g[c], 1e-12 * std::max(1.0, norm(g)));
        }
    }
}

TEST(Kernels, InverseThreeByThree)
{
    const Block3 m{4, 1, 0, 1, 3, 1, 0, 1, 2};
    EXPECT_LE(identity_defect<3>(matmul<3>(inverse3(m), m)), 1e-14);
    EXPECT_THROW(inverse3(Block3{1, 2, 3, 2, 4, 6, 0, 0, 1}), std::exception);
}

TEST(Kernels, BlockDiagApply)
{
    BlockDiag2 b;
    b.blocks = {Block2{1, 2, 3, 4}, Block2{2, 0, 0, 2}};
    const Vector y = apply_block_diag(b, Vector{1, 1, 1, 2});
    EXPECT_EQ(y, (Vector{3, 7, 2, 4}));
    EXPECT_THROW(apply_block_diag(b, Vector{1, 2}), DimensionError);
}

TEST(Kernels, NonlinearMassAndPreconditionerShapes)
{
    const PowerLaw law(1.5);
    const Vector sigma{0.3, 0.4, 0.0, 0.0};
    const Vector areas{2.0, 1.0};
    const Vector m = apply_nonlinear_mass<2>(sigma, areas, law);
    EXPECT_NEAR(m[0], 2.0 * 0.5 * 0.3, 1e-15);
    EXPECT_NEAR(m[1], 2.0 * 0.5 * 0.4, 1e-15);
    EXPECT_EQ(m[2], 0.0);
    const auto pj = sigma_preconditioner_inverse<2>(sigma, areas, law, SigmaPreconditioner::jacobian);
    EXPECT_EQ(pj.num_elements(), 2u);
    EXPECT_THROW(apply_nonlinear_mass<2>(Vector{1, 2, 3}, areas, law), DimensionError);
}

TEST(Ferro, PhiInverseKnownValue)
{
    const FerroLaw law;
    const double s = law.phi(1.0);
    EXPECT_NEAR(s, 10.0 + 73.89 * std::exp(-1.0), 1e-12);
    EXPECT_NEAR(s, 37.1826, 1e-4);
    EXPECT_NEAR(ferro_phi_inverse(s, law), 1.0, 1e-12);
    EXPECT_EQ(ferro_phi_inverse(0.0, law), 0.0);
    EXPECT_THROW(ferro_phi_inverse(-1.0, law), std::domain_error);
}

TEST(Ferro, PhiInverseMatchesBisection)
{
    const FerroLaw law;
    for (double s : {0.1, 1.0, 10.0, 37.1833, 100.0}) {
        double lo = 0.0;
        double hi = 2.0 * s / law.a0 + 1.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (law.phi(mid) < s ? lo : hi) = mid;
        }
        EXPECT_NEAR(ferro_phi_inverse(s, law), 0.5 * (lo + hi), 1e-8) << s;
    }
}

TEST(Ferro, PhiRoundTripGrid)
{
    const FerroLaw law;
    for (int i = 0; i <= 1000; ++i) {
        const double s = 0.1 * i;
        ASSERT_NEAR(law.phi(ferro_phi_inverse(s, law)), s, 1e-10);
    }
}

TEST(Ferro, MonotonicityConstant)
{
    const FerroLaw law;
    const double c = law.monotonicity_constant();
    EXPECT_GE(c, 0.0);
    EXPECT_LE(c, 1e-2);
    double min_dphi = INFINITY;
    for (int i = 0; i <= 100000; ++i) {
        min_dphi = std::min(min_dphi, law.dphi(1e-4 * i));
    }
    EXPECT_NEAR(min_dphi, c, 1e-8);
}

TEST(Ferro, IterationCapReportsBracket)
{
    FerroLaw law;
    law.newton_maxit = 1;
    try {
        ferro_phi_inverse(50.0, law);
        FAIL() << "expected FerroSolveError";
    } catch (const FerroSolveError& e) {
        EXPECT_GE(e.bracket_hi, e.bracket_lo);
    }
}

TEST(Ferro, JacobianMatchesFiniteDifferences)
{
    const FerroLaw law;
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> comp(-20.0, 20.0);
    for (int i = 0; i < 200; ++i) {
        const Vec<3> s{comp(gen), comp(gen), comp(gen)};
        const double vol = 0.5;
        auto f = [&](const Vec<3>& x) {
            const double g = ferro_gamma(x, law);
            return Vec<3>{vol * g * x[0], vol * g * x[1], vol * g * x[2]};
        };
        const auto j = ferro_jacobian_block(s, vol, law);
        const auto fd = fd_jacobian<3>(f, s, 1e-5 * norm(s));
        ASSERT_LE(frob_diff<3>(j, fd), 1e-6 * frob<3>(j));
    }
}

TEST(Ferro, JacobianInverseIdentity)
{
    const FerroLaw law;
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> comp(-60.0, 60.0);
    for (int i = 0; i < 1000; ++i) {
        const Vec<3> s{comp(gen), comp(gen), comp(gen)};
        const double vol = 0.1;
        const auto prod = matmul<3>(ferro_jacobian_inverse_block(s, vol, law), ferro_jacobian_block(s, vol, law));
        ASSERT_LE(identity_defect<3>(prod), 1e-10);
    }
    const auto z = ferro_jacobian_inverse_block(Vec<3>{0, 0, 0}, 2.0, law);
    EXPECT_NEAR(z[0], law.nu(0.0) / 2.0, 1e-14);
}
