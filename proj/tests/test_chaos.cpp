#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "bmreg/chaos.hpp"
#include "bmreg/rng.hpp"

using namespace bmreg;

namespace {

double binomial(int n, int k) { return std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0)); }

// :(x^2 + y^2)^n: for standard real x, y factorizes into Hermite products.
double wick_oracle(const cplx& g, int n)
{
    double acc = 0.0;
    for (int a = 0; a <= n; ++a) acc += binomial(n, a) * hermite(2 * a, g.real()) * hermite(2 * n - 2 * a, g.imag());
    return acc;
}

// Class of a tuple decided by counting frequency multiplicities directly.
template <std::size_t K>
TupleClass brute_class(const std::array<int, K>& n, const std::array<int, K>& m)
{
    bool shared = false;
    for (int a : n)
        for (int b : m) shared = shared || a == b;
    if (!shared) return TupleClass::PairFree;
    for (int x : n) {
        long cn = 0, cm = 0;
        for (int a : n) cn += a == x;
        for (int b : m) cm += b == x;
        if (cn != cm) return TupleClass::Partial;
    }
    for (int x : m) {
        long cn = 0;
        for (int a : n) cn += a == x;
        if (cn == 0) return TupleClass::Partial;
    }
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t l = i + 1; l < K; ++l)
            if (n[i] == n[l]) return TupleClass::Repeated;
    return TupleClass::Paired;
}

} // namespace

TEST(Hermite, ExplicitPolynomials)
{
    for (double x : {-2.5, -0.3, 0.0, 1.0, 3.7}) {
        EXPECT_DOUBLE_EQ(hermite(0, x), 1.0);
        EXPECT_DOUBLE_EQ(hermite(1, x), x);
        EXPECT_NEAR(hermite(2, x), x * x - 1, 1e-12);
        EXPECT_NEAR(hermite(3, x), x * x * x - 3 * x, 1e-12);
        EXPECT_NEAR(hermite(4, x), std::pow(x, 4) - 6 * x * x + 3, 1e-11);
        EXPECT_NEAR(hermite(6, x), std::pow(x, 6) - 15 * std::pow(x, 4) + 45 * x * x - 15, 1e-9);
    }
    EXPECT_THROW(hermite(-1, 0.0), Error);
}

TEST(Hermite, GeneratingFunction)
{
    const double t = 0.3;
    for (double x : {-1.2, 0.4, 2.0}) {
        double acc = 0.0, fact = 1.0;
        for (int n = 0; n < 30; ++n) {
            if (n > 0) fact *= n;
            acc += hermite(n, x) * std::pow(t, n) / fact;
        }
        EXPECT_NEAR(acc, std::exp(x * t - t * t / 2), 1e-12);
    }
}

TEST(Wick, MatchesHermiteProducts)
{
    for (int s = 0; s < 200; ++s) {
        const cplx g = rng::indexed_normal(11, rng::Stream::Scalar, s);
        for (int n = 1; n <= 3; ++n) EXPECT_NEAR(wick_abs2n(g, n), wick_oracle(g, n), 1e-9 * (1 + std::pow(std::norm(g), n)));
    }
    EXPECT_THROW(wick_abs2n(1.0, 4), Error);
}

TEST(Wick, MeanZeroAndOrthogonal)
{
    const int n = 200'000;
    double m1 = 0, m2 = 0, c12 = 0, v1 = 0;
    for (int s = 0; s < n; ++s) {
        const cplx g = rng::indexed_normal(12, rng::Stream::Scalar, s);
        const double a = wick_abs2n(g, 1), b = wick_abs2n(g, 2);
        m1 += a;
        m2 += b;
        c12 += a * b;
        v1 += a * a;
    }
    // Var :|g|^2: = 4, Var :|g|^4: = 64, Var of the product is bounded by E a^2 b^2 ~ 10^3.
    EXPECT_LT(std::abs(m1 / n), 5 * 2.0 / std::sqrt(n));
    EXPECT_LT(std::abs(m2 / n), 5 * 8.0 / std::sqrt(n));
    EXPECT_LT(std::abs(c12 / n), 5 * 40.0 / std::sqrt(n));
    EXPECT_NEAR(v1 / n, 4.0, 0.1);
}

TEST(Classify, AgreesWithMultiplicityCount)
{
    EXPECT_EQ(classify<2>({1, 2}, {2, 1}), TupleClass::Paired);
    EXPECT_EQ(classify<2>({3, 3}, {3, 3}), TupleClass::Repeated);
    EXPECT_EQ(classify<2>({1, 4}, {1, 4}), TupleClass::Paired);
    EXPECT_EQ(classify<2>({1, 4}, {2, 3}), TupleClass::PairFree);
    EXPECT_EQ(classify<3>({1, 1, 4}, {1, 2, 3}), TupleClass::Partial);
    EXPECT_EQ(classify<3>({1, 1, 2}, {1, 2, 2}), TupleClass::Partial);
    EXPECT_EQ(classify<3>({1, 2, 1}, {2, 1, 1}), TupleClass::Repeated);
    for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b)
            for (int c = -3; c <= 3; ++c)
                for (int d = -3; d <= 3; ++d)
                    for (int e = -2; e <= 2; ++e)
                        for (int f = -2; f <= 2; ++f)
                            ASSERT_EQ((classify<3>({a, b, c}, {d, e, f})), (brute_class<3>({a, b, c}, {d, e, f})));
}

TEST(Resonances, CountsMatchBruteForce)
{
    for (int j = 0; j <= 4; ++j) {
        const auto fam = sample_family(1, 1, 1 << j);
        const auto f = shell_frequencies(j);
        ResonanceCounts brute;
        for (int a : f)
            for (int b : f)
                for (int c : f)
                    for (int d : f) {
                        if (a + b != c + d) continue;
                        switch (brute_class<2>({a, b}, {c, d})) {
                        case TupleClass::Paired: ++brute.paired; break;
                        case TupleClass::Repeated: ++brute.repeated; break;
                        case TupleClass::Partial: ++brute.partial; break;
                        case TupleClass::PairFree: ++brute.pair_free; break;
                        }
                    }
        const auto d = l4_block_decomposition(fam, j);
        const long long S = static_cast<long long>(f.size());
        EXPECT_EQ(d.counts.paired, brute.paired);
        EXPECT_EQ(d.counts.paired, 2 * S * (S - 1));
        EXPECT_EQ(d.counts.repeated, S);
        EXPECT_EQ(d.counts.partial, 0);
        EXPECT_EQ(d.counts.pair_free, brute.pair_free);
    }
}

TEST(Resonances, SixTupleCountsMatchBruteForce)
{
    for (int j = 1; j <= 3; ++j) {
        const auto fam = sample_family(1, 1, 1 << j);
        const auto f = shell_frequencies(j);
        long long total = 0;
        for (int a : f)
            for (int b : f)
                for (int c : f)
                    for (int d : f)
                        for (int e : f)
                            for (int g : f) total += a + b + c == d + e + g;
        EXPECT_EQ(l2k_block_decomposition(fam, j, 3).counts.total(), total);
    }
}

TEST(L4Decomposition, ExactIdentity)
{
    for (int seed = 0; seed < 5; ++seed) {
        const auto fam = sample_family(seed, 1, 64);
        for (int j = 0; j <= 6; ++j) {
            const auto d = l4_block_decomposition(fam, j);
            ASSERT_TRUE(d.III.has_value());
            EXPECT_LE(std::abs(d.lhs - (d.I + d.II + *d.III)) / d.lhs, 1e-9);
            EXPECT_NEAR(d.II, pair_free_sum_fast(fam, j), 1e-9 * d.lhs);
            const auto vals = shell_values(fam, j);
            double s4 = 0.0;
            for (const auto& g : vals) s4 += std::pow(std::norm(g), 2);
            EXPECT_NEAR(*d.III, -s4 / std::exp2(2 * j), 1e-12 * s4);
        }
    }
}

TEST(L2kDecomposition, AgreesWithL4AndSixthMoment)
{
    const auto fam = sample_family(21, 1, 32);
    for (int j = 1; j <= 5; ++j) {
        const auto a = l4_block_decomposition(fam, j);
        const auto b = l2k_block_decomposition(fam, j, 2);
        EXPECT_NEAR(a.lhs, b.lhs, 1e-12 * a.lhs);
        EXPECT_NEAR(a.I, b.I, 1e-12 * a.lhs);
        EXPECT_NEAR(a.II, b.II, 1e-10 * a.lhs);
        EXPECT_NEAR(*a.III, b.error_i, 1e-10 * a.lhs);
        EXPECT_EQ(b.error_ii, 0.0);

        const auto c = l2k_block_decomposition(fam, j, 3);
        EXPECT_LE(std::abs(c.lhs - c.sum()) / c.lhs, 1e-8);
        EXPECT_FALSE(c.III.has_value());
        if (j >= 2) {
            EXPECT_GT(c.counts.partial, 0);
        }
    }
}

TEST(L2kDecomposition, RejectsUnsupportedOrders)
{
    const auto fam = sample_family(1, 1, 256);
    try {
        l2k_block_decomposition(fam, 2, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnsupportedOrder);
    }
    EXPECT_THROW(l2k_block_decomposition(fam, 7, 3), Error);
}

TEST(ChaosProjection, Reconstruction)
{
    const auto fam = sample_family(4, 1, 256);
    for (int j : {0, 1, 4, 8})
        for (int k : {1, 2}) {
            double F = 0.0;
            for (const auto& g : shell_values(fam, j)) F += std::pow(std::norm(g), k);
            F /= std::exp2(j);
            double sum = 0.0;
            for (const auto& [order, value] : chaos_project_F(fam, j, k)) sum += value;
            EXPECT_NEAR(sum, F, 1e-12 * (1 + F));
        }
    const auto comps = chaos_project_F(fam, 5, 2);
    EXPECT_EQ(comps.front().first, 0);
    EXPECT_DOUBLE_EQ(comps.front().second, 8.0);
    EXPECT_THROW(chaos_project_F(fam, 5, 3), Error);
}

TEST(Hypercontractivity, GaussianAndChiSquare)
{
    std::vector<double> x1, x2;
    for (int s = 0; s < 50'000; ++s) {
        const cplx g = rng::indexed_normal(5, rng::Stream::Scalar, s);
        x1.push_back(g.real());
        x2.push_back(hermite(2, g.real()));
    }
    const auto r1 = hypercontractivity_check(x1, 1, 4.0);
    EXPECT_TRUE(r1.pass);
    EXPECT_NEAR(r1.ratio, std::pow(3.0, 0.25), 0.02);
    EXPECT_DOUBLE_EQ(r1.bound, std::sqrt(3.0));
    const auto r2 = hypercontractivity_check(x2, 2, 4.0);
    EXPECT_TRUE(r2.pass);
    EXPECT_GT(r2.rel_se, 0.0);
    // A first-chaos sample checked against the order-0 bound must fail.
    EXPECT_FALSE(hypercontractivity_check(x1, 0, 4.0).pass);
    try {
        hypercontractivity_check(std::span(x1).first(100), 1, 4.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientSamples);
    }
}
