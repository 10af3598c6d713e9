#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bmreg/stats.hpp"

using namespace bmreg;

namespace {

// E|g|^p = int_0^inf x^{p+1} e^{-x^2/2} dx (|g| is Rayleigh), composite Simpson on [0, 40].
double moment_quadrature(double p)
{
    const int n = 400000;
    const double h = 40.0 / n;
    auto f = [p](double x) { return std::pow(x, p + 1) * std::exp(-x * x / 2); };
    double acc = f(0) + f(40.0);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return acc * h / 3;
}

double median(std::vector<double> v)
{
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

} // namespace

TEST(MomentConstant, ClosedFormValues)
{
    EXPECT_DOUBLE_EQ(c_p_exact(0), 1.0);
    EXPECT_DOUBLE_EQ(c_p_exact(2), 2.0);
    EXPECT_DOUBLE_EQ(c_p_exact(4), 8.0);
    EXPECT_NEAR(c_p_exact(6), 48.0, 1e-12);
    EXPECT_NEAR(c_p_exact(1), std::sqrt(std::numbers::pi / 2), 1e-15);
    EXPECT_THROW(c_p_exact(-1), Error);
}

TEST(MomentConstant, MatchesQuadrature)
{
    for (double p : {0.5, 1.0, 2.5, 3.0, 5.0, 6.0}) EXPECT_NEAR(c_p_exact(p) / moment_quadrature(p), 1.0, 1e-8) << p;
}

TEST(ShellStats, ShellLayout)
{
    EXPECT_EQ(shell_frequencies(0), (std::vector<int>{-1, 1}));
    EXPECT_EQ(shell_frequencies(1), (std::vector<int>{-2, 2}));
    EXPECT_EQ(shell_frequencies(3), (std::vector<int>{-8, -7, -6, -5, 5, 6, 7, 8}));
    EXPECT_DOUBLE_EQ(shell_ratio(0), 2.0);
    EXPECT_DOUBLE_EQ(shell_ratio(5), 1.0);
}

TEST(ShellStats, XStatisticDirectSum)
{
    const auto fam = sample_family(3, 1, 64);
    for (int j = 0; j <= 6; ++j)
        for (double p : {1.0, 2.0, 4.0, 3.3}) {
            double acc = 0.0;
            for (int n = 1; n <= 64; ++n) {
                const int shell = n == 1 ? 0 : static_cast<int>(std::ceil(std::log2(n)));
                if (shell == j) acc += std::pow(std::abs(fam.at(n)), p) + std::pow(std::abs(fam.at(-n)), p);
            }
            EXPECT_NEAR(x_statistic(fam, j, p).value, acc / std::exp2(j), 1e-12 * acc);
        }
}

TEST(ShellStats, StrongLaw)
{
    const auto fam = sample_family(5, 1, 1 << 20);
    for (double p : {1.0, 2.0, 4.0}) EXPECT_NEAR(x_statistic(fam, 20, p).value / c_p_exact(p), 1.0, 0.02);
}

TEST(ShellStats, Telescoping)
{
    const auto fam = sample_family(8, 1, 1 << 11);
    for (int j = 1; j <= 10; ++j)
        for (double p : {1.0, 2.0}) {
            const double x = x_statistic(fam, j, p).value;
            EXPECT_NEAR(x, 2 * y_statistic(fam, j + 1, p) - y_statistic(fam, j, p), 1e-12 * (1 + x));
        }
}

TEST(ShellStats, CoverageErrors)
{
    const auto fam = sample_family(1, 1, 10);
    try {
        x_statistic(fam, 4, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CoverageError);
    }
    EXPECT_NO_THROW(x_statistic(sample_band(1, 1, 8, 16), 4, 2));
    EXPECT_THROW(x_statistic(sample_band(1, 1, 9, 16), 4, 2), Error);
    EXPECT_THROW(x_statistic(sample_family(1, 2, 16), 2, 2), Error);
}

TEST(BlockSum, PlancherelAndDirectValues)
{
    const auto fam = sample_family(6, 1, 64);
    for (int j : {0, 3, 6}) {
        const auto grid = block_sum(fam, j, 8 << j);
        EXPECT_NEAR(normalized_lp(grid.values, 2.0) * normalized_lp(grid.values, 2.0), x_statistic(fam, j, 2).value, 1e-12);
        const auto freqs = shell_frequencies(j);
        for (std::size_t k : {std::size_t{0}, std::size_t{5}, grid.size() - 1}) {
            cplx direct = 0.0;
            for (int n : freqs) direct += fam.at(n) * std::polar(1.0, n * grid.time(k));
            EXPECT_NEAR(std::abs(grid.values[k] - direct * std::exp2(-0.5 * j)), 0.0, 1e-12);
        }
    }
    EXPECT_THROW(block_sum(fam, 3, 63), Error);
}

TEST(BlockSum, ZStatisticApproachesFirstMoment)
{
    const auto fam = sample_family(7, 1, 1 << 14);
    EXPECT_NEAR(z_statistic(fam, 14, 1.0), c_p_exact(1), 0.03);
    EXPECT_NEAR(z_statistic(fam, 14, 2.0), z_statistic(fam, 14, 1.0) * z_statistic(fam, 14, 1.0), 1e-12);
}

TEST(DecayRatio, BoundsAndTrend)
{
    const auto fam = sample_family(2, 1, 1 << 16);
    EXPECT_LE(decay_ratio(fam, 10, 0.0), 1.0);
    EXPECT_GT(decay_ratio(fam, 10, 0.0), 1.0 / 1024);
    EXPECT_THROW(decay_ratio(fam, 4, 0.5), Error);

    std::vector<double> r8, r12, r16;
    for (int s = 0; s < 40; ++s) {
        const auto f = sample_family(1000 + s, 1, 1 << 16);
        r8.push_back(decay_ratio(f, 8, 0.4));
        r12.push_back(decay_ratio(f, 12, 0.4));
        r16.push_back(decay_ratio(f, 16, 0.4));
    }
    EXPECT_GT(median(r8), median(r12));
    EXPECT_GT(median(r12), median(r16));
}

TEST(LevyRatio, LinearPath)
{
    const double h = 1.0 / 1024;
    std::vector<double> x(1025);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = 3.0 * k * h;
    const double eps = 16 * h;
    EXPECT_NEAR(levy_ratio(x, h, eps), 3.0 * eps / std::sqrt(-2 * eps * std::log(eps)), 1e-12);
    EXPECT_THROW(levy_ratio(x, h, h / 2), Error);
    EXPECT_THROW(levy_ratio(x, h, 1.0), Error);
}
