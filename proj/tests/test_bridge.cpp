#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bmreg/bridge.hpp"
#include "bmreg/norms.hpp"

using namespace bmreg;

namespace {

std::vector<cplx> direct_dft(const std::vector<cplx>& u, int N)
{
    const double M = static_cast<double>(u.size());
    std::vector<cplx> out;
    for (int n = -N; n <= N; ++n) {
        if (n == 0) continue;
        cplx acc = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) acc += u[k] * std::exp(cplx(0.0, -2.0 * std::numbers::pi * n * k / M));
        out.push_back(acc / M);
    }
    return out;
}

} // namespace

TEST(Bridge, LoopIsPeriodicAndCentered)
{
    const auto path = sample_bridge(3, 1024);
    EXPECT_EQ(path.b.front(), cplx(0.0));
    EXPECT_EQ(path.b.back(), path.b_end);
    EXPECT_LT(path.periodicity_residual(), 1e-12);
    cplx mean = 0.0;
    for (const auto& u : path.centered) mean += u;
    EXPECT_LT(std::abs(mean) / 1024, 1e-14);
    for (std::size_t k = 0; k <= 1024; k += 128) {
        const cplx expected = path.b[k] - (static_cast<double>(k) / 1024) * path.b_end;
        EXPECT_NEAR(std::abs(path.loop[k] - expected), 0.0, 1e-12);
    }
}

TEST(Bridge, LinearMotionHasNoLoop)
{
    const auto path = bridge_from_increments(std::vector<cplx>(64, cplx(0.5, -1.0)));
    for (const auto& v : path.loop) EXPECT_NEAR(std::abs(v), 0.0, 1e-14);
    const auto spec = bridge_to_spectrum(path, 8);
    for (const auto& c : spec.coeffs) EXPECT_NEAR(std::abs(c), 0.0, 1e-14);
}

TEST(Bridge, IncrementVariance)
{
    const auto path = sample_bridge(4, 1 << 16);
    double acc = 0.0;
    for (const auto& d : path.increments) acc += std::norm(d);
    EXPECT_NEAR(acc, 4.0 * std::numbers::pi, 0.1);
}

TEST(BridgeSpectrum, MatchesDirectDft)
{
    for (std::size_t M : {std::size_t{128}, std::size_t{120}}) {
        const auto path = sample_bridge(5, M);
        const auto spec = bridge_to_spectrum(path, 15);
        const auto oracle = direct_dft(path.centered, 15);
        ASSERT_EQ(oracle.size(), spec.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(std::abs(spec.coeffs[i] - oracle[i]), 0.0, 1e-13);
    }
    try {
        bridge_to_spectrum(sample_bridge(5, 64), 9);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Undersampled);
    }
}

TEST(BridgeSpectrum, ConversionRoundTrip)
{
    const cplx g(0.3, -1.7);
    for (int n : {-5, -1, 1, 12}) EXPECT_NEAR(std::abs(bridge_coefficient_to_gaussian(gaussian_to_bridge_coefficient(g, n), n) - g), 0.0, 1e-15);
    EXPECT_NEAR(std::norm(gaussian_to_bridge_coefficient(cplx(std::sqrt(2.0), 0.0), 3)), 1.0 / (std::numbers::pi * 9), 1e-15);
}

TEST(BridgeSpectrum, CovarianceMatchesTheory)
{
    std::vector<SpectralPath> samples;
    for (int s = 0; s < 2000; ++s) samples.push_back(bridge_to_spectrum(sample_bridge(rng::derive_seed(8, s), 1024), 8));
    const std::vector<int> ns{-3, 1, 2, 5};
    const auto rep = covariance_report(samples, ns);
    EXPECT_LT(rep.max_z(), 5.0);
    EXPECT_NEAR(rep.expected[1][1], 1.0 / std::numbers::pi, 1e-15);
    EXPECT_EQ(rep.expected[0][1], 0.0);
    try {
        covariance_report(std::span(samples).first(10), ns);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientSamples);
    }
    const std::vector<int> outside{9};
    EXPECT_THROW(covariance_report(samples, outside), Error);
}

TEST(BridgeLevy, RatioNearOne)
{
    std::vector<double> r;
    for (int s = 0; s < 20; ++s) r.push_back(bridge_levy_ratio(sample_bridge(rng::derive_seed(6, s), 1 << 16), 1e-2));
    std::sort(r.begin(), r.end());
    EXPECT_GT(r[10], 0.6);
    EXPECT_LT(r[10], 1.4);
}
