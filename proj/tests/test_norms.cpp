#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bmreg/norms.hpp"
#include "bmreg/spectral.hpp"

using namespace bmreg;

namespace {

SpectralPath deterministic_path(int N, double alpha)
{
    auto lat = Lattice::punctured(1, N);
    std::vector<cplx> ones(lat.size(), 1.0);
    return build_path(family_from_values(lat, ones), alpha);
}

// Fourier-Besov norm with shells enumerated by integer ranges rather than
// by shell_of_norm2.
double fbesov_oracle(const SpectralPath& path, double s, double p, double q)
{
    const int N = path.truncation();
    std::vector<double> shells;
    for (int j = 0; (1 << j) / 2 < N; ++j) {
        const int lo = j == 0 ? 0 : 1 << (j - 1);
        const int hi = std::min(1 << j, N);
        double acc = 0.0;
        for (int m = lo + 1; m <= hi; ++m)
            for (int n : {-m, m}) {
                const double v = std::pow(1.0 + double(n) * n, s / 2) * std::abs(path.coeffs[*path.lattice.index_of(n)]);
                acc = std::isinf(p) ? std::max(acc, v) : acc + std::pow(v, p);
            }
        shells.push_back(std::isinf(p) ? acc : std::pow(acc, 1.0 / p));
    }
    double total = 0.0;
    for (double v : shells) total = std::isinf(q) ? std::max(total, v) : total + std::pow(v, q);
    return std::isinf(q) ? total : std::pow(total, 1.0 / q);
}

} // namespace

TEST(NormSpec, ParsesAndPrints)
{
    const auto fl = NormSpec::parse("fl:0.3:·:2");
    EXPECT_EQ(fl.space, Space::FourierLebesgue);
    EXPECT_DOUBLE_EQ(fl.s, 0.3);
    EXPECT_TRUE(std::isnan(fl.p));
    EXPECT_EQ(fl.to_string(), "fl:0.3:-:2");

    const auto fb = NormSpec::parse("fbesov:0.5:2:inf");
    EXPECT_EQ(fb.space, Space::FourierBesov);
    EXPECT_TRUE(std::isinf(fb.q));
    EXPECT_EQ(NormSpec::parse(fb.to_string()).to_string(), fb.to_string());

    EXPECT_EQ(NormSpec::parse("mod:1:2:2:2").dim, 2);
    EXPECT_EQ(NormSpec::parse("wiener-amalgam:0:-:1").space, Space::WienerAmalgam);
}

TEST(NormSpec, RejectsBadInput)
{
    auto kind_of = [](const char* text) {
        try {
            NormSpec::parse(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::BelowMean;
    };
    EXPECT_EQ(kind_of("fl:0.3:-:0.5"), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of("sobolev:1:2:2"), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of("fbesov:0.5:-:2"), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of("fbesov:0.5:2"), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of("fbesov:x:2:2"), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of("besov:0.5:2:2:2"), ErrorKind::UnsupportedDimension);
}

TEST(FlNorm, DirectSum)
{
    const auto path = build_path(sample_family(4, 1, 64), 1.0);
    for (double q : {1.0, 2.0, 3.5}) {
        double acc = 0.0;
        for (std::size_t i = 0; i < path.size(); ++i) {
            const double n = path.lattice.coord(i);
            acc += std::pow(std::pow(1.0 + n * n, 0.15) * std::abs(path.coeffs[i]), q);
        }
        EXPECT_NEAR(fl_norm(path, 0.3, q), std::pow(acc, 1.0 / q), 1e-12 * std::pow(acc, 1.0 / q));
    }
    double mx = 0.0;
    for (const auto& c : path.coeffs) mx = std::max(mx, std::abs(c));
    EXPECT_DOUBLE_EQ(fl_norm(path, 0.0, kInf), mx);
}

TEST(FlNorm, BaselSumLimit)
{
    // sum over n != 0 of 1/n^2 = pi^2 / 3.
    const double limit = std::numbers::pi / std::sqrt(3.0);
    double prev = 0.0;
    for (int N : {10, 100, 1000, 10000, 100000}) {
        const double v = fl_norm(deterministic_path(N, 1.0), 0.0, 2.0);
        EXPECT_GT(v, prev);
        EXPECT_LT(v, limit);
        prev = v;
    }
    EXPECT_NEAR(prev, limit, 1e-3);
}

TEST(FlNorm, TwoDimensionalLattice)
{
    const auto path = build_path(sample_family(9, 2, 5), 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) acc += std::norm(path.coeffs[i]);
    EXPECT_NEAR(evaluate(NormSpec::parse("fl:0:-:2:2"), path), std::sqrt(acc), 1e-12);
}

TEST(FourierBesov, MatchesShellOracle)
{
    for (int N : {1, 2, 7, 64, 100}) {
        const auto path = build_path(sample_family(100 + N, 1, N), 1.0);
        const auto part = DyadicPartition::covering(PartitionMode::Sharp, N);
        for (double p : {1.0, 2.0, kInf})
            for (double q : {1.0, 2.0, kInf}) {
                const double oracle = fbesov_oracle(path, 0.4, p, q);
                EXPECT_NEAR(fourier_besov_norm(path, 0.4, p, q, part), oracle, 1e-12 * oracle) << N << ' ' << p << ' ' << q;
            }
    }
}

TEST(FourierBesov, EqualsFlWhenPEqualsQ)
{
    const auto path = build_path(sample_family(1, 1, 300), 1.0);
    const auto part = DyadicPartition::covering(PartitionMode::Sharp, 300);
    for (double p : {1.0, 2.0, 3.0, kInf}) {
        const double fl = fl_norm(path, 0.7, p);
        EXPECT_NEAR(fourier_besov_norm(path, 0.7, p, p, part), fl, 1e-12 * fl);
    }
}

TEST(FourierBesov, RequiresCoverage)
{
    const auto path = build_path(sample_family(1, 1, 16), 1.0);
    try {
        fourier_besov_norm(path, 0.5, 2, 2, DyadicPartition::sharp(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CoverageError);
    }
    EXPECT_NO_THROW(fourier_besov_norm(path, 0.5, 2, 2, DyadicPartition::sharp(4)));
}

TEST(Partition, SmoothWindowsSumToOne)
{
    const auto part = DyadicPartition::smooth(8);
    for (long long n = 0; n <= 256; ++n) {
        double sum = 0.0;
        for (int j = 0; j <= 8; ++j) {
            const double w = part.window(j, n * n);
            EXPECT_GE(w, 0.0);
            if (j > 0 && (n < (1LL << (j - 1)) || n > (1LL << (j + 1)))) {
                EXPECT_EQ(w, 0.0);
            }
            sum += w;
        }
        EXPECT_NEAR(sum, 1.0, 1e-14) << n;
    }
}

TEST(Partition, CutoffShape)
{
    EXPECT_EQ(DyadicPartition::cutoff(0.3), 1.0);
    EXPECT_EQ(DyadicPartition::cutoff(1.0), 1.0);
    EXPECT_EQ(DyadicPartition::cutoff(2.0), 0.0);
    EXPECT_NEAR(DyadicPartition::cutoff(1.5), 0.5, 1e-15);
    double prev = 1.0;
    for (double r = 1.0; r <= 2.0; r += 1.0 / 64) {
        const double v = DyadicPartition::cutoff(r);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(Partition, SharpShellsAreDisjoint)
{
    const auto part = DyadicPartition::sharp(6);
    for (long long n = 1; n <= 64; ++n) {
        int hits = 0;
        for (int j = 0; j <= 6; ++j) hits += part.window(j, n * n) == 1.0;
        EXPECT_EQ(hits, 1);
    }
    EXPECT_EQ(part.window(0, 1), 1.0);
    EXPECT_EQ(part.window(1, 4), 1.0);
    EXPECT_EQ(part.window(2, 9), 1.0);
}

TEST(NormalizedLp, ConstantsAndSup)
{
    const std::vector<cplx> c(32, cplx(3.0, 4.0));
    for (double p : {1.0, 2.0, 4.5, kInf}) EXPECT_NEAR(normalized_lp(c, p), 5.0, 1e-13);
    std::vector<cplx> spike(16, 0.0);
    spike[3] = 2.0;
    EXPECT_DOUBLE_EQ(normalized_lp(spike, kInf), 2.0);
    EXPECT_NEAR(normalized_lp(spike, 2.0), 2.0 / 4.0, 1e-15);
}

TEST(BesovNorm, SharpPlancherelAgreesWithDyadicFourierBesov)
{
    for (int seed = 0; seed < 10; ++seed) {
        const auto path = build_path(sample_family(seed, 1, 128), 1.0);
        for (auto mode : {PartitionMode::Sharp, PartitionMode::Smooth}) {
            const auto part = DyadicPartition::covering(mode, 128);
            for (double q : {1.0, 2.0, kInf}) {
                const double a = besov_norm(path, 0.3, 2.0, q, part, 8 << part.jmax());
                const double b = fourier_besov_norm(path, 0.3, 2.0, q, part, ShellWeight::Dyadic);
                EXPECT_NEAR(a, b, 1e-9 * b);
            }
        }
    }
}

TEST(BesovNorm, SingleModeBlock)
{
    auto lat = Lattice::punctured(1, 8);
    std::vector<cplx> c(lat.size(), 0.0);
    c[*lat.index_of(5)] = 2.0;
    const auto path = path_from_coefficients(lat, c);
    // A single exponential has |e^{int}| = 1, so every L^p norm is its modulus.
    for (double p : {1.0, 3.0, kInf})
        EXPECT_NEAR(besov_norm(path, 1.0, p, 2.0, DyadicPartition::sharp(3), 64), 2.0 * 8.0, 1e-12);
}

TEST(BesovNorm, Errors)
{
    const auto path = build_path(sample_family(1, 1, 16), 1.0);
    EXPECT_THROW(besov_norm(path, 0.5, 2, 2, DyadicPartition::sharp(4), 64), Error);
    EXPECT_THROW(besov_norm(build_path(sample_family(1, 2, 4), 1.0), 0.5, 2, 2, DyadicPartition::sharp(2), 64), Error);
}

TEST(LqAccumulator, Cases)
{
    LqAccumulator sup(kInf), l1(1.0), l3(3.0);
    for (double x : {1.0, -4.0, 2.0}) {
        sup.add(x);
        l1.add(x);
        l3.add(x);
    }
    EXPECT_EQ(sup.result(), 4.0);
    EXPECT_EQ(l1.result(), 7.0);
    EXPECT_NEAR(l3.result(), std::cbrt(73.0), 1e-14);
}
