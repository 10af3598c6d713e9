#pragma once

// Time-domain Brownian loop and its Fourier coefficients.
//
// b is a complex Brownian motion with E|b(t)|^2 = 2t, beta(t) = b(t) -
// t b(2 pi) / (2 pi) the loop, and u = beta minus its time average. The DFT
// coefficients of u follow
//
//   c_n = g_n / (sqrt(2 pi) i n),   E|c_n|^2 = 1 / (pi n^2),
//
// with g_n iid, Var g_n = 2. A directly sampled Fourier-Wiener path uses
// g_n / |n|, so the two differ by the factor sqrt(2 pi) (and a phase).

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "bmreg/error.hpp"
#include "bmreg/fft.hpp"
#include "bmreg/rng.hpp"
#include "bmreg/spectral.hpp"
#include "bmreg/stats.hpp"

namespace bmreg {

inline const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

/// g_n recovered from a bridge coefficient: sqrt(2 pi) i n c_n.
inline cplx bridge_coefficient_to_gaussian(const cplx& c, int n) noexcept
{
    return kSqrt2Pi * cplx(0.0, static_cast<double>(n)) * c;
}

/// c_n = g_n / (sqrt(2 pi) i n).
inline cplx gaussian_to_bridge_coefficient(const cplx& g, int n) noexcept
{
    return g / (kSqrt2Pi * cplx(0.0, static_cast<double>(n)));
}

/// Factor that maps bridge-derived coefficient magnitudes onto the g_n / |n| series.
inline double bridge_to_fourier_wiener_scale() noexcept { return kSqrt2Pi; }

struct BridgePath {
    std::uint64_t seed = 0;
    std::vector<cplx> increments; ///< db_k over [t_k, t_{k+1}), k < M
    std::vector<cplx> b;          ///< b(t_k), k = 0..M, b[0] = 0
    std::vector<cplx> loop;       ///< beta(t_k), k = 0..M, accumulated from detrended increments
    std::vector<cplx> centered;   ///< u(t_k), k < M
    cplx b_end;                   ///< b(2 pi), kept so the non-periodic part can be rebuilt

    std::size_t grid_size() const noexcept { return increments.size(); }
    double spacing() const noexcept { return 2.0 * std::numbers::pi / static_cast<double>(increments.size()); }
    double periodicity_residual() const noexcept { return std::abs(loop.back() - loop.front()); }
};

inline BridgePath bridge_from_increments(std::vector<cplx> increments, std::uint64_t seed = 0)
{
    require(increments.size() >= 2, ErrorKind::InvalidArgument, "bridge needs M >= 2");
    const std::size_t M = increments.size();
    BridgePath path;
    path.seed = seed;
    path.increments = std::move(increments);
    path.b.resize(M + 1);
    for (std::size_t k = 0; k < M; ++k) path.b[k + 1] = path.b[k] + path.increments[k];
    path.b_end = path.b[M];

    const cplx drift = path.b_end / static_cast<double>(M);
    path.loop.resize(M + 1);
    for (std::size_t k = 0; k < M; ++k) path.loop[k + 1] = path.loop[k] + (path.increments[k] - drift);

    cplx mean = 0.0;
    for (std::size_t k = 0; k < M; ++k) mean += path.loop[k];
    mean /= static_cast<double>(M);
    path.centered.resize(M);
    for (std::size_t k = 0; k < M; ++k) path.centered[k] = path.loop[k] - mean;
    return path;
}

/// Exact Gaussian increments with E|db|^2 = 2 * (2 pi / M).
inline BridgePath sample_bridge(std::uint64_t seed, std::size_t M)
{
    require(M >= 2, ErrorKind::InvalidArgument, "bridge needs M >= 2");
    const double step = std::sqrt(2.0 * std::numbers::pi / static_cast<double>(M));
    std::vector<cplx> inc(M);
    for (std::size_t k = 0; k < M; ++k) inc[k] = step * rng::indexed_normal(seed, rng::Stream::Bridge, k);
    return bridge_from_increments(std::move(inc), seed);
}

/// c_n = (1/M) sum_k u(t_k) e^{-i n t_k} for 0 < |n| <= N.
inline SpectralPath bridge_to_spectrum(const BridgePath& path, int N)
{
    const std::size_t M = path.grid_size();
    require(N >= 1, ErrorKind::InvalidArgument, "N must be >= 1");
    require(8 * static_cast<std::size_t>(N) <= M, ErrorKind::Undersampled, "bridge spectrum needs N <= M / 8");

    auto lattice = Lattice::punctured(1, N);
    std::vector<cplx> coeffs(lattice.size());
    const double inv_m = 1.0 / static_cast<double>(M);
    if (std::has_single_bit(M)) {
        std::vector<cplx> work = path.centered;
        fft::transform(work, fft::Direction::Forward);
        for (std::size_t i = 0; i < lattice.size(); ++i) {
            const long long n = lattice.coord(i);
            const auto bin = static_cast<std::size_t>(n < 0 ? n + static_cast<long long>(M) : n);
            coeffs[i] = work[bin] * inv_m;
        }
    } else {
        for (std::size_t i = 0; i < lattice.size(); ++i) {
            const double n = lattice.coord(i);
            cplx acc = 0.0;
            for (std::size_t k = 0; k < M; ++k)
                acc += path.centered[k] * std::polar(1.0, -n * 2.0 * std::numbers::pi * static_cast<double>(k) * inv_m);
            coeffs[i] = acc * inv_m;
        }
    }
    auto out = path_from_coefficients(std::move(lattice), std::move(coeffs), 1.0);
    out.seed = path.seed;
    return out;
}

struct CovarianceReport {
    std::vector<int> n_list;
    std::size_t samples = 0;
    std::vector<std::vector<cplx>> moment;   ///< E[c_m conj(c_n)]
    std::vector<std::vector<double>> se;     ///< standard error of |moment - expected|
    std::vector<std::vector<double>> expected;

    /// Largest |moment - expected| in units of its standard error (0/0 counts as 0).
    double max_z() const
    {
        double z = 0.0;
        for (std::size_t a = 0; a < moment.size(); ++a)
            for (std::size_t b = 0; b < moment.size(); ++b) {
                const double dev = std::abs(moment[a][b] - expected[a][b]);
                if (dev == 0.0) continue;
                z = std::max(z, se[a][b] > 0.0 ? dev / se[a][b] : std::numeric_limits<double>::infinity());
            }
        return z;
    }
};

inline constexpr std::size_t kMinCovarianceSamples = 1'000;

/// Empirical second moments of bridge coefficients, compared with
/// 1 / (pi n^2) on the diagonal and 0 off it.
inline CovarianceReport covariance_report(std::span<const SpectralPath> samples, std::span<const int> n_list)
{
    require(samples.size() >= kMinCovarianceSamples, ErrorKind::InsufficientSamples,
            "covariance report needs at least 10^3 samples");
    const std::size_t K = n_list.size();
    CovarianceReport rep;
    rep.n_list.assign(n_list.begin(), n_list.end());
    rep.samples = samples.size();
    rep.moment.assign(K, std::vector<cplx>(K));
    rep.se.assign(K, std::vector<double>(K));
    rep.expected.assign(K, std::vector<double>(K));

    std::vector<std::vector<cplx>> c(samples.size(), std::vector<cplx>(K));
    for (std::size_t s = 0; s < samples.size(); ++s)
        for (std::size_t a = 0; a < K; ++a) {
            const auto idx = samples[s].lattice.index_of(n_list[a]);
            require(idx.has_value(), ErrorKind::CoverageError, "sample does not contain requested frequency");
            c[s][a] = samples[s].coeffs[*idx];
        }

    const double n = static_cast<double>(samples.size());
    for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = 0; b < K; ++b) {
            cplx mean = 0.0;
            for (const auto& row : c) mean += row[a] * std::conj(row[b]);
            mean /= n;
            double var = 0.0;
            for (const auto& row : c) var += std::norm(row[a] * std::conj(row[b]) - mean);
            var /= (n - 1.0);
            rep.moment[a][b] = mean;
            rep.se[a][b] = std::sqrt(var / n);
            const double m = n_list[a];
            rep.expected[a][b] = a == b || n_list[a] == n_list[b] ? 1.0 / (std::numbers::pi * m * m) : 0.0;
        }
    return rep;
}

/// Levy modulus ratio of Re beta on [0, 1]; Re b is a standard real
/// Brownian motion under the Var g = 2 convention.
inline double bridge_levy_ratio(const BridgePath& path, double eps)
{
    const double h = path.spacing();
    const auto last = static_cast<std::size_t>(std::floor(1.0 / h));
    std::vector<double> re(last + 1);
    for (std::size_t k = 0; k <= last; ++k) re[k] = path.loop[k].real();
    return levy_ratio(re, h, eps);
}

} // namespace bmreg
