#pragma once

// Gaussian coefficient families and Fourier-Wiener series
//
//   u(t) = sum_{0 < |n| <= N} g_n |n|^{-alpha} e^{i n.t}
//
// with g_n = x_n + i y_n, x_n, y_n iid N(0, 1) (so Var g_n = 2). alpha = 1 is
// the mean-zero Brownian loop, alpha = 1/2 the Benjamin-Ono field, alpha = 0
// white noise. Time-side integrals use the normalized measure dt / (2 pi), so
// Plancherel carries no 2 pi factors.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "bmreg/error.hpp"
#include "bmreg/fft.hpp"
#include "bmreg/lattice.hpp"
#include "bmreg/rng.hpp"

namespace bmreg {

using cplx = std::complex<double>;

struct GaussianFamily {
    std::uint64_t seed = 0;
    Lattice lattice;
    std::vector<cplx> draws; ///< aligned with lattice order

    int dim() const noexcept { return lattice.dim(); }
    int truncation() const noexcept { return lattice.truncation(); }
    std::size_t size() const noexcept { return draws.size(); }

    /// g_n for a one-dimensional family; throws coverage-error when n is not stored.
    cplx at(int n) const
    {
        const auto idx = lattice.index_of(n);
        require(idx.has_value(), ErrorKind::CoverageError, "frequency not covered by family");
        return draws[*idx];
    }
};

struct SpectralPath {
    Lattice lattice;
    double alpha = 1.0;
    std::optional<std::uint64_t> seed; ///< generating seed; empty for injected spectra
    std::vector<cplx> coeffs;

    int dim() const noexcept { return lattice.dim(); }
    int truncation() const noexcept { return lattice.truncation(); }
    std::size_t size() const noexcept { return coeffs.size(); }
};

/// Complex samples u(t_k), t_k = 2 pi k / M.
struct TimeGrid {
    std::vector<cplx> values;

    std::size_t size() const noexcept { return values.size(); }
    double time(std::size_t k) const noexcept
    {
        return 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(values.size());
    }
};

/// Draws g_n for lower < |n| <= N. Each draw depends only on (seed, n).
inline GaussianFamily sample_band(std::uint64_t seed, int dim, int lower, int N)
{
    require(dim >= 1, ErrorKind::InvalidArgument, "dim must be >= 1");
    require(N >= 1, ErrorKind::InvalidArgument, "truncation N must be >= 1");
    GaussianFamily fam;
    fam.seed = seed;
    fam.lattice = Lattice::band(dim, lower, N);
    fam.draws.resize(fam.lattice.size());
    for (std::size_t i = 0; i < fam.lattice.size(); ++i) fam.draws[i] = rng::lattice_normal(seed, fam.lattice.point(i));
    return fam;
}

inline GaussianFamily sample_family(std::uint64_t seed, int dim, int N) { return sample_band(seed, dim, 0, N); }

/// Injects explicit values (in lattice order); used for deterministic stubs.
inline GaussianFamily family_from_values(Lattice lattice, std::vector<cplx> values)
{
    require(values.size() == lattice.size(), ErrorKind::InvalidArgument, "value count does not match lattice");
    GaussianFamily fam;
    fam.lattice = std::move(lattice);
    fam.draws = std::move(values);
    return fam;
}

inline SpectralPath build_path(const GaussianFamily& family, double alpha)
{
    require(alpha >= 0.0, ErrorKind::InvalidArgument, "alpha must be >= 0");
    SpectralPath path;
    path.lattice = family.lattice;
    path.alpha = alpha;
    path.seed = family.seed;
    path.coeffs.resize(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) {
        const double r = family.lattice.radius(i);
        path.coeffs[i] = alpha == 0.0 ? family.draws[i] : family.draws[i] * std::pow(r, -alpha);
    }
    return path;
}

inline SpectralPath path_from_coefficients(Lattice lattice, std::vector<cplx> coeffs, double alpha = 0.0)
{
    require(coeffs.size() == lattice.size(), ErrorKind::InvalidArgument, "coefficient count does not match lattice");
    SpectralPath path;
    path.lattice = std::move(lattice);
    path.alpha = alpha;
    path.coeffs = std::move(coeffs);
    return path;
}

/// Smallest transform-friendly grid with at least 8x oversampling of N.
inline std::size_t synthesis_grid_size(int N, std::size_t requested = 0)
{
    const std::size_t minimum = 8 * static_cast<std::size_t>(N);
    return fft::next_pow2(std::max(minimum, requested));
}

/// Evaluates the series on an M-point grid; M is rounded up to a power of
/// two and the actual length is values.size().
inline TimeGrid synthesize(const SpectralPath& path, std::size_t M)
{
    require(path.dim() == 1, ErrorKind::UnsupportedDimension, "synthesis is only defined for d = 1");
    require(M >= 8 * static_cast<std::size_t>(path.truncation()), ErrorKind::Undersampled, "M must be >= 8 N");
    const std::size_t grid = fft::next_pow2(M);
    std::vector<int> freqs(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) freqs[i] = path.lattice.coord(i);
    return TimeGrid{fft::synthesize_modes(freqs, path.coeffs, grid)};
}

/// sum_n |c_n|^2, the l^2 energy preserved by synthesis under dt / (2 pi).
inline double spectral_energy(std::span<const cplx> coeffs) noexcept
{
    double e = 0.0;
    for (const auto& c : coeffs) e += std::norm(c);
    return e;
}

/// (1/M) sum_k |v_k|^2.
inline double grid_energy(const TimeGrid& grid) noexcept
{
    double e = 0.0;
    for (const auto& v : grid.values) e += std::norm(v);
    return e / static_cast<double>(grid.size());
}

} // namespace bmreg
