#pragma once

// Scalar statistics of a Gaussian family on dyadic shells
// S_j = {2^{j-1} < |n| <= 2^j} (S_0 = {|n| = 1}), d = 1.
//
// The normalizer of every shell average is 2^{-j}, kept as is; since
// #S_0 = 2 and #S_j = 2^j for j >= 1, expectations carry the explicit
// factor #S_j / 2^j.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "bmreg/error.hpp"
#include "bmreg/fft.hpp"
#include "bmreg/lattice.hpp"
#include "bmreg/norms.hpp"
#include "bmreg/spectral.hpp"

namespace bmreg {

/// E|g|^p = 2^{p/2} Gamma(p/2 + 1) for a complex Gaussian with Var g = 2.
inline double c_p_exact(double p)
{
    require(p >= 0.0, ErrorKind::InvalidArgument, "moment order must be >= 0");
    return std::exp2(0.5 * p) * std::tgamma(0.5 * p + 1.0);
}

struct ShellStatistic {
    int j = 0;
    double p = 0.0;
    double value = 0.0;
};

inline double shell_ratio(int j) noexcept { return static_cast<double>(shell_size_1d(j)) / std::exp2(j); }

/// Values g_n, n in S_j, ordered by n (negative frequencies first).
inline std::vector<cplx> shell_values(const GaussianFamily& family, int j)
{
    require(family.dim() == 1, ErrorKind::UnsupportedDimension, "shell statistics require d = 1");
    require(j >= 0 && j < 31, ErrorKind::InvalidArgument, "shell index out of range");
    const auto r = shell_range(j);
    require(family.lattice.lower() <= r.lo_exclusive && family.truncation() >= r.hi_inclusive, ErrorKind::CoverageError,
            "family does not cover shell " + std::to_string(j));
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(shell_size_1d(j)));
    for (int n = -r.hi_inclusive; n <= -r.lo_exclusive - 1; ++n) out.push_back(family.at(n));
    for (int n = r.lo_exclusive + 1; n <= r.hi_inclusive; ++n) out.push_back(family.at(n));
    return out;
}

/// Frequencies of S_j in the order used by shell_values.
inline std::vector<int> shell_frequencies(int j)
{
    const auto r = shell_range(j);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(shell_size_1d(j)));
    for (int n = -r.hi_inclusive; n <= -r.lo_exclusive - 1; ++n) out.push_back(n);
    for (int n = r.lo_exclusive + 1; n <= r.hi_inclusive; ++n) out.push_back(n);
    return out;
}

inline double abs_pow(const cplx& g, double p) noexcept
{
    if (p == 2.0) return std::norm(g);
    if (p == 4.0) {
        const double a = std::norm(g);
        return a * a;
    }
    return std::pow(std::abs(g), p);
}

/// X_j^{(p)} = 2^{-j} sum_{n in S_j} |g_n|^p.
inline ShellStatistic x_statistic(const GaussianFamily& family, int j, double p)
{
    double sum = 0.0;
    for (const auto& g : shell_values(family, j)) sum += abs_pow(g, p);
    return {j, p, std::ldexp(sum, -j)};
}

/// Y_j^{(p)} = 2^{-j} sum_{1 <= |n| <= 2^{j-1}} |g_n|^p, j >= 1.
inline double y_statistic(const GaussianFamily& family, int j, double p)
{
    require(j >= 1, ErrorKind::InvalidArgument, "Y_j is defined for j >= 1");
    require(family.dim() == 1 && family.lattice.lower() == 0 && family.truncation() >= (1 << (j - 1)),
            ErrorKind::CoverageError, "family does not cover 1 <= |n| <= 2^{j-1}");
    double sum = 0.0;
    for (int n = 1; n <= (1 << (j - 1)); ++n) sum += abs_pow(family.at(n), p) + abs_pow(family.at(-n), p);
    return std::ldexp(sum, -j);
}

/// Block trigonometric sum 2^{-j/2} sum_{S_j} g_n e^{int} on an M-point grid.
inline TimeGrid block_sum(const GaussianFamily& family, int j, std::size_t M)
{
    require(family.dim() == 1, ErrorKind::UnsupportedDimension, "block sums require d = 1");
    require(M >= 8 * (std::size_t{1} << j), ErrorKind::Undersampled, "M must be >= 8 * 2^j");
    auto coeffs = shell_values(family, j);
    const double scale = std::exp2(-0.5 * j);
    for (auto& c : coeffs) c *= scale;
    return TimeGrid{fft::synthesize_modes(shell_frequencies(j), coeffs, fft::next_pow2(M))};
}

/// Z_j^{(q)} = ||block_sum||_{L^1(dt/2pi)}^q. M = 0 selects 8 * 2^j.
inline double z_statistic(const GaussianFamily& family, int j, double q, std::size_t M = 0)
{
    require(q > 0.0, ErrorKind::InvalidArgument, "q must be positive");
    if (M == 0) M = 8 * (std::size_t{1} << j);
    const auto grid = block_sum(family, j, M);
    return std::pow(normalized_lp(grid.values, 1.0), q);
}

/// M^{2 delta} max_{S_j} |g_n|^2 / sum_{S_j} |g_n|^2 with M = 2^j.
inline double decay_ratio(const GaussianFamily& family, int j, double delta)
{
    require(delta >= 0.0 && delta < 0.5, ErrorKind::InvalidArgument, "delta must lie in [0, 1/2)");
    double mx = 0.0, sum = 0.0;
    for (const auto& g : shell_values(family, j)) {
        const double a = std::norm(g);
        mx = std::max(mx, a);
        sum += a;
    }
    if (sum == 0.0) return 0.0;
    return std::exp2(2.0 * delta * j) * mx / sum;
}

/// sup_{0 < t - t' <= eps} |x(t) - x(t')| / sqrt(-2 eps log eps) over a
/// uniform grid of the given spacing. The grid supremum underestimates the
/// continuum one.
inline double levy_ratio(std::span<const double> samples, double spacing, double eps)
{
    require(eps < 1.0 && eps > spacing && spacing > 0.0, ErrorKind::InvalidArgument,
            "levy ratio requires spacing < eps < 1");
    const auto max_lag = static_cast<std::size_t>(std::floor(eps / spacing * (1.0 + 1e-12)));
    double sup = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const std::size_t last = std::min(samples.size() - 1, k + max_lag);
        for (std::size_t l = k + 1; l <= last; ++l) sup = std::max(sup, std::abs(samples[l] - samples[k]));
    }
    return sup / std::sqrt(-2.0 * eps * std::log(eps));
}

} // namespace bmreg
