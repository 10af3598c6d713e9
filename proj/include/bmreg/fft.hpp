#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "bmreg/error.hpp"

namespace bmreg::fft {

constexpr std::size_t next_pow2(std::size_t n) noexcept { return n <= 1 ? 1 : std::bit_ceil(n); }

enum class Direction { Forward, Inverse };

/// Unnormalized in-place radix-2 transform of a power-of-two sequence.
/// Forward: X_k = sum_m x_m e^{-2 pi i k m / n}; Inverse uses e^{+...}.
inline void transform(std::span<std::complex<double>> a, Direction dir)
{
    const std::size_t n = a.size();
    require(std::has_single_bit(n), ErrorKind::InvalidArgument, "fft length must be a power of two");
    if (n == 1) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    // Twiddles are evaluated directly rather than by repeated multiplication.
    const double sign = dir == Direction::Forward ? -1.0 : 1.0;
    std::vector<std::complex<double>> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddle[k] = {std::cos(angle), std::sin(angle)};
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const auto t = twiddle[k * stride] * a[start + k + half];
                const auto u = a[start + k];
                a[start + k] = u + t;
                a[start + k + half] = u - t;
            }
        }
    }
}

/// Evaluates sum_n c_n e^{i n t_k} at t_k = 2 pi k / M for integer
/// frequencies |n| < M/2. M must be a power of two.
inline std::vector<std::complex<double>> synthesize_modes(std::span<const int> freqs,
                                                          std::span<const std::complex<double>> coeffs,
                                                          std::size_t M)
{
    std::vector<std::complex<double>> grid(M);
    const auto m = static_cast<long long>(M);
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        long long bin = freqs[i] % m;
        if (bin < 0) bin += m;
        grid[static_cast<std::size_t>(bin)] += coeffs[i];
    }
    transform(grid, Direction::Inverse);
    return grid;
}

} // namespace bmreg::fft
