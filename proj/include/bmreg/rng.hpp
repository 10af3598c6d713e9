#pragma once

// Counter-based random numbers. Every variate is a pure function of
// (key, counter), so Monte Carlo results do not depend on evaluation
// order or on how work is split across threads.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>

namespace bmreg::rng {

/// Philox4x32-10 block function (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key) noexcept
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static constexpr Counter single_round(const Counter& c, const Key& k) noexcept
    {
        const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Stream tags keep the lattice draws, bridge increments and derived seeds
/// of one master seed disjoint.
enum class Stream : std::uint32_t {
    Lattice = 0x4C410000u,
    Bridge = 0x42520000u,
    Seeds = 0x53450000u,
    Scalar = 0x53430000u,
};

constexpr Philox4x32::Key key_of(std::uint64_t seed) noexcept
{
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Maps the two 32-bit halves to a double strictly inside (0, 1).
constexpr double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept
{
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Box-Muller on one Philox block: real and imaginary parts are iid N(0, 1).
inline std::complex<double> complex_normal(std::uint64_t seed, const Philox4x32::Counter& ctr) noexcept
{
    const auto out = Philox4x32::block(ctr, key_of(seed));
    const double u1 = to_open_unit(out[0], out[1]);
    const double u2 = to_open_unit(out[2], out[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

constexpr std::uint32_t zigzag(std::int64_t v) noexcept
{
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63));
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Counter for a lattice point. Coordinates of dimension <= 3 are encoded
/// injectively; higher dimensions are folded through splitmix64.
inline Philox4x32::Counter lattice_counter(std::span<const int> n) noexcept
{
    const auto dim = static_cast<std::uint32_t>(n.size());
    const std::uint32_t tag = static_cast<std::uint32_t>(Stream::Lattice) | (dim & 0xFFFFu);
    if (n.size() <= 3) {
        Philox4x32::Counter c{0, 0, 0, tag};
        for (std::size_t i = 0; i < n.size(); ++i) c[i] = zigzag(n[i]);
        return c;
    }
    std::uint64_t h = 0;
    for (int v : n) h = splitmix64(h ^ zigzag(v));
    return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32), 0xFFFFFFFFu, tag};
}

/// g_n for lattice point n under the given seed.
inline std::complex<double> lattice_normal(std::uint64_t seed, std::span<const int> n) noexcept
{
    return complex_normal(seed, lattice_counter(n));
}

inline std::complex<double> lattice_normal_1d(std::uint64_t seed, int n) noexcept
{
    const int coord[1] = {n};
    return lattice_normal(seed, coord);
}

/// Indexed complex normal on an arbitrary stream (bridge increments, scalar Monte Carlo).
inline std::complex<double> indexed_normal(std::uint64_t seed, Stream stream, std::uint64_t index,
                                           std::uint32_t sub = 0) noexcept
{
    return complex_normal(seed, {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), sub,
                                 static_cast<std::uint32_t>(stream)});
}

/// Seed of the index-th independent replica of a Monte Carlo run.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint32_t sub = 0) noexcept
{
    const auto out = Philox4x32::block({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                        sub, static_cast<std::uint32_t>(Stream::Seeds)},
                                       key_of(master));
    return (std::uint64_t{out[0]} << 32) | out[1];
}

} // namespace bmreg::rng
