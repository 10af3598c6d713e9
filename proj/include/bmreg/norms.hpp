#pragma once

// Sequence-space and Littlewood-Paley norms of a spectral path.
//
// On the torus the modulation and Wiener-amalgam norms coincide with the
// Fourier-Lebesgue norm || <n>^s u_hat(n) ||_{l^q}, <n> = (1 + |n|^2)^{1/2}.
// Fourier-Besov norms take l^p over dyadic shells and l^q over shells;
// classical Besov norms synthesize each Littlewood-Paley block and measure it
// in L^p(dt / 2 pi).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "bmreg/error.hpp"
#include "bmreg/fft.hpp"
#include "bmreg/lattice.hpp"
#include "bmreg/spectral.hpp"

namespace bmreg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Space { FourierLebesgue, Modulation, WienerAmalgam, FourierBesov, Besov };

constexpr std::string_view space_token(Space s) noexcept
{
    switch (s) {
    case Space::FourierLebesgue: return "fl";
    case Space::Modulation: return "mod";
    case Space::WienerAmalgam: return "wa";
    case Space::FourierBesov: return "fbesov";
    case Space::Besov: return "besov";
    }
    return "?";
}

namespace detail {

inline double parse_real(std::string_view text)
{
    if (text == "inf" || text == "Inf" || text == "INF" || text == "∞") return kInf;
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    require(ec == std::errc{} && ptr == end, ErrorKind::InvalidArgument, "cannot parse number '" + std::string(text) + "'");
    return v;
}

inline std::string format_real(double v)
{
    if (std::isinf(v)) return "inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline bool is_placeholder(std::string_view t) noexcept { return t == "·" || t == "-" || t == "_" || t.empty(); }

} // namespace detail

/// Which norm to evaluate. For the Fourier-Lebesgue family p is unused and may be NaN.
struct NormSpec {
    Space space = Space::FourierLebesgue;
    double s = 0.0;
    double p = std::numeric_limits<double>::quiet_NaN();
    double q = 2.0;
    int dim = 1;

    bool fourier_lebesgue_like() const noexcept
    {
        return space == Space::FourierLebesgue || space == Space::Modulation || space == Space::WienerAmalgam;
    }

    void validate() const
    {
        auto in_range = [](double v) { return v >= 1.0; };
        require(in_range(q), ErrorKind::InvalidArgument, "q must lie in [1, inf]");
        require(dim >= 1, ErrorKind::InvalidArgument, "dim must be >= 1");
        if (fourier_lebesgue_like()) {
            require(std::isnan(p) || in_range(p), ErrorKind::InvalidArgument, "p must lie in [1, inf]");
        } else {
            require(!std::isnan(p) && in_range(p), ErrorKind::InvalidArgument, "p must lie in [1, inf]");
        }
        require(space != Space::Besov || dim == 1, ErrorKind::UnsupportedDimension, "Besov norms require dim = 1");
    }

    /// "space:s:p:q" with optional ":d"; "inf" for infinity, "·" or "-" for an unused p.
    static NormSpec parse(std::string_view text)
    {
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        while (true) {
            const auto pos = text.find(':', start);
            parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        require(parts.size() == 4 || parts.size() == 5, ErrorKind::InvalidArgument,
                "norm spec must be space:s:p:q[:d], got '" + std::string(text) + "'");

        NormSpec spec;
        const auto name = parts[0];
        if (name == "fl" || name == "fourier-lebesgue") spec.space = Space::FourierLebesgue;
        else if (name == "mod" || name == "modulation") spec.space = Space::Modulation;
        else if (name == "wa" || name == "wiener-amalgam") spec.space = Space::WienerAmalgam;
        else if (name == "fbesov" || name == "fourier-besov") spec.space = Space::FourierBesov;
        else if (name == "besov") spec.space = Space::Besov;
        else throw Error(ErrorKind::InvalidArgument, "unknown space '" + std::string(name) + "'");

        spec.s = detail::parse_real(parts[1]);
        spec.p = detail::is_placeholder(parts[2]) ? std::numeric_limits<double>::quiet_NaN() : detail::parse_real(parts[2]);
        spec.q = detail::parse_real(parts[3]);
        if (parts.size() == 5) spec.dim = static_cast<int>(detail::parse_real(parts[4]));
        spec.validate();
        return spec;
    }

    std::string to_string() const
    {
        std::string out(space_token(space));
        out += ':' + detail::format_real(s);
        out += ':' + (std::isnan(p) ? std::string("-") : detail::format_real(p));
        out += ':' + detail::format_real(q);
        if (dim != 1) out += ':' + std::to_string(dim);
        return out;
    }
};

/// Accumulates an l^q combination; q = inf is a sup.
class LqAccumulator {
public:
    explicit LqAccumulator(double q) : q_(q) {}

    void add(double x) noexcept
    {
        x = std::abs(x);
        if (std::isinf(q_)) acc_ = std::max(acc_, x);
        else if (q_ == 1.0) acc_ += x;
        else if (q_ == 2.0) acc_ += x * x;
        else acc_ += std::pow(x, q_);
    }

    double result() const noexcept
    {
        if (std::isinf(q_) || q_ == 1.0) return acc_;
        if (q_ == 2.0) return std::sqrt(acc_);
        return std::pow(acc_, 1.0 / q_);
    }

private:
    double q_;
    double acc_ = 0.0;
};

inline double japanese_bracket_pow(long long norm2, double s) noexcept
{
    return s == 0.0 ? 1.0 : std::pow(1.0 + static_cast<double>(norm2), 0.5 * s);
}

enum class PartitionMode { Sharp, Smooth };

/// Shell weight inside Fourier-Besov norms: exact <n>^s or the dyadic 2^{js}.
enum class ShellWeight { Bracket, Dyadic };

class DyadicPartition {
public:
    static DyadicPartition sharp(int jmax) { return DyadicPartition(PartitionMode::Sharp, jmax); }
    static DyadicPartition smooth(int jmax) { return DyadicPartition(PartitionMode::Smooth, jmax); }

    /// Smallest partition whose shells reach radius N.
    static DyadicPartition covering(PartitionMode mode, int N)
    {
        return DyadicPartition(mode, shell_of_norm2(static_cast<long long>(N) * N));
    }

    PartitionMode mode() const noexcept { return mode_; }
    int jmax() const noexcept { return jmax_; }

    bool covers(int N) const noexcept { return static_cast<long long>(N) * N <= (1LL << (2 * jmax_)); }

    /// Smooth cutoff: 1 on [0, 1], 0 on [2, inf), C-infinity in between.
    static double cutoff(double r) noexcept
    {
        if (r <= 1.0) return 1.0;
        if (r >= 2.0) return 0.0;
        const double a = bump_tail(2.0 - r);
        const double b = bump_tail(r - 1.0);
        return a / (a + b);
    }

    /// phi_j at a lattice point with squared norm `norm2`.
    double window(int j, long long norm2) const noexcept
    {
        if (j < 0 || j > jmax_) return 0.0;
        if (mode_ == PartitionMode::Sharp) return shell_of_norm2(norm2) == j ? 1.0 : 0.0;
        const double r = std::sqrt(static_cast<double>(norm2));
        if (j == 0) return cutoff(r);
        return cutoff(std::ldexp(r, -j)) - cutoff(std::ldexp(r, -(j - 1)));
    }

    /// phi_j sampled on every point of a lattice.
    std::vector<double> sample_window(const Lattice& lattice, int j) const
    {
        std::vector<double> w(lattice.size());
        for (std::size_t i = 0; i < lattice.size(); ++i) w[i] = window(j, lattice.norm2(i));
        return w;
    }

private:
    DyadicPartition(PartitionMode mode, int jmax) : mode_(mode), jmax_(jmax)
    {
        require(jmax >= 0 && jmax < 31, ErrorKind::InvalidArgument, "jmax must lie in [0, 30]");
    }

    static double bump_tail(double t) noexcept { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

    PartitionMode mode_;
    int jmax_;
};

inline double fl_norm(const SpectralPath& path, double s, double q)
{
    require(q >= 1.0, ErrorKind::InvalidArgument, "q must lie in [1, inf]");
    LqAccumulator acc(q);
    for (std::size_t i = 0; i < path.size(); ++i) acc.add(japanese_bracket_pow(path.lattice.norm2(i), s) * std::abs(path.coeffs[i]));
    return acc.result();
}

/// Windowed coefficient blocks phi_j(n) u_hat(n), j = 0..jmax.
inline std::vector<std::vector<cplx>> windowed_blocks(const SpectralPath& path, const DyadicPartition& partition)
{
    std::vector<std::vector<cplx>> blocks(static_cast<std::size_t>(partition.jmax() + 1), std::vector<cplx>(path.size()));
    for (int j = 0; j <= partition.jmax(); ++j) {
        auto& b = blocks[static_cast<std::size_t>(j)];
        for (std::size_t i = 0; i < path.size(); ++i) b[i] = partition.window(j, path.lattice.norm2(i)) * path.coeffs[i];
    }
    return blocks;
}

inline double fourier_besov_norm(const SpectralPath& path, double s, double p, double q, const DyadicPartition& partition,
                                 ShellWeight weight = ShellWeight::Bracket)
{
    require(p >= 1.0 && q >= 1.0, ErrorKind::InvalidArgument, "p and q must lie in [1, inf]");
    require(partition.covers(path.truncation()), ErrorKind::CoverageError, "partition does not cover the spectrum");

    const auto shells = static_cast<std::size_t>(partition.jmax() + 1);
    std::vector<LqAccumulator> per_shell(shells, LqAccumulator(p));
    auto shell_weight = [&](int j, long long norm2) {
        return weight == ShellWeight::Bracket ? japanese_bracket_pow(norm2, s) : std::exp2(s * j);
    };

    if (partition.mode() == PartitionMode::Sharp) {
        for (std::size_t i = 0; i < path.size(); ++i) {
            const long long r2 = path.lattice.norm2(i);
            const int j = shell_of_norm2(r2);
            per_shell[static_cast<std::size_t>(j)].add(shell_weight(j, r2) * std::abs(path.coeffs[i]));
        }
    } else {
        for (int j = 0; j <= partition.jmax(); ++j) {
            for (std::size_t i = 0; i < path.size(); ++i) {
                const long long r2 = path.lattice.norm2(i);
                const double w = partition.window(j, r2);
                if (w != 0.0) per_shell[static_cast<std::size_t>(j)].add(shell_weight(j, r2) * w * std::abs(path.coeffs[i]));
            }
        }
    }

    LqAccumulator total(q);
    for (const auto& shell : per_shell) total.add(shell.result());
    return total.result();
}

/// ((1/M) sum_k |v_k|^p)^{1/p}, or max_k |v_k| when p = inf.
inline double normalized_lp(std::span<const cplx> values, double p) noexcept
{
    if (values.empty()) return 0.0;
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& v : values) m = std::max(m, std::abs(v));
        return m;
    }
    double acc = 0.0;
    if (p == 2.0) {
        for (const auto& v : values) acc += std::norm(v);
        return std::sqrt(acc / static_cast<double>(values.size()));
    }
    for (const auto& v : values) acc += std::pow(std::abs(v), p);
    return std::pow(acc / static_cast<double>(values.size()), 1.0 / p);
}

/// Littlewood-Paley Besov norm; each block is synthesized on an M-point grid.
inline double besov_norm(const SpectralPath& path, double s, double p, double q, const DyadicPartition& partition,
                         std::size_t M)
{
    require(path.dim() == 1, ErrorKind::UnsupportedDimension, "Besov norms require dim = 1");
    require(p >= 1.0 && q >= 1.0, ErrorKind::InvalidArgument, "p and q must lie in [1, inf]");
    require(partition.covers(path.truncation()), ErrorKind::CoverageError, "partition does not cover the spectrum");
    require(M >= 8 * (std::size_t{1} << partition.jmax()), ErrorKind::Undersampled, "M must be >= 8 * 2^jmax");

    const std::size_t grid = fft::next_pow2(M);
    std::vector<int> freqs(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) freqs[i] = path.lattice.coord(i);

    LqAccumulator total(q);
    std::vector<int> block_freqs;
    std::vector<cplx> block_coeffs;
    for (int j = 0; j <= partition.jmax(); ++j) {
        block_freqs.clear();
        block_coeffs.clear();
        for (std::size_t i = 0; i < path.size(); ++i) {
            const double w = partition.window(j, path.lattice.norm2(i));
            if (w == 0.0) continue;
            block_freqs.push_back(freqs[i]);
            block_coeffs.push_back(w * path.coeffs[i]);
        }
        if (block_freqs.empty()) {
            total.add(0.0);
            continue;
        }
        const auto values = fft::synthesize_modes(block_freqs, block_coeffs, grid);
        total.add(std::exp2(s * j) * normalized_lp(values, p));
    }
    return total.result();
}

/// Evaluates a NormSpec with the default partitions: sharp shells with <n>^s
/// weights for Fourier-Besov, smooth windows on an 8x grid for Besov.
inline double evaluate(const NormSpec& spec, const SpectralPath& path)
{
    spec.validate();
    require(spec.dim == path.dim(), ErrorKind::InvalidArgument, "norm spec dimension does not match path");
    switch (spec.space) {
    case Space::FourierLebesgue:
    case Space::Modulation:
    case Space::WienerAmalgam:
        return fl_norm(path, spec.s, spec.q);
    case Space::FourierBesov:
        return fourier_besov_norm(path, spec.s, spec.p, spec.q,
                                  DyadicPartition::covering(PartitionMode::Sharp, path.truncation()));
    case Space::Besov: {
        const auto part = DyadicPartition::covering(PartitionMode::Smooth, path.truncation());
        return besov_norm(path, spec.s, spec.p, spec.q, part, 8 * (std::size_t{1} << part.jmax()));
    }
    }
    return 0.0;
}

} // namespace bmreg
