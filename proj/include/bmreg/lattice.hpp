#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bmreg/error.hpp"

namespace bmreg {

/// Integer lattice points n in Z^d with lower < |n| <= upper (Euclidean
/// norm), stored in lexicographic order. lower = 0 gives the punctured ball.
class Lattice {
public:
    Lattice() = default;

    static Lattice punctured(int dim, int upper) { return band(dim, 0, upper); }

    static Lattice band(int dim, int lower, int upper)
    {
        require(dim >= 1, ErrorKind::InvalidArgument, "lattice dimension must be >= 1");
        require(upper >= 1, ErrorKind::InvalidArgument, "truncation must be >= 1");
        require(lower >= 0 && lower < upper, ErrorKind::InvalidArgument, "band requires 0 <= lower < upper");
        Lattice lat;
        lat.dim_ = dim;
        lat.lower_ = lower;
        lat.upper_ = upper;
        const long long lo2 = static_cast<long long>(lower) * lower;
        const long long hi2 = static_cast<long long>(upper) * upper;
        std::vector<int> n(static_cast<std::size_t>(dim), -upper);
        while (true) {
            long long r2 = 0;
            for (int v : n) r2 += static_cast<long long>(v) * v;
            if (r2 > lo2 && r2 <= hi2) {
                lat.coords_.insert(lat.coords_.end(), n.begin(), n.end());
                lat.norm2_.push_back(r2);
            }
            int axis = dim - 1;
            while (axis >= 0 && n[static_cast<std::size_t>(axis)] == upper) {
                n[static_cast<std::size_t>(axis)] = -upper;
                --axis;
            }
            if (axis < 0) break;
            ++n[static_cast<std::size_t>(axis)];
        }
        return lat;
    }

    int dim() const noexcept { return dim_; }
    int lower() const noexcept { return lower_; }
    int truncation() const noexcept { return upper_; }
    std::size_t size() const noexcept { return norm2_.size(); }

    std::span<const int> point(std::size_t i) const noexcept
    {
        return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    /// First coordinate; the frequency itself when dim == 1.
    int coord(std::size_t i) const noexcept { return coords_[i * static_cast<std::size_t>(dim_)]; }
    long long norm2(std::size_t i) const noexcept { return norm2_[i]; }
    double radius(std::size_t i) const noexcept { return std::sqrt(static_cast<double>(norm2_[i])); }

    /// Storage index of frequency n in a one-dimensional lattice.
    std::optional<std::size_t> index_of(int n) const noexcept
    {
        if (dim_ != 1) return std::nullopt;
        const int a = n < 0 ? -n : n;
        if (a <= lower_ || a > upper_) return std::nullopt;
        const int per_side = upper_ - lower_;
        if (n < 0) return static_cast<std::size_t>(n + upper_);
        return static_cast<std::size_t>(per_side + (n - lower_ - 1));
    }

    bool contains_radius_band(long long lo_exclusive2, long long hi_inclusive2) const noexcept
    {
        return lo_exclusive2 >= static_cast<long long>(lower_) * lower_ &&
               hi_inclusive2 <= static_cast<long long>(upper_) * upper_;
    }

    std::span<const int> coordinates() const noexcept { return coords_; }

private:
    int dim_ = 1;
    int lower_ = 0;
    int upper_ = 0;
    std::vector<int> coords_;
    std::vector<long long> norm2_;
};

/// Dyadic shell index: 0 for |n| <= 1, otherwise the j with 2^{j-1} < |n| <= 2^j.
constexpr int shell_of_norm2(long long r2) noexcept
{
    int j = 0;
    long long bound = 1;
    while (r2 > bound) {
        bound *= 4;
        ++j;
    }
    return j;
}

/// Integer radius range (exclusive, inclusive] of shell j in one dimension.
struct ShellRange {
    int lo_exclusive;
    int hi_inclusive;
};

constexpr ShellRange shell_range(int j) noexcept
{
    if (j <= 0) return {0, 1};
    return {1 << (j - 1), 1 << j};
}

/// Number of frequencies in S_j for d = 1 (2 for j = 0, 2^j otherwise).
constexpr long long shell_size_1d(int j) noexcept
{
    const auto r = shell_range(j);
    return 2LL * (r.hi_inclusive - r.lo_exclusive);
}

} // namespace bmreg
