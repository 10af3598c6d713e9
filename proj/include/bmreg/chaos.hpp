#pragma once

// Hermite polynomials, Wick ordering of |g|^{2n}, and the exact
// decomposition of L^{2k} block norms of
//
//   Xt_j(t) = 2^{-j/2} sum_{n in S_j} g_n e^{int}
//
// into paired, pair-free and error index classes. Resonance sums are
// enumerated exhaustively; the convolution route for k = 2 is kept separate
// so the two can check each other.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "bmreg/error.hpp"
#include "bmreg/lattice.hpp"
#include "bmreg/norms.hpp"
#include "bmreg/spectral.hpp"
#include "bmreg/stats.hpp"

namespace bmreg {

/// Probabilists' Hermite polynomial He_n(x): H_{n+1} = x H_n - n H_{n-1}.
inline double hermite(int n, double x)
{
    require(n >= 0, ErrorKind::InvalidArgument, "hermite degree must be >= 0");
    if (n == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = x * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// :|g|^{2n}: for Var g = 2, n in {1, 2, 3}.
inline double wick_abs2n(const cplx& g, int n)
{
    const double a = std::norm(g);
    switch (n) {
    case 1: return a - 2.0;
    case 2: return a * a - 8.0 * a + 8.0;
    case 3: return a * a * a - 18.0 * a * a + 72.0 * a - 48.0;
    default: throw Error(ErrorKind::UnsupportedOrder, "wick ordering is implemented for n in {1, 2, 3}");
    }
}

enum class TupleClass {
    Paired,    ///< {n} = {m} as multisets, n_alpha pairwise distinct
    Repeated,  ///< {n} = {m} with a repeated frequency (type (i))
    Partial,   ///< {n} != {m} but some n_alpha = m_beta (type (ii))
    PairFree,  ///< n_alpha != m_beta for all alpha, beta
};

template <std::size_t K>
TupleClass classify(std::array<int, K> n, std::array<int, K> m) noexcept
{
    bool any_match = false;
    for (int a : n)
        for (int b : m) any_match |= (a == b);
    if (!any_match) return TupleClass::PairFree;
    std::sort(n.begin(), n.end());
    std::sort(m.begin(), m.end());
    if (n != m) return TupleClass::Partial;
    for (std::size_t i = 1; i < K; ++i)
        if (n[i] == n[i - 1]) return TupleClass::Repeated;
    return TupleClass::Paired;
}

struct ResonanceCounts {
    long long paired = 0;
    long long repeated = 0;
    long long partial = 0;
    long long pair_free = 0;

    long long total() const noexcept { return paired + repeated + partial + pair_free; }
};

/// lhs = ||Xt_j||_{L^{2k}}^{2k} by quadrature; I + II + error_i + error_ii
/// reproduces it exactly. For k = 2, III = error_i = -2^{-2j} sum |g|^4 and
/// error_ii = 0.
struct ChaosDecomposition {
    int j = 0;
    int k = 2;
    double lhs = 0.0;
    double I = 0.0;
    double II = 0.0;
    double error_i = 0.0;
    double error_ii = 0.0;
    std::optional<double> III;
    ResonanceCounts counts;

    double sum() const noexcept { return I + II + error_i + error_ii; }
};

namespace detail {

/// Neumaier-compensated sum.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
        else comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct ShellTable {
    std::vector<int> freqs;
    std::vector<cplx> values;
    std::vector<int> lookup; ///< index by n + offset, -1 outside the shell
    int offset = 0;

    int find(int n) const noexcept
    {
        const int i = n + offset;
        return (i < 0 || i >= static_cast<int>(lookup.size())) ? -1 : lookup[static_cast<std::size_t>(i)];
    }
};

inline ShellTable make_shell_table(const GaussianFamily& family, int j)
{
    ShellTable t;
    t.values = shell_values(family, j);
    t.freqs = shell_frequencies(j);
    const int r = shell_range(j).hi_inclusive;
    t.offset = r;
    t.lookup.assign(static_cast<std::size_t>(2 * r + 1), -1);
    for (std::size_t i = 0; i < t.freqs.size(); ++i) t.lookup[static_cast<std::size_t>(t.freqs[i] + r)] = static_cast<int>(i);
    return t;
}

inline double block_moment(const GaussianFamily& family, int j, int k)
{
    const auto grid = block_sum(family, j, 8 * (std::size_t{1} << j));
    CompensatedSum acc;
    for (const auto& v : grid.values) acc.add(std::pow(std::norm(v), k));
    return acc.value() / static_cast<double>(grid.size());
}

struct ClassSums {
    CompensatedSum paired, repeated, partial, pair_free;
    ResonanceCounts counts;

    void add(TupleClass c, double term) noexcept
    {
        switch (c) {
        case TupleClass::Paired: paired.add(term); ++counts.paired; break;
        case TupleClass::Repeated: repeated.add(term); ++counts.repeated; break;
        case TupleClass::Partial: partial.add(term); ++counts.partial; break;
        case TupleClass::PairFree: pair_free.add(term); ++counts.pair_free; break;
        }
    }
};

/// Walks every (n_1..n_k, m_1..m_k) in S_j^{2k} with sum n = sum m.
inline ClassSums enumerate_resonances(const ShellTable& t, int k)
{
    ClassSums sums;
    const auto S = static_cast<int>(t.freqs.size());
    const auto& f = t.freqs;
    const auto& v = t.values;
    if (k == 2) {
        for (int a = 0; a < S; ++a)
            for (int b = 0; b < S; ++b) {
                const int total = f[a] + f[b];
                const cplx nn = v[a] * v[b];
                for (int c = 0; c < S; ++c) {
                    const int d = t.find(total - f[c]);
                    if (d < 0) continue;
                    const double term = std::real(nn * std::conj(v[c] * v[d]));
                    sums.add(classify<2>({f[a], f[b]}, {f[c], f[d]}), term);
                }
            }
    } else {
        for (int a = 0; a < S; ++a)
            for (int b = 0; b < S; ++b)
                for (int c = 0; c < S; ++c) {
                    const int total = f[a] + f[b] + f[c];
                    const cplx nnn = v[a] * v[b] * v[c];
                    for (int d = 0; d < S; ++d) {
                        const cplx md = std::conj(v[d]);
                        for (int e = 0; e < S; ++e) {
                            const int g = t.find(total - f[d] - f[e]);
                            if (g < 0) continue;
                            const double term = std::real(nnn * md * std::conj(v[e] * v[g]));
                            sums.add(classify<3>({f[a], f[b], f[c]}, {f[d], f[e], f[g]}), term);
                        }
                    }
                }
    }
    return sums;
}

} // namespace detail

/// Exact L^4 split: I = 2 * 2^{-2j} (sum |g|^2)^2, II = pair-free resonant
/// sum (enumerated), III = -2^{-2j} sum |g|^4.
inline ChaosDecomposition l4_block_decomposition(const GaussianFamily& family, int j)
{
    const auto table = detail::make_shell_table(family, j);
    double s2 = 0.0, s4 = 0.0;
    for (const auto& g : table.values) {
        const double a = std::norm(g);
        s2 += a;
        s4 += a * a;
    }
    const double scale = std::exp2(-2.0 * j);
    const auto sums = detail::enumerate_resonances(table, 2);

    ChaosDecomposition d;
    d.j = j;
    d.k = 2;
    d.lhs = detail::block_moment(family, j, 2);
    d.I = 2.0 * scale * s2 * s2;
    d.II = scale * sums.pair_free.value();
    d.III = -scale * s4;
    d.error_i = *d.III;
    d.error_ii = 0.0;
    d.counts = sums.counts;
    return d;
}

/// L^{2k} split for k in {2, 3}. I is the closed form k! 2^{-kj} (sum |g|^2)^k;
/// error_i is whatever the enumerated {n} = {m} classes add on top of it.
inline ChaosDecomposition l2k_block_decomposition(const GaussianFamily& family, int j, int k)
{
    require(k == 2 || k == 3, ErrorKind::UnsupportedOrder, "l2k decomposition supports k in {2, 3}");
    require(k == 2 || j <= 6, ErrorKind::UnsupportedOrder, "k = 3 enumeration is limited to j <= 6");
    const auto table = detail::make_shell_table(family, j);
    double s2 = 0.0;
    for (const auto& g : table.values) s2 += std::norm(g);
    const double scale = std::exp2(-static_cast<double>(k) * j);
    const auto sums = detail::enumerate_resonances(table, k);

    ChaosDecomposition d;
    d.j = j;
    d.k = k;
    d.lhs = detail::block_moment(family, j, k);
    const double factorial = k == 2 ? 2.0 : 6.0;
    d.I = factorial * scale * std::pow(s2, k);
    const double paired_total = scale * (sums.paired.value() + sums.repeated.value());
    d.error_i = paired_total - d.I;
    d.error_ii = scale * sums.partial.value();
    d.II = scale * sums.pair_free.value();
    if (k == 2) d.III = d.error_i;
    d.counts = sums.counts;
    return d;
}

/// II_j^{(2)} via the pair convolution C(s) = sum_{n1 + n2 = s} g_{n1} g_{n2}:
/// sum_s |C(s)|^2 minus the paired classes, in O(#S_j^2).
inline double pair_free_sum_fast(const GaussianFamily& family, int j)
{
    const auto table = detail::make_shell_table(family, j);
    const int r = shell_range(j).hi_inclusive;
    std::vector<cplx> conv(static_cast<std::size_t>(4 * r + 1));
    double s2 = 0.0, s4 = 0.0;
    const auto S = table.freqs.size();
    for (std::size_t a = 0; a < S; ++a) {
        const double w = std::norm(table.values[a]);
        s2 += w;
        s4 += w * w;
        for (std::size_t b = 0; b < S; ++b)
            conv[static_cast<std::size_t>(table.freqs[a] + table.freqs[b] + 2 * r)] += table.values[a] * table.values[b];
    }
    detail::CompensatedSum total;
    for (const auto& c : conv) total.add(std::norm(c));
    total.add(-2.0 * s2 * s2);
    total.add(s4);
    return std::exp2(-2.0 * j) * total.value();
}

/// F_j = 2^{-j} sum_{S_j} |g_n|^{2k} split into Wiener chaos components of order 2l.
inline std::vector<std::pair<int, double>> chaos_project_F(const GaussianFamily& family, int j, int k)
{
    require(k == 1 || k == 2, ErrorKind::UnsupportedOrder, "chaos projection supports k in {1, 2}");
    const auto values = shell_values(family, j);
    const double ratio = shell_ratio(j);
    double w1 = 0.0, w2 = 0.0;
    for (const auto& g : values) {
        w1 += wick_abs2n(g, 1);
        if (k == 2) w2 += wick_abs2n(g, 2);
    }
    w1 = std::ldexp(w1, -j);
    w2 = std::ldexp(w2, -j);
    if (k == 1) return {{0, 2.0 * ratio}, {1, w1}};
    return {{0, 8.0 * ratio}, {1, 8.0 * w1}, {2, w2}};
}

struct HypercontractivityReport {
    int order = 0;
    double q = 0.0;
    double ratio = 0.0; ///< ||F||_q / ||F||_2
    double bound = 0.0; ///< (q - 1)^{order / 2}
    double rel_se = 0.0;
    std::size_t samples = 0;
    bool pass = false;
};

inline constexpr std::size_t kMinHypercontractivitySamples = 10'000;

/// Compares the empirical L^q / L^2 ratio of chaos-order-n samples with
/// (q - 1)^{n/2}, allowing five delta-method standard errors.
inline HypercontractivityReport hypercontractivity_check(std::span<const double> samples, int order, double q)
{
    require(samples.size() >= kMinHypercontractivitySamples, ErrorKind::InsufficientSamples,
            "hypercontractivity check needs at least 10^4 samples");
    require(q >= 2.0 && order >= 0, ErrorKind::InvalidArgument, "requires q >= 2 and order >= 0");

    const double n = static_cast<double>(samples.size());
    double a = 0.0, b = 0.0;
    for (double f : samples) {
        a += std::pow(std::abs(f), q);
        b += f * f;
    }
    a /= n;
    b /= n;

    HypercontractivityReport rep;
    rep.order = order;
    rep.q = q;
    rep.samples = samples.size();
    rep.bound = std::pow(q - 1.0, 0.5 * order);
    if (b == 0.0) {
        rep.pass = true;
        return rep;
    }
    rep.ratio = std::pow(a, 1.0 / q) / std::sqrt(b);

    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (double f : samples) {
        const double da = std::pow(std::abs(f), q) - a;
        const double db = f * f - b;
        var_a += da * da;
        var_b += db * db;
        cov += da * db;
    }
    var_a /= n - 1.0;
    var_b /= n - 1.0;
    cov /= n - 1.0;
    const double var_log = (var_a / (q * q * a * a) + var_b / (4.0 * b * b) - cov / (q * a * b)) / n;
    rep.rel_se = std::sqrt(std::max(0.0, var_log));
    rep.pass = rep.ratio <= rep.bound * (1.0 + 5.0 * rep.rel_se) * (1.0 + 1e-12);
    return rep;
}

} // namespace bmreg
