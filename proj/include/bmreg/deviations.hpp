#pragma once

// Large-deviation tools: the Cramer transform of |g|^2, Chernoff bounds for
// shell averages, Monte Carlo tail curves with a Gaussian-exponent fit, tail
// checks for chaos components, and the high-frequency measurability probe.
//
// The moment generating function of |g|^2 (an exponential with mean 2) is
// 1 / (1 - 2 lambda); no extra 1 / (2 pi) normalization appears here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bmreg/error.hpp"
#include "bmreg/lattice.hpp"
#include "bmreg/norms.hpp"
#include "bmreg/parallel.hpp"
#include "bmreg/rng.hpp"
#include "bmreg/spectral.hpp"

namespace bmreg {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for k successes out of n (z = 1.96).
inline Interval wilson_interval(std::size_t k, std::size_t n, double z = 1.96)
{
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct CramerReport {
    double a = 0.0;
    double lambda_star = 0.0;
    double H = 0.0;
    double H_numeric = 0.0; ///< golden-section maximum of a lambda + ln(1 - 2 lambda)
    double count = 1.0;
    double bound = 1.0;     ///< exp(-count * H)
};

/// Cramer transform of |g|^2 at level a >= 2 = E|g|^2.
inline CramerReport cramer_chi2(double a, double count = 1.0)
{
    require(a >= 2.0, ErrorKind::BelowMean, "Cramer transform of |g|^2 needs a >= 2");
    CramerReport r;
    r.a = a;
    r.count = count;
    r.lambda_star = (a - 2.0) / (2.0 * a);
    r.H = (a - 2.0) / 2.0 + std::log(2.0 / a);

    auto objective = [a](double l) { return a * l + std::log1p(-2.0 * l); };
    double lo = 0.0, hi = 0.5 - 1e-15;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        }
    }
    r.H_numeric = std::max({objective(lo), f1, f2, 0.0});
    r.bound = std::exp(-count * r.H);
    return r;
}

/// Chernoff bound for P(2^{-j} sum_{S_j} |g_n|^2 > K^2) (d = 1).
inline double chernoff_shell_bound(int j, double K)
{
    const double size = static_cast<double>(shell_size_1d(j));
    const double level = std::exp2(j) * K * K / size;
    require(level >= 2.0, ErrorKind::BelowMean, "K^2 is below the shell mean 2 #S_j / 2^j");
    return cramer_chi2(level, size).bound;
}

struct TailBin {
    double K = 0.0;
    std::size_t count = 0;
    double prob = 0.0;
    Interval ci;
    bool retained = false;
};

struct TailEstimate {
    std::string spec;
    int truncation = 0;
    double alpha = 1.0;
    std::size_t sample_count = 0;
    std::vector<TailBin> bins;
    std::optional<double> fitted_c;
    std::optional<double> fitted_b;
    std::optional<double> fit_r2;
};

struct TailOptions {
    double quantile_lo = 0.90;
    double quantile_hi = 0.999;
    int grid_points = 16;
    std::size_t min_exceedances = 50;
    int min_bins = 4;
};

inline constexpr std::size_t kMinTailSamples = 10'000;

/// Empirical tail curve of the given values on a K-grid spanning the
/// requested quantiles, with a count-weighted fit -log P = c K^2 + b.
inline TailEstimate tail_from_values(std::vector<double> values, const TailOptions& opt = {})
{
    require(!values.empty(), ErrorKind::InsufficientSamples, "no samples");
    require(opt.quantile_lo > 0.0 && opt.quantile_lo < opt.quantile_hi && opt.quantile_hi < 1.0,
            ErrorKind::InvalidArgument, "quantile range must satisfy 0 < lo < hi < 1");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return i + 1 < n ? values[i] * (1.0 - frac) + values[i + 1] * frac : values[i];
    };
    const double k_lo = quantile(opt.quantile_lo);
    const double k_hi = quantile(opt.quantile_hi);

    TailEstimate est;
    est.sample_count = n;
    for (int g = 0; g < opt.grid_points; ++g) {
        TailBin bin;
        bin.K = opt.grid_points == 1 ? k_lo : k_lo + (k_hi - k_lo) * g / (opt.grid_points - 1);
        const auto above = std::upper_bound(values.begin(), values.end(), bin.K);
        bin.count = static_cast<std::size_t>(values.end() - above);
        bin.prob = static_cast<double>(bin.count) / static_cast<double>(n);
        bin.ci = wilson_interval(bin.count, n);
        bin.retained = bin.count >= opt.min_exceedances && bin.count < n;
        est.bins.push_back(bin);
    }

    // Collapsed grids (all K equal) carry no slope information.
    std::vector<const TailBin*> kept;
    for (const auto& b : est.bins)
        if (b.retained && (kept.empty() || b.K > kept.back()->K)) kept.push_back(&b);
    if (static_cast<int>(kept.size()) < opt.min_bins) return est;

    double sw = 0, sx = 0, sy = 0;
    for (const auto* b : kept) {
        const double w = static_cast<double>(b->count);
        sw += w;
        sx += w * b->K * b->K;
        sy += w * -std::log(b->prob);
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto* b : kept) {
        const double w = static_cast<double>(b->count);
        const double dx = b->K * b->K - mx, dy = -std::log(b->prob) - my;
        sxx += w * dx * dx;
        sxy += w * dx * dy;
        syy += w * dy * dy;
    }
    if (sxx <= 0.0) return est;
    const double c = sxy / sxx;
    est.fitted_c = c;
    est.fitted_b = my - c * mx;
    est.fit_r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return est;
}

/// Norm values of independent paths u = sum g_n |n|^{-alpha} e^{int}; sample i
/// uses seed derive_seed(seed, i).
inline std::vector<double> sample_norms(const NormSpec& spec, double alpha, int N, std::size_t samples,
                                        std::uint64_t seed, unsigned workers)
{
    spec.validate();
    return parallel_map(samples, workers, [&](std::size_t i) {
        const auto fam = sample_family(rng::derive_seed(seed, i), spec.dim, N);
        return evaluate(spec, build_path(fam, alpha));
    });
}

inline TailEstimate tail_estimate(const NormSpec& spec, double alpha, int N, std::size_t samples, std::uint64_t seed,
                                  unsigned workers = 1, const TailOptions& opt = {})
{
    require(samples >= kMinTailSamples, ErrorKind::InsufficientSamples, "tail estimates need at least 10^4 samples");
    auto est = tail_from_values(sample_norms(spec, alpha, N, samples, seed, workers), opt);
    est.spec = spec.to_string();
    est.truncation = N;
    est.alpha = alpha;
    return est;
}

struct ChaosTailPoint {
    double lambda = 0.0;
    double empirical = 0.0;
    double se = 0.0;
    double predicted = 0.0; ///< C' exp(-c 2^{j/(2l)} lambda^{1/l})
    bool below = true;
};

struct ChaosTailReport {
    int order = 1; ///< l: the component lives in the chaos of order 2l
    int j = 0;
    std::size_t samples = 0;
    std::optional<double> c;
    std::optional<double> C_prime;
    std::optional<double> fitted_power; ///< gamma in -log P ~ a lambda^gamma
    std::vector<ChaosTailPoint> anchors;
    std::vector<ChaosTailPoint> checks;
    bool pass = true;
};

inline constexpr std::size_t kMinChaosTailSamples = 100'000;

/// Fits C' exp(-c 2^{j/(2l)} lambda^{1/l}) through the empirical tail of |F|
/// at its 0.9 and 0.99 quantiles, then checks that the tail beyond the
/// second anchor (up to 2x the first anchor and the 0.9999 quantile) stays
/// below the fitted curve within 3 binomial standard errors.
inline ChaosTailReport chaos_tail_check(std::span<const double> samples, int order, int j)
{
    require(samples.size() >= kMinChaosTailSamples, ErrorKind::InsufficientSamples,
            "chaos tail check needs at least 10^5 samples");
    require(order >= 1, ErrorKind::InvalidArgument, "chaos order must be >= 1");

    ChaosTailReport rep;
    rep.order = order;
    rep.j = j;
    rep.samples = samples.size();

    std::vector<double> mag(samples.size());
    std::transform(samples.begin(), samples.end(), mag.begin(), [](double x) { return std::abs(x); });
    std::sort(mag.begin(), mag.end());
    const double n = static_cast<double>(mag.size());
    if (mag.back() == 0.0) return rep;

    auto tail = [&](double lambda) {
        const auto above = std::upper_bound(mag.begin(), mag.end(), lambda);
        return static_cast<double>(mag.end() - above) / n;
    };
    auto quantile = [&](double q) { return mag[static_cast<std::size_t>(q * (n - 1))]; };
    const double scale = std::exp2(j / (2.0 * order));
    auto abscissa = [&](double lambda) { return scale * std::pow(lambda, 1.0 / order); };

    const double l1 = quantile(0.90), l2 = quantile(0.99);
    const double p1 = tail(l1), p2 = tail(l2);
    if (!(l2 > l1) || p1 <= 0.0 || p2 <= 0.0) return rep;

    const double c = (std::log(p1) - std::log(p2)) / (abscissa(l2) - abscissa(l1));
    const double log_cp = std::log(p1) + c * abscissa(l1);
    rep.c = c;
    rep.C_prime = std::exp(log_cp);
    auto predict = [&](double lambda) { return std::exp(log_cp - c * abscissa(lambda)); };
    auto point = [&](double lambda) {
        ChaosTailPoint pt;
        pt.lambda = lambda;
        pt.empirical = tail(lambda);
        pt.se = std::sqrt(std::max(pt.empirical * (1.0 - pt.empirical), 1.0 / n) / n);
        pt.predicted = predict(lambda);
        pt.below = pt.empirical <= pt.predicted + 3.0 * pt.se;
        return pt;
    };
    rep.anchors = {point(l1), point(l2)};

    std::vector<double> probes = {2.0 * l1};
    const double l_far = quantile(0.9999);
    for (int i = 1; i <= 4; ++i) probes.push_back(l2 + (l_far - l2) * i / 4.0);
    std::sort(probes.begin(), probes.end());
    for (double lambda : probes) {
        if (lambda <= l2) continue;
        rep.checks.push_back(point(lambda));
        rep.pass = rep.pass && rep.checks.back().below;
    }

    // Free power fit of log(-log P) against log lambda over the upper decile.
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 12; ++i) {
        const double q = 0.9 + (0.9995 - 0.9) * i / 12.0;
        const double lambda = quantile(q);
        const double p = tail(lambda);
        if (lambda > 0.0 && p > 0.0 && p < 1.0) pts.emplace_back(std::log(lambda), std::log(-std::log(p)));
    }
    if (pts.size() >= 3) {
        double mx = 0, my = 0;
        for (auto [x, y] : pts) {
            mx += x;
            my += y;
        }
        mx /= static_cast<double>(pts.size());
        my /= static_cast<double>(pts.size());
        double sxx = 0, sxy = 0;
        for (auto [x, y] : pts) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        if (sxx > 0.0) rep.fitted_power = sxy / sxx;
    }
    return rep;
}

struct ProbeResult {
    int M0 = 0;
    int truncation = 0;
    double eps = 0.0;
    std::size_t samples = 0;
    std::size_t exceed = 0;
    double probability = 0.0;
    Interval ci;
};

/// Monte Carlo estimate of P(||P_{>M0} u|| > eps), where P_{>M0} keeps the
/// frequencies M0 < |n| <= N of u = sum g_n |n|^{-alpha} e^{int}.
inline ProbeResult measurability_probe(const NormSpec& spec, double alpha, int M0, int N, double eps,
                                       std::size_t samples, std::uint64_t seed, unsigned workers = 1)
{
    spec.validate();
    require(spec.space == Space::FourierBesov || spec.fourier_lebesgue_like(), ErrorKind::InvalidArgument,
            "measurability probe expects a Fourier-Besov or Fourier-Lebesgue spec");
    require(M0 >= 2 && N > M0, ErrorKind::InvalidArgument, "probe requires 2 <= M0 < N");
    require(samples > 0, ErrorKind::InsufficientSamples, "probe needs samples");

    const auto exceeded = parallel_map(samples, workers, [&](std::size_t i) -> unsigned char {
        const auto fam = sample_band(rng::derive_seed(seed, i), spec.dim, M0, N);
        return evaluate(spec, build_path(fam, alpha)) > eps ? 1 : 0;
    });
    ProbeResult r;
    r.M0 = M0;
    r.truncation = N;
    r.eps = eps;
    r.samples = samples;
    for (auto e : exceeded) r.exceed += e;
    r.probability = static_cast<double>(r.exceed) / static_cast<double>(samples);
    r.ci = wilson_interval(r.exceed, samples);
    return r;
}

} // namespace bmreg
