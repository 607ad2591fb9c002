#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "blocksim/rng.hpp"

// Samplers, probability functions and maximum-likelihood estimators for the
// distribution families used by the block model: Poisson and its
// positive-truncated variant, the geometric truncated to a finite support,
// the interval-truncated Gaussian, the binomial ratio, and the
// (weight + 1)-proportional attachment pick.
namespace blocksim::dist {

inline constexpr std::uint64_t kUnbounded = std::numeric_limits<std::uint64_t>::max();

// ---------------------------------------------------------------------------
// standard normal helpers

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Inverse standard normal CDF: Acklam's rational approximation refined with
// one Halley step, accurate to ~1e-15 over (0, 1).
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("norm_quantile: p must be in (0,1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};

    constexpr double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley refinement
    const double e = norm_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

// ---------------------------------------------------------------------------
// Poisson on {0,1,...}

inline double pois_pmf(double lambda, std::uint64_t n) {
    if (lambda <= 0.0) throw std::invalid_argument("pois_pmf: lambda must be positive");
    return std::exp(static_cast<double>(n) * std::log(lambda) - lambda -
                    std::lgamma(static_cast<double>(n) + 1.0));
}

// sequential inversion; adequate for the lambdas the model works with (< ~600)
inline std::uint64_t pois_sample(double lambda, Rng& rng) {
    if (lambda <= 0.0) throw std::invalid_argument("pois_sample: lambda must be positive");
    const double u = rng.next_double();
    double pmf = std::exp(-lambda);
    double cdf = pmf;
    std::uint64_t n = 0;
    while (u >= cdf && n < 100000) {
        ++n;
        pmf *= lambda / static_cast<double>(n);
        cdf += pmf;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Poisson truncated to {1,2,...}: pmf(n) = lambda^n / (n! (e^lambda - 1))

inline double tpois_pmf(double lambda, std::uint64_t n) {
    if (lambda <= 0.0) throw std::invalid_argument("tpois_pmf: lambda must be positive");
    if (n == 0) return 0.0;
    // log-space keeps large lambda / large n finite
    const double log_num = static_cast<double>(n) * std::log(lambda) -
                           std::lgamma(static_cast<double>(n) + 1.0);
    const double log_den = lambda + std::log1p(-std::exp(-lambda));  // log(e^l - 1)
    return std::exp(log_num - log_den);
}

// mean of the truncated law: lambda / (1 - e^-lambda)
inline double tpois_mean(double lambda) { return lambda / -std::expm1(-lambda); }

inline std::uint64_t tpois_sample(double lambda, Rng& rng) {
    if (lambda <= 0.0) throw std::invalid_argument("tpois_sample: lambda must be positive");
    const double u = rng.next_double();
    double pmf = tpois_pmf(lambda, 1);
    double cdf = pmf;
    std::uint64_t n = 1;
    while (u >= cdf && n < 100000) {
        ++n;
        pmf *= lambda / static_cast<double>(n);
        cdf += pmf;
    }
    return n;
}

// Solves mean(lambda) = m by bisection on [1e-9, 700] to |mean - m| < 1e-10.
// A sample mean <= 1 is the degenerate point mass at 1; reported as lambda = 0.
inline double tpois_mle_from_mean(double m) {
    if (m <= 1.0) return 0.0;
    double lo = 1e-9, hi = 700.0;
    if (m >= tpois_mean(hi)) return m;  // truncation is below double resolution here
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = tpois_mean(mid) - m;
        if (std::abs(f) < 1e-10) return mid;
        (f < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double tpois_mle(std::span<const std::uint64_t> sample) {
    if (sample.empty()) throw std::invalid_argument("tpois_mle: empty sample");
    long double sum = 0.0L;
    for (std::uint64_t n : sample) {
        if (n < 1) throw std::invalid_argument("tpois_mle: sample values must be >= 1");
        sum += static_cast<long double>(n);
    }
    return tpois_mle_from_mean(static_cast<double>(sum / static_cast<long double>(sample.size())));
}

// ---------------------------------------------------------------------------
// geometric with success probability p truncated to {1..k_max}
// pmf(u) = p (1-p)^(u-1) / (1 - (1-p)^k_max);  k_max = kUnbounded for the
// plain geometric.

inline double bgeom_pmf(double p, std::uint64_t k_max, std::uint64_t u) {
    if (p <= 0.0 || p > 1.0) throw std::invalid_argument("bgeom_pmf: p must be in (0,1]");
    if (k_max < 1) throw std::invalid_argument("bgeom_pmf: k_max must be >= 1");
    if (u < 1 || u > k_max) return 0.0;
    if (p == 1.0) return u == 1 ? 1.0 : 0.0;
    const double lq = std::log1p(-p);
    const double norm = k_max == kUnbounded ? 1.0 : -std::expm1(static_cast<double>(k_max) * lq);
    return p * std::exp(static_cast<double>(u - 1) * lq) / norm;
}

inline std::uint64_t bgeom_sample(double p, std::uint64_t k_max, Rng& rng) {
    if (p <= 0.0 || p > 1.0) throw std::invalid_argument("bgeom_sample: p must be in (0,1]");
    if (k_max < 1) throw std::invalid_argument("bgeom_sample: k_max must be >= 1");
    if (p == 1.0 || k_max == 1) return 1;
    const double lq = std::log1p(-p);
    const double norm = k_max == kUnbounded ? 1.0 : -std::expm1(static_cast<double>(k_max) * lq);
    const double u = rng.next_double();
    // inverse CDF: smallest n with 1 - q^n >= u * norm
    const double n = std::floor(std::log1p(-u * norm) / lq) + 1.0;
    auto v = static_cast<std::uint64_t>(std::max(1.0, n));
    return k_max == kUnbounded ? v : std::min(v, k_max);
}

// one observation of the truncated geometric with its per-sample support bound
struct BoundedCount {
    std::uint64_t u;
    std::uint64_t k_max;
};

// MLE of p by golden-section over (0,1]; the per-sample truncation makes the
// closed form invalid. Samples with k_max = 1 carry no information and drop
// out of the likelihood identically.
inline double bgeom_mle(std::span<const BoundedCount> samples) {
    if (samples.empty()) throw std::invalid_argument("bgeom_mle: empty sample");
    std::uint64_t n = 0;
    long double sum_excess = 0.0L;
    std::unordered_map<std::uint64_t, std::uint64_t> kmax_hist;
    bool all_ones = true;
    for (const auto& s : samples) {
        if (s.u < 1 || s.k_max < 1 || s.u > s.k_max)
            throw std::invalid_argument("bgeom_mle: sample outside its support");
        ++n;
        sum_excess += static_cast<long double>(s.u - 1);
        if (s.k_max != kUnbounded) ++kmax_hist[s.k_max];
        if (s.u > 1) all_ones = false;
    }
    if (all_ones) return 1.0;

    const std::uint64_t n_unbounded =
        n - [&] {
            std::uint64_t b = 0;
            for (const auto& [k, c] : kmax_hist) b += c;
            return b;
        }();

    const auto nll = [&](double p) {
        const double lq = std::log1p(-p);
        long double v = -static_cast<long double>(n) * std::log(p) -
                        sum_excess * static_cast<long double>(lq);
        for (const auto& [k, c] : kmax_hist) {
            v += static_cast<long double>(c) *
                 std::log(-std::expm1(static_cast<double>(k) * lq));
        }
        (void)n_unbounded;  // unbounded samples have unit normalizer
        return static_cast<double>(v);
    };

    constexpr double inv_phi = 0.6180339887498949;
    double a = 1e-9, b = 1.0 - 1e-12;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = nll(x1), f2 = nll(x2);
    while (b - a > 1e-8) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = nll(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = nll(x2);
        }
    }
    return 0.5 * (a + b);
}

// plain geometric MLE (no truncation): p = n / sum(u)
inline double geom_mle(std::span<const std::uint64_t> sample) {
    if (sample.empty()) throw std::invalid_argument("geom_mle: empty sample");
    long double sum = 0.0L;
    for (std::uint64_t u : sample) {
        if (u < 1) throw std::invalid_argument("geom_mle: sample values must be >= 1");
        sum += static_cast<long double>(u);
    }
    return static_cast<double>(static_cast<long double>(sample.size()) / sum);
}

// ---------------------------------------------------------------------------
// Gaussian truncated to [a, b]

inline double tgauss_pdf(double mu, double sigma, double a, double b, double x) {
    if (!(a < b) || sigma <= 0.0) throw std::invalid_argument("tgauss_pdf: bad support or sigma");
    if (x < a || x > b) return 0.0;
    const double za = (a - mu) / sigma, zb = (b - mu) / sigma;
    const double mass = norm_cdf(zb) - norm_cdf(za);
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI) * mass);
}

inline double tgauss_sample(double mu, double sigma, double a, double b, Rng& rng) {
    if (!(a < b)) throw std::invalid_argument("tgauss_sample: empty interval");
    if (sigma <= 0.0) throw std::invalid_argument("tgauss_sample: sigma must be positive");
    const double za = (a - mu) / sigma, zb = (b - mu) / sigma;
    const double pa = norm_cdf(za), pb = norm_cdf(zb);
    if (!(pb - pa > 1e-300)) {
        // interval is deep in one tail; essentially all mass sits at the
        // boundary nearest the mode
        return zb <= 0.0 ? b : a;
    }
    const double u = pa + rng.next_double_pos() * (pb - pa);
    const double x = mu + sigma * norm_quantile(std::min(std::max(u, 1e-300), 1.0 - 1e-16));
    return std::clamp(x, a, b);
}

// Pooled method-of-moments fit. Ignores the per-sample truncation intervals,
// which is accurate when the supports are wide relative to (mu, sigma).
inline std::pair<double, double> tgauss_fit_moments(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("tgauss_fit_moments: empty sample");
    long double s = 0.0L, s2 = 0.0L;
    for (double x : samples) {
        s += x;
        s2 += static_cast<long double>(x) * x;
    }
    const auto n = static_cast<long double>(samples.size());
    const double mean = static_cast<double>(s / n);
    const double var = std::max(0.0, static_cast<double>(s2 / n) - mean * mean);
    return {mean, std::sqrt(var)};
}

// ---------------------------------------------------------------------------
// binomial success-rate MLE (closed form)

inline double binom_ratio_mle(std::uint64_t successes, std::uint64_t trials) {
    if (trials == 0) throw std::invalid_argument("binom_ratio_mle: zero trials");
    if (successes > trials) throw std::invalid_argument("binom_ratio_mle: successes > trials");
    return static_cast<double>(successes) / static_cast<double>(trials);
}

inline std::uint64_t binom_sample(std::uint64_t trials, double p, Rng& rng) {
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < trials; ++i) k += rng.bernoulli(p) ? 1 : 0;
    return k;
}

// ---------------------------------------------------------------------------
// attachment pick: P(i) = (w_i + 1) / sum_j (w_j + 1)

inline std::size_t weighted_pick(std::span<const std::int64_t> weights, Rng& rng) {
    if (weights.empty()) throw std::invalid_argument("weighted_pick: empty weight vector");
    std::int64_t total = 0;
    for (std::int64_t w : weights) {
        if (w < 0) throw std::invalid_argument("weighted_pick: negative weight");
        total += w + 1;
    }
    auto x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        x -= weights[i] + 1;
        if (x < 0) return i;
    }
    return weights.size() - 1;  // unreachable
}

}  // namespace blocksim::dist
