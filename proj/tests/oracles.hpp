#pragma once

// Test-only reference implementations. They deliberately avoid the library's
// code paths (no FFT, no Eigen, no shared helpers) so that agreement means
// something.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// sum_u x(t + u) psi(u) on centered grids of odd length, zero outside.
inline std::complex<double> correlate_at(const std::vector<double>& x, const std::vector<std::complex<double>>& psi,
                                         int t) {
    const int hx = static_cast<int>(x.size()) / 2;
    const int hp = static_cast<int>(psi.size()) / 2;
    std::complex<double> acc = 0.0;
    for (int u = -hp; u <= hp; ++u) {
        const int k = t + u;
        if (k < -hx || k > hx) continue;
        acc += x[static_cast<std::size_t>(k + hx)] * psi[static_cast<std::size_t>(u + hp)];
    }
    return acc;
}

/// Leading eigenvector of a symmetric matrix by power iteration with a shift.
inline std::vector<double> power_iteration(const std::vector<std::vector<double>>& a, int iterations = 20000) {
    const std::size_t n = a.size();
    double shift = 0.0;
    for (const auto& row : a)
        for (double v : row) shift = std::max(shift, std::abs(v));
    shift *= static_cast<double>(n);
    std::vector<double> v(n, 1.0), w(n);
    for (std::size_t i = 0; i < n; ++i) v[i] += 0.01 * static_cast<double>(i);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = shift * v[i];
            for (std::size_t k = 0; k < n; ++k) w[i] += a[i][k] * v[k];
        }
        double norm = 0.0;
        for (double e : w) norm += e * e;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    return v;
}

/// Kolmogorov-Smirnov statistic against Exp(rate) and its asymptotic p-value.
inline double ks_exponential_pvalue(std::vector<double> x, double rate) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = 1.0 - std::exp(-rate * x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

/// Exact discrete sample with P(S) proportional to S^{-1-tau} on [1, s_max],
/// by inversion of the tabulated CDF.
inline std::vector<std::uint64_t> zipf_sample(double tau, std::size_t n, std::uint64_t s_max, std::uint64_t seed) {
    std::vector<double> cdf(s_max);
    double acc = 0.0;
    for (std::uint64_t s = 1; s <= s_max; ++s) {
        acc += std::pow(static_cast<double>(s), -1.0 - tau);
        cdf[s - 1] = acc;
    }
    for (double& c : cdf) c /= acc;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::uint64_t> out(n);
    for (auto& s : out) s = static_cast<std::uint64_t>(std::lower_bound(cdf.begin(), cdf.end(), u(rng)) - cdf.begin()) + 1;
    return out;
}

/// Borel distribution: total progeny of a Poisson(mu) Galton-Watson tree.
inline double borel_pmf(std::uint64_t s, double mu) {
    const double sd = static_cast<double>(s);
    return std::exp(-mu * sd + (sd - 1.0) * std::log(mu * sd) - std::lgamma(sd + 1.0));
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Random 119-point window of standard normals, fixed seed per call site.
inline std::vector<double> gaussian_window(std::mt19937_64& rng, int length = 119) {
    std::normal_distribution<double> z;
    std::vector<double> w(static_cast<std::size_t>(length));
    for (double& v : w) v = z(rng);
    return w;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
}

}  // namespace oracle
