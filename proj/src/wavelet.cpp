#include "jumpscatter/wavelet.hpp"

#include "jumpscatter/stats.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

namespace jumpscatter {

namespace {

constexpr double kPi = std::numbers::pi;
// Frequency samples on (0, pi] used to synthesize each filter.
constexpr int kSynthesisGrid = 4096;
// Periodization terms kept in the spline autocorrelation sum.
constexpr int kPeriodizationTerms = 128;

Eigen::FFT<double>& thread_fft() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}

double ipow(double x, int n) {
    double r = 1.0;
    for (; n > 0; n >>= 1, x *= x)
        if (n & 1) r *= x;
    return r;
}

// A(theta) = sum_k beta_hat(theta + 2 k pi)^2 with beta_hat the B-spline spectrum.
double spline_autocorrelation(double theta, int n) {
    // A is 2 pi periodic; fold first so the dominant terms are inside the sum.
    theta = std::remainder(theta, 2.0 * kPi);
    const double s = std::sin(0.5 * theta);
    double total = 0.0;
    for (int k = -kPeriodizationTerms; k <= kPeriodizationTerms; ++k) {
        const double u = 0.5 * theta + k * kPi;
        const double ratio = std::abs(u) < 1e-12 ? 1.0 : s / u;
        total += ipow(ratio, n);
    }
    return total;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<Complex> spectrum_of(std::span<const double> x, std::size_t fft_size) {
    std::vector<Complex> padded(fft_size, Complex{0.0, 0.0});
    for (std::size_t i = 0; i < x.size(); ++i) padded[i] = x[i];
    std::vector<Complex> out;
    thread_fft().fwd(out, padded);
    return out;
}

std::vector<Complex> apply_filter(const std::vector<Complex>& x_spectrum, const FilterBank& bank, int j) {
    const auto& filt = bank.reversed_spectra[static_cast<std::size_t>(j - 1)];
    std::vector<Complex> prod(x_spectrum.size());
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = x_spectrum[k] * filt[k];
    std::vector<Complex> time;
    thread_fft().inv(time, prod);
    time.resize(static_cast<std::size_t>(bank.length()));
    return time;
}

double rms(const std::vector<Complex>& v) {
    double ss = 0.0;
    for (const auto& c : v) ss += std::norm(c);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

// Even/odd pair of handcrafted filters built from a smooth one-sided bump.
void build_handcrafted(FilterBank& bank) {
    const int T = bank.length();
    const int half = bank.half;
    const int support = std::min(bank.config.handcrafted_support, half);
    if (support < 1) throw ConfigError("handcrafted filter support must be at least one minute");
    std::vector<double> bump(static_cast<std::size_t>(support) + 1, 0.0);  // bump[s], s = |t|
    for (int s = 1; s <= support; ++s) {
        const double c = std::cos(0.5 * kPi * (s - 1) / support);
        bump[static_cast<std::size_t>(s)] = c * c;
    }
    double bump_mean = 0.0;
    for (int s = 1; s <= support; ++s) bump_mean += bump[static_cast<std::size_t>(s)];
    bump_mean /= support;

    bank.mr_filter.assign(static_cast<std::size_t>(T), 0.0);
    bank.tr_filter.assign(static_cast<std::size_t>(T), 0.0);
    for (int s = 1; s <= support; ++s) {
        const double h = bump[static_cast<std::size_t>(s)];
        bank.mr_filter[static_cast<std::size_t>(half - s)] = h;
        bank.mr_filter[static_cast<std::size_t>(half + s)] = -h;
        bank.tr_filter[static_cast<std::size_t>(half - s)] = h - bump_mean;
        bank.tr_filter[static_cast<std::size_t>(half + s)] = h - bump_mean;
    }
    for (auto* f : {&bank.mr_filter, &bank.tr_filter}) {
        double ss = 0.0;
        for (double v : *f) ss += v * v;
        const double norm = std::sqrt(ss);
        if (norm == 0.0) throw ConfigError("handcrafted filter is identically zero");
        for (double& v : *f) v /= norm;
    }
}

}  // namespace

std::string to_string(BoundaryMode b) { return b == BoundaryMode::Zero ? "zero" : "circular"; }

BoundaryMode parse_boundary(std::string_view text) {
    if (text == "zero") return BoundaryMode::Zero;
    if (text == "circular") return BoundaryMode::Circular;
    throw ConfigError("unknown boundary mode '" + std::string(text) + "' (expected zero|circular)");
}

double battle_lemarie_modulus(double omega, int order) {
    if (order < 0) throw ConfigError("spline order must be non-negative");
    omega = std::abs(omega);
    if (omega == 0.0) return 0.0;
    const int n = 2 * order + 2;
    const double q = 0.25 * omega;
    const double s = std::sin(q);
    // |psi_hat|^2 = sin(w/4)^(2n) / (w/4)^n * A(w/2 + pi) / (A(w) A(w/2)).
    const double num = ipow(s * s, n) / ipow(q, n) * spline_autocorrelation(0.5 * omega + kPi, n);
    const double den = spline_autocorrelation(omega, n) * spline_autocorrelation(0.5 * omega, n);
    return std::sqrt(num / den);
}

FilterBank build_filter_bank(const FilterBankConfig& cfg) {
    if (cfg.scales < 1) throw ConfigError("number of scales must be at least 1");
    if (cfg.length < 3 || cfg.length % 2 == 0) throw ConfigError("window length must be odd and >= 3");
    if (cfg.scales >= 31 || (1L << cfg.scales) > cfg.length)
        throw ScaleOverflowError("2^J = 2^" + std::to_string(cfg.scales) + " exceeds the window length " +
                                 std::to_string(cfg.length));

    FilterBank bank;
    bank.config = cfg;
    bank.half = (cfg.length - 1) / 2;
    const int T = cfg.length;
    const int half = bank.half;

    // Sample the analytic spectrum on (0, pi] and synthesize t >= 0 directly;
    // negative times follow from psi(-t) = conj(psi(t)).
    const int M = kSynthesisGrid;
    bank.wavelets.resize(static_cast<std::size_t>(cfg.scales));
    std::vector<double> spectrum(static_cast<std::size_t>(M) + 1);
    for (int j = 1; j <= cfg.scales; ++j) {
        const double dilation = std::ldexp(1.0, j);
        for (int k = 1; k <= M; ++k) {
            const double omega = kPi * k / M;
            const double weight = (k == M) ? 0.5 : 1.0;
            spectrum[static_cast<std::size_t>(k)] =
                weight * 2.0 * dilation * battle_lemarie_modulus(dilation * omega, cfg.spline_order);
        }
        auto& psi = bank.wavelets[static_cast<std::size_t>(j - 1)];
        psi.assign(static_cast<std::size_t>(T), Complex{});
        for (int t = 0; t <= half; ++t) {
            double re = 0.0, im = 0.0;
            for (int k = 1; k <= M; ++k) {
                const double phase = kPi * k * t / M;
                re += spectrum[static_cast<std::size_t>(k)] * std::cos(phase);
                im += spectrum[static_cast<std::size_t>(k)] * std::sin(phase);
            }
            // (1 / 2pi) * integral over (0, pi] with step pi / M.
            const double scale = 1.0 / (2.0 * M);
            psi[static_cast<std::size_t>(half + t)] = Complex{re * scale, t == 0 ? 0.0 : im * scale};
        }
        for (int t = 1; t <= half; ++t)
            psi[static_cast<std::size_t>(half - t)] = std::conj(psi[static_cast<std::size_t>(half + t)]);
        // Truncation to the window leaves a small DC offset in the even part.
        double dc = 0.0;
        for (const auto& v : psi) dc += v.real();
        dc /= T;
        for (auto& v : psi) v -= dc;
        // Restore exact parity after the shift.
        for (int t = 1; t <= half; ++t)
            psi[static_cast<std::size_t>(half - t)] = std::conj(psi[static_cast<std::size_t>(half + t)]);
    }

    build_handcrafted(bank);

    bank.fft_size = cfg.boundary == BoundaryMode::Zero ? next_pow2(static_cast<std::size_t>(2 * T - 1))
                                                       : static_cast<std::size_t>(T);
    const auto N = bank.fft_size;
    bank.reversed_spectra.resize(static_cast<std::size_t>(cfg.scales));
    for (int j = 1; j <= cfg.scales; ++j) {
        const auto& psi = bank.wavelets[static_cast<std::size_t>(j - 1)];
        std::vector<Complex> reversed(N, Complex{});
        for (int u = -half; u <= half; ++u) {
            // reversed(u) = psi(-u), stored at u mod N.
            const auto pos = static_cast<std::size_t>((u % static_cast<long>(N) + static_cast<long>(N)) % static_cast<long>(N));
            reversed[pos] += psi[static_cast<std::size_t>(half - u)];
        }
        thread_fft().fwd(bank.reversed_spectra[static_cast<std::size_t>(j - 1)], reversed);
    }
    return bank;
}

template <class Sample>
Complex convolve_at(std::span<const Sample> x, std::span<const Complex> psi, int t, BoundaryMode boundary) {
    const int T = static_cast<int>(x.size());
    const int half_x = (T - 1) / 2;
    const int half_psi = (static_cast<int>(psi.size()) - 1) / 2;
    Complex acc{0.0, 0.0};
    for (int u = -half_psi; u <= half_psi; ++u) {
        int idx = t + u + half_x;
        if (boundary == BoundaryMode::Circular) {
            idx = ((idx % T) + T) % T;
        } else if (idx < 0 || idx >= T) {
            continue;
        }
        acc += Complex(x[static_cast<std::size_t>(idx)]) * psi[static_cast<std::size_t>(u + half_psi)];
    }
    return acc;
}

template <class Sample>
std::vector<Complex> convolve_direct(std::span<const Sample> x, std::span<const Complex> psi, BoundaryMode boundary) {
    const int T = static_cast<int>(x.size());
    const int half = (T - 1) / 2;
    std::vector<Complex> out(x.size());
    for (int t = -half; t <= half; ++t) out[static_cast<std::size_t>(t + half)] = convolve_at(x, psi, t, boundary);
    return out;
}

template Complex convolve_at<double>(std::span<const double>, std::span<const Complex>, int, BoundaryMode);
template Complex convolve_at<Complex>(std::span<const Complex>, std::span<const Complex>, int, BoundaryMode);
template std::vector<Complex> convolve_direct<double>(std::span<const double>, std::span<const Complex>, BoundaryMode);
template std::vector<Complex> convolve_direct<Complex>(std::span<const Complex>, std::span<const Complex>, BoundaryMode);

std::vector<Complex> convolve_fast(std::span<const double> x, const FilterBank& bank, int j) {
    if (static_cast<int>(x.size()) != bank.length()) throw DataError("convolve_fast: input length does not match the bank");
    if (j < 1 || j > bank.scales()) throw ConfigError("convolve_fast: scale index out of range");
    return apply_filter(spectrum_of(x, bank.fft_size), bank, j);
}

std::vector<double> ScatterEmbedding::flat() const {
    std::vector<double> out;
    out.reserve(2 * (first_order.size() + second_order.size()));
    for (const auto& c : first_order) out.push_back(c.real());
    for (const auto& c : second_order) out.push_back(c.real());
    for (const auto& c : first_order) out.push_back(c.imag());
    for (const auto& c : second_order) out.push_back(c.imag());
    return out;
}

std::size_t second_order_index(int j1, int j2, int scales) {
    if (j1 < 1 || j2 <= j1 || j2 > scales) throw std::out_of_range("second_order_index: need 1 <= j1 < j2 <= J");
    std::size_t offset = 0;
    for (int a = 1; a < j1; ++a) offset += static_cast<std::size_t>(scales - a);
    return offset + static_cast<std::size_t>(j2 - j1 - 1);
}

std::vector<std::size_t> imaginary_second_order_indices(int scales) {
    const auto J = static_cast<std::size_t>(scales);
    const auto n2 = second_order_count(scales);
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < n2; ++k) idx.push_back(J + n2 + J + k);
    return idx;
}

namespace {

ScatterEmbedding embed_once(std::span<const double> window, const FilterBank& bank) {
    const int J = bank.scales();
    const int half = bank.half;
    if (static_cast<int>(window.size()) != bank.length())
        throw DataError("embed: window has " + std::to_string(window.size()) + " samples, bank expects " +
                        std::to_string(bank.length()));
    const double sign = window[static_cast<std::size_t>(half)] < 0.0 ? -1.0 : 1.0;

    ScatterEmbedding emb;
    emb.scales = J;
    const auto x_spectrum = spectrum_of(window, bank.fft_size);
    std::vector<std::vector<double>> modulus(static_cast<std::size_t>(J));
    for (int j = 1; j <= J; ++j) {
        const auto w = apply_filter(x_spectrum, bank, j);
        const double sigma = rms(w);
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw DegenerateWindowError("zero wavelet volatility at scale j=" + std::to_string(j));
        // W_j xbar = sign * W_j x since the transform is linear.
        emb.first_order.push_back(sign * w[static_cast<std::size_t>(half)] / sigma);
        emb.sigma_first.push_back(sigma);
        auto& m = modulus[static_cast<std::size_t>(j - 1)];
        m.resize(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) m[i] = std::abs(w[i]);
    }
    for (int j1 = 1; j1 <= J; ++j1) {
        const auto u_spectrum = spectrum_of(modulus[static_cast<std::size_t>(j1 - 1)], bank.fft_size);
        for (int j2 = j1 + 1; j2 <= J; ++j2) {
            const auto v = apply_filter(u_spectrum, bank, j2);
            const double sigma = rms(v);
            if (!(sigma > 0.0) || !std::isfinite(sigma))
                throw DegenerateWindowError("zero scattering volatility at (j1, j2)=(" + std::to_string(j1) + ", " +
                                            std::to_string(j2) + ")");
            emb.second_order.push_back(v[static_cast<std::size_t>(half)] / sigma);
            emb.sigma_second.push_back(sigma);
        }
    }
    return emb;
}

}  // namespace

ScatterEmbedding embed(std::span<const double> window, const FilterBank& bank) {
    // Symmetrize over time reversal: a no-op in exact arithmetic, and it makes
    // the reversal covariance (real part even, imaginary part odd) hold bitwise.
    std::vector<double> reversed(window.rbegin(), window.rend());
    auto a = embed_once(window, bank);
    const auto b = embed_once(reversed, bank);
    auto mix = [](std::vector<Complex>& x, const std::vector<Complex>& y) {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = {0.5 * (x[i].real() + y[i].real()), 0.5 * (x[i].imag() - y[i].imag())};
    };
    mix(a.first_order, b.first_order);
    mix(a.second_order, b.second_order);
    for (std::size_t i = 0; i < a.sigma_first.size(); ++i) a.sigma_first[i] = 0.5 * (a.sigma_first[i] + b.sigma_first[i]);
    for (std::size_t i = 0; i < a.sigma_second.size(); ++i)
        a.sigma_second[i] = 0.5 * (a.sigma_second[i] + b.sigma_second[i]);
    return a;
}

ScatterEmbedding embed(const JumpEvent& event, const FilterBank& bank) { return embed(event.window, bank); }

std::size_t embed_all(std::vector<JumpEvent>& events, const FilterBank& bank, unsigned threads) {
    std::atomic<std::size_t> degenerate{0};
    parallel_for(events.size(), threads, [&](std::size_t i) {
        try {
            events[i].embedding = embed(events[i], bank).flat();
        } catch (const DegenerateWindowError&) {
            events[i].embedding.reset();
            ++degenerate;
        }
    });
    return degenerate.load();
}

}  // namespace jumpscatter
