#pragma once

#include "jumpscatter/event.hpp"

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace jumpscatter {

using Complex = std::complex<double>;

enum class BoundaryMode { Zero, Circular };

std::string to_string(BoundaryMode b);
BoundaryMode parse_boundary(std::string_view text);

struct FilterBankConfig {
    int scales{6};             // J
    int length{kWindowLength};  // T, odd; t runs over -(T-1)/2 .. (T-1)/2
    int spline_order{3};       // Battle-Lemarie spline order m
    BoundaryMode boundary{BoundaryMode::Zero};
    /// Half-support (minutes) of the handcrafted mean-reversion / trend filters.
    int handcrafted_support{8};
};

/// Complex wavelets psi_j (j = 1..J) sampled on the window grid, plus the two
/// real handcrafted filters. Immutable after construction.
///
/// Every sequence is stored with index i <-> t = i - half, so index `half`
/// is t = 0.
struct FilterBank {
    FilterBankConfig config;
    int half{0};
    std::vector<std::vector<Complex>> wavelets;  // [j-1][i]
    std::vector<double> mr_filter;               // odd, unit norm, zero at t = 0
    std::vector<double> tr_filter;               // even, unit norm, zero at t = 0

    // Spectral path: DFT of the time-reversed filters on the padded grid.
    std::size_t fft_size{0};
    std::vector<std::vector<Complex>> reversed_spectra;

    [[nodiscard]] int scales() const { return config.scales; }
    [[nodiscard]] int length() const { return config.length; }
};

/// |psi_hat(omega)| of the real, orthonormal Battle-Lemarie wavelet of spline
/// order m (integer-shift scaling function).
double battle_lemarie_modulus(double omega, int order);

/// Analytic complex Battle-Lemarie bank: the spectrum of psi_j is
/// 2 |psi_hat_BL(2^j omega)| on (0, pi) and zero elsewhere, so the filters
/// have a real spectrum, an even real part and an odd imaginary part.
/// Throws ScaleOverflowError when 2^J > T.
FilterBank build_filter_bank(const FilterBankConfig& cfg = {});

/// x * psi (t) = sum_u x(t + u) psi(u) on the centered grid of x. With zero
/// padding, values outside the grid are 0; circular mode wraps modulo T.
template <class Sample>
Complex convolve_at(std::span<const Sample> x, std::span<const Complex> psi, int t,
                    BoundaryMode boundary = BoundaryMode::Zero);

/// Direct O(T^2) evaluation of x * psi at every grid point.
template <class Sample>
std::vector<Complex> convolve_direct(std::span<const Sample> x, std::span<const Complex> psi,
                                     BoundaryMode boundary = BoundaryMode::Zero);

/// Spectral evaluation of x * psi_j at every grid point (j is 1-based).
std::vector<Complex> convolve_fast(std::span<const double> x, const FilterBank& bank, int j);

/// Normalized first- and second-order scattering coefficients at t = 0.
struct ScatterEmbedding {
    int scales{0};
    std::vector<Complex> first_order;   // W_j xbar(0) / sigma_j, j = 1..J
    std::vector<Complex> second_order;  // W_j2 |W_j1 x|(0) / sigma_j1j2, j1 < j2, lexicographic
    std::vector<double> sigma_first;
    std::vector<double> sigma_second;

    /// Real parts (first order, then second order) followed by the imaginary
    /// parts in the same order; 42 values for J = 6.
    [[nodiscard]] std::vector<double> flat() const;
};

[[nodiscard]] constexpr std::size_t second_order_count(int scales) {
    return static_cast<std::size_t>(scales) * static_cast<std::size_t>(scales - 1) / 2;
}
[[nodiscard]] constexpr std::size_t embedding_size(int scales) {
    return 2 * (static_cast<std::size_t>(scales) + second_order_count(scales));
}
/// Position of the pair (j1, j2), 1 <= j1 < j2 <= J, in the second-order block.
std::size_t second_order_index(int j1, int j2, int scales);
/// Flat indices of the imaginary second-order block.
std::vector<std::size_t> imaginary_second_order_indices(int scales);

/// Throws DegenerateWindowError when any normalizer vanishes.
ScatterEmbedding embed(std::span<const double> window, const FilterBank& bank);
ScatterEmbedding embed(const JumpEvent& event, const FilterBank& bank);

/// Embeds every event in place (event.embedding), in parallel.
/// Returns the number of events with a degenerate window (left unembedded).
std::size_t embed_all(std::vector<JumpEvent>& events, const FilterBank& bank, unsigned threads = 1);

}  // namespace jumpscatter
