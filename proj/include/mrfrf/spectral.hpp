#pragma once

#include "mrfrf/core.hpp"
#include "mrfrf/multirate.hpp"
#include "mrfrf/signal.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mrfrf {

/// Channels x bins DFT coefficients on the grid of the underlying record.
struct Spectrum {
    CMatrix data;
    double sample_time = 1.0;

    [[nodiscard]] std::size_t channels() const noexcept { return static_cast<std::size_t>(data.rows()); }
    [[nodiscard]] std::size_t bins() const noexcept { return static_cast<std::size_t>(data.cols()); }
    [[nodiscard]] FrequencyGrid grid() const { return {bins(), sample_time}; }
};

/// X(k) = sum_n x(n) exp(-j w_k n T), unnormalized.
inline CMatrix dft_rows(const CMatrix& x) {
    if (x.cols() == 1) return x; // kissfft does not handle length 1
    Eigen::FFT<double> fft;
    CMatrix out(x.rows(), x.cols());
    std::vector<cd> in(static_cast<std::size_t>(x.cols())), res;
    for (Eigen::Index c = 0; c < x.rows(); ++c) {
        for (Eigen::Index n = 0; n < x.cols(); ++n) in[static_cast<std::size_t>(n)] = x(c, n);
        fft.fwd(res, in);
        for (Eigen::Index n = 0; n < x.cols(); ++n) out(c, n) = res[static_cast<std::size_t>(n)];
    }
    return out;
}

/// Inverse of dft_rows, including the 1/N factor.
inline CMatrix idft_rows(const CMatrix& x) {
    if (x.cols() == 1) return x; // kissfft does not handle length 1
    Eigen::FFT<double> fft;
    CMatrix out(x.rows(), x.cols());
    std::vector<cd> in(static_cast<std::size_t>(x.cols())), res;
    for (Eigen::Index c = 0; c < x.rows(); ++c) {
        for (Eigen::Index n = 0; n < x.cols(); ++n) in[static_cast<std::size_t>(n)] = x(c, n);
        fft.inv(res, in);
        for (Eigen::Index n = 0; n < x.cols(); ++n) out(c, n) = res[static_cast<std::size_t>(n)];
    }
    return out;
}

inline Spectrum dft(const SignalRecord& x) {
    if (x.samples() == 0) throw InvalidArgument("dft: empty record");
    return {dft_rows(x.data.cast<cd>()), x.sample_time};
}

inline Spectrum dft(const LiftedSignal& x) {
    if (x.samples() == 0) throw InvalidArgument("dft: empty record");
    return {dft_rows(x.data.cast<cd>()), x.sample_time};
}

/// Real part of the inverse transform; the rate tag is left to the caller.
inline SignalRecord idft(const Spectrum& x, RateTag tag = RateTag::fast) {
    if (x.bins() == 0) throw InvalidArgument("idft: empty spectrum");
    return {idft_rows(x.data).real(), x.sample_time, tag};
}

/// Y_l(k) = (1/F) sum_f Y_h(k + f M): the M-bin spectrum of the downsampled signal.
inline Spectrum alias_slow_spectrum(const Spectrum& fast, std::size_t factor) {
    if (factor < 1) throw InvalidArgument("alias_slow_spectrum: factor must be >= 1");
    const std::size_t n = fast.bins();
    if (n % factor != 0)
        throw InvalidArgument("alias_slow_spectrum: N=" + std::to_string(n) + " not divisible by F=" +
                              std::to_string(factor));
    const std::size_t m = n / factor;
    CMatrix out = CMatrix::Zero(fast.data.rows(), idx(m));
    for (std::size_t f = 0; f < factor; ++f) out += fast.data.middleCols(idx(f * m), idx(m));
    out /= static_cast<double>(factor);
    return {std::move(out), fast.sample_time * static_cast<double>(factor)};
}

// ---------------------------------------------------------------------------
// Multisine excitation
// ---------------------------------------------------------------------------

enum class PhaseScheme { random, orthogonal };

struct MultisineSpec {
    std::size_t channels = 1;
    std::size_t samples = 0; ///< N, one period
    double sample_time = 1.0;
    std::vector<double> rms; ///< target RMS per channel
    /// Amplitude per bin k = 0..N/2; empty means flat over the excited bins.
    std::vector<double> amplitude;
    /// Explicit excited bins in [0, N/2]; empty means all of 1..N/2 (plus 0 with include_dc).
    std::vector<std::size_t> excited_bins;
    bool include_dc = false;
    PhaseScheme phase = PhaseScheme::random;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Uniform [0, 1) keyed by (seed, channel, bin); independent of call order.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t channel, std::uint64_t bin) {
    const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ channel) ^ (bin * 0x2545F4914F6CDD1Dull));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

} // namespace detail

inline std::vector<std::size_t> excited_bins(const MultisineSpec& spec) {
    if (!spec.excited_bins.empty()) return spec.excited_bins;
    std::vector<std::size_t> bins;
    if (spec.include_dc) bins.push_back(0);
    for (std::size_t k = 1; k <= spec.samples / 2; ++k) bins.push_back(k);
    return bins;
}

/// Periodic multisine with one period of N samples, scaled to the exact RMS target per channel.
inline SignalRecord multisine(const MultisineSpec& spec) {
    const std::size_t n = spec.samples;
    if (n == 0 || n % 2 != 0) throw InvalidArgument("multisine: N must be positive and even");
    if (spec.channels == 0) throw InvalidArgument("multisine: need at least one channel");
    if (spec.rms.size() != spec.channels) throw InvalidArgument("multisine: one RMS target per channel required");
    if (!spec.amplitude.empty() && spec.amplitude.size() != n / 2 + 1)
        throw InvalidArgument("multisine: amplitude profile must have N/2+1 entries");
    const auto bins = excited_bins(spec);
    for (auto k : bins)
        if (k > n / 2) throw InvalidArgument("multisine: excited bin " + std::to_string(k) + " beyond N/2");

    auto amp = [&](std::size_t k) { return spec.amplitude.empty() ? 1.0 : spec.amplitude[k]; };
    bool any_amplitude = false;
    for (auto k : bins) any_amplitude = any_amplitude || amp(k) != 0.0;

    CMatrix spectrum = CMatrix::Zero(idx(spec.channels), idx(n));
    for (std::size_t c = 0; c < spec.channels; ++c) {
        if (!(spec.rms[c] > 0.0) && any_amplitude)
            throw InvalidArgument("multisine: RMS target of channel " + std::to_string(c) +
                                  " must be positive for a nonzero amplitude profile");
        for (auto k : bins) {
            double phase = 0.0;
            if (spec.phase == PhaseScheme::random) {
                phase = 2.0 * std::numbers::pi * detail::keyed_uniform(spec.seed, c, k);
            } else {
                // Shared random phase per bin, times columns of the channel-count DFT matrix.
                phase = 2.0 * std::numbers::pi * detail::keyed_uniform(spec.seed, 0, k) +
                        2.0 * std::numbers::pi * static_cast<double>((c * k) % spec.channels) /
                            static_cast<double>(spec.channels);
            }
            const double a = amp(k);
            if (k == 0 || 2 * k == n) {
                spectrum(idx(c), idx(k)) = std::cos(phase) >= 0.0 ? a : -a;
            } else {
                const cd v = std::polar(a, phase);
                spectrum(idx(c), idx(k)) = v;
                spectrum(idx(c), idx(n - k)) = std::conj(v);
            }
        }
    }
    Matrix x = idft_rows(spectrum).real();
    for (std::size_t c = 0; c < spec.channels; ++c) {
        const double r = std::sqrt(x.row(idx(c)).squaredNorm() / static_cast<double>(n));
        if (r > 0.0) x.row(idx(c)) *= spec.rms[c] / r;
    }
    return {std::move(x), spec.sample_time, RateTag::fast, std::size_t{1}};
}

/// Repeats a one-period record `periods` times.
inline SignalRecord repeat_periods(const SignalRecord& one, std::size_t periods) {
    if (periods == 0) throw InvalidArgument("repeat_periods: need at least one period");
    Matrix out(one.data.rows(), one.data.cols() * idx(periods));
    for (std::size_t p = 0; p < periods; ++p) out.middleCols(idx(p) * one.data.cols(), one.data.cols()) = one.data;
    return {std::move(out), one.sample_time, one.rate, periods};
}

// ---------------------------------------------------------------------------
// Steady-state frequency-domain oracle of the multirate loop
// ---------------------------------------------------------------------------

/// Periodic steady-state slow output for noise-free excitation R_h:
///   P_l(k) = (1/F) sum_f P(z_{k+fM}) Flt(z_{k+fM}) I_zoh(z_{k+fM})
///   Y_l(k) = (I + P_l C)^{-1} (1/F) sum_f P(z_{k+fM}) R_h(k+fM),
/// with C evaluated on the slow grid. Filters default to identity.
inline Spectrum predict_slow_output_steady(const FrfMatrix& plant, const FrfMatrix& controller, std::size_t factor,
                                           const Spectrum& r_h, const std::optional<FrfMatrix>& filters = std::nullopt) {
    const std::size_t n = plant.bins();
    if (factor < 1 || n % factor != 0) throw InvalidArgument("predict_slow_output_steady: N must be a multiple of F");
    const std::size_t m = n / factor;
    if (controller.bins() != m) throw InvalidArgument("predict_slow_output_steady: controller must be on the M-bin slow grid");
    if (r_h.bins() != n || r_h.channels() != plant.n_inputs)
        throw InvalidArgument("predict_slow_output_steady: excitation spectrum does not match the plant grid/inputs");
    if (controller.n_outputs != plant.n_inputs || controller.n_inputs != plant.n_outputs)
        throw InvalidArgument("predict_slow_output_steady: controller must be n_u x n_y");
    if (filters && (filters->bins() != n || filters->n_inputs != plant.n_inputs || filters->n_outputs != plant.n_inputs))
        throw InvalidArgument("predict_slow_output_steady: filters must be n_u x n_u on the fast grid");

    const auto ny = idx(plant.n_outputs), nu = idx(plant.n_inputs);
    CMatrix out(ny, idx(m));
    for (std::size_t k = 0; k < m; ++k) {
        CMatrix pl = CMatrix::Zero(ny, nu);
        CVector w = CVector::Zero(ny);
        for (std::size_t f = 0; f < factor; ++f) {
            const std::size_t b = k + f * m;
            const cd z = plant.grid.zeta(b);
            cd hold = 0.0, zp = 1.0;
            for (std::size_t i = 0; i < factor; ++i, zp *= z) hold += zp;
            const CMatrix pf = filters ? CMatrix(plant[b] * (*filters)[b]) : plant[b];
            pl += pf * hold;
            w += plant[b] * r_h.data.col(idx(b));
        }
        pl /= static_cast<double>(factor);
        w /= static_cast<double>(factor);
        const CMatrix open = pl * controller[k];
        const CMatrix loop = CMatrix::Identity(ny, ny) + open;
        Eigen::FullPivLU<CMatrix> lu(loop);
        const double smin = Eigen::JacobiSVD<CMatrix>(loop).singularValues().minCoeff();
        if (!lu.isInvertible() || !(smin > 1e-12 * (1.0 + open.norm())))
            throw IllPosedLoop(k, "predict_slow_output_steady: I + C P_l singular at slow bin " + std::to_string(k));
        out.col(idx(k)) = lu.solve(w);
    }
    return {std::move(out), plant.grid.sample_time * static_cast<double>(factor)};
}

} // namespace mrfrf
