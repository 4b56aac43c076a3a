#pragma once

#include "mrfrf/lti.hpp"
#include "mrfrf/loop_spec.hpp"
#include "mrfrf/multirate.hpp"
#include "mrfrf/signal.hpp"
#include "mrfrf/spectral.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mrfrf {

struct SimulationOptions {
    std::size_t discard_periods = 0; ///< leading periods simulated but not returned
};

struct SimulationOutput {
    SignalRecord r_h, u_h, y_h; ///< fast records
    SignalRecord y_l;           ///< slow record
    std::size_t periods = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline Matrix white_noise(std::size_t channels, std::size_t samples, double stdev, std::uint64_t seed,
                          std::uint64_t stream) {
    Matrix out = Matrix::Zero(idx(channels), idx(samples));
    if (stdev == 0.0) return out;
    std::mt19937_64 gen(splitmix64(seed ^ splitmix64(stream)));
    std::normal_distribution<double> dist(0.0, stdev);
    for (Eigen::Index n = 0; n < out.cols(); ++n)
        for (Eigen::Index c = 0; c < out.rows(); ++c) out(c, n) = dist(gen);
    return out;
}

} // namespace detail

/// Sample-by-sample simulation of the multirate loop from zero initial conditions.
/// `r_h` is one excitation period; it is repeated discard + periods times and the
/// first `discard_periods` periods are dropped from the output.
inline SimulationOutput simulate(const MultirateLoopSpec& spec, const SignalRecord& r_h, std::size_t periods,
                                 std::uint64_t seed, const SimulationOptions& opt = {}) {
    spec.validate();
    if (periods == 0) throw InvalidArgument("simulate: need at least one period");
    if (!same_sample_time(r_h.sample_time, spec.fast_sample_time()))
        throw RateMismatch("simulate: excitation sample time differs from plant sample time");
    if (r_h.channels() != spec.n_inputs())
        throw InvalidArgument("simulate: excitation must have n_u = " + std::to_string(spec.n_inputs()) + " channels");
    const std::size_t f = spec.factor;
    const std::size_t len = r_h.samples();
    if (len == 0 || len % f != 0) throw InvalidArgument("simulate: period length must be a positive multiple of F");
    // Reject unstable loops up front; the lifted realization carries the spectral radius.
    (void)lift_loop_state_space(spec);

    const std::size_t total_periods = opt.discard_periods + periods;
    const std::size_t total = len * total_periods;
    const auto nu = idx(spec.n_inputs()), ny = idx(spec.n_outputs());

    const StateSpace p = to_state_space(spec.plant);
    const StateSpace fl = to_state_space(spec.filters_or_identity());
    const StateSpace c = to_state_space(spec.controller);

    const Matrix eh = detail::white_noise(spec.n_outputs(), total, spec.noise.eh_std, seed, 1);
    Matrix eps_h = eh;
    if (spec.noise.eh_std != 0.0 && spec.noise.shaping)
        eps_h = filter(to_state_space(*spec.noise.shaping), SignalRecord(eh, spec.fast_sample_time(), RateTag::fast)).data;
    const Matrix eps_l = detail::white_noise(spec.n_outputs(), total / f, spec.noise.el_std, seed, 2);
    const Matrix dh = detail::white_noise(1, total, spec.noise.dh_std, seed, 3);

    const Matrix loop_gain = Matrix::Identity(ny, ny) + p.D * fl.D * c.D;
    const Eigen::FullPivLU<Matrix> lu(loop_gain);
    if (!lu.isInvertible()) throw IllPosedLoop(0, "simulate: algebraic loop I + Dp Df Dc is singular");

    Vector xp = Vector::Zero(p.A.rows()), xf = Vector::Zero(fl.A.rows()), xc = Vector::Zero(c.A.rows());
    Vector v = Vector::Zero(nu);
    Matrix u_out(nu, idx(total)), y_out(ny, idx(total)), yl_out(ny, idx(total / f));
    Vector d = Vector::Zero(nu);

    for (std::size_t n = 0; n < total; ++n) {
        const auto col = idx(n);
        const Vector r = r_h.data.col(idx(n % len));
        d.setZero();
        d(idx(spec.noise.dh_channel)) = spec.noise.dh_sign * dh(0, col);
        Vector y;
        if (n % f == 0) {
            const auto m = idx(n / f);
            const Vector el = eps_l.col(m);
            const Vector rhs = p.C * xp + p.D * (r + d - fl.C * xf - fl.D * (c.C * xc + c.D * el)) + eps_h.col(col);
            y = lu.solve(rhs);
            const Vector yl = y + el;
            yl_out.col(m) = yl;
            v = c.C * xc + c.D * yl;
            xc = c.A * xc + c.B * yl;
        }
        const Vector u = r - (fl.C * xf + fl.D * v);
        if (n % f != 0) y = p.C * xp + p.D * (u + d) + eps_h.col(col);
        u_out.col(col) = u;
        y_out.col(col) = y;
        xp = p.A * xp + p.B * (u + d);
        xf = fl.A * xf + fl.B * v;
        if (!std::isfinite(xp.squaredNorm()) || xp.squaredNorm() > 1e300)
            throw UnstableSystem(std::numeric_limits<double>::infinity(),
                                 "simulate: plant state diverged at sample " + std::to_string(n));
    }

    const std::size_t keep_from = opt.discard_periods * len;
    const std::size_t keep = periods * len;
    const double th = spec.fast_sample_time();
    SimulationOutput out;
    out.r_h = SignalRecord(repeat_periods(r_h, periods).data, th, RateTag::fast, periods);
    out.u_h = SignalRecord(u_out.middleCols(idx(keep_from), idx(keep)), th, RateTag::fast, periods);
    out.y_h = SignalRecord(y_out.middleCols(idx(keep_from), idx(keep)), th, RateTag::fast, periods);
    out.y_l = SignalRecord(yl_out.middleCols(idx(keep_from / f), idx(keep / f)), spec.slow_sample_time(), RateTag::slow,
                           periods);
    out.periods = periods;
    out.seed = seed;
    return out;
}

// ---------------------------------------------------------------------------
// Surrogate plants and controller presets
// ---------------------------------------------------------------------------

namespace detail {

inline LagPolynomial poly_mul(const LagPolynomial& a, const LagPolynomial& b) {
    LagPolynomial out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

/// 1 - 2 r cos(theta) q^{-1} + r^2 q^{-2} for a continuous mode (f_n, damping) sampled at ts.
inline LagPolynomial resonant_pair(double f_hz, double damping, double ts) {
    const double wn = 2.0 * std::numbers::pi * f_hz;
    const double r = std::exp(-damping * wn * ts);
    const double theta = wn * ts * std::sqrt(1.0 - damping * damping);
    return {1.0, -2.0 * r * std::cos(theta), r * r};
}

inline double lag_sum(const LagPolynomial& p) {
    double s = 0.0;
    for (double c : p) s += c;
    return s;
}

} // namespace detail

inline constexpr double kBenchmarkFastSampleTime = 1.0 / 100800.0;
inline constexpr double kBenchmarkSlowSampleTime = 1.0 / 50400.0;

namespace detail {

struct LagRatio {
    LagPolynomial num, den;
};

inline LagRatio parallel(const LagRatio& a, const LagRatio& b) {
    LagPolynomial n1 = poly_mul(a.num, b.den), n2 = poly_mul(b.num, a.den);
    if (n1.size() < n2.size()) n1.resize(n2.size(), 0.0);
    for (std::size_t i = 0; i < n2.size(); ++i) n1[i] += n2[i];
    return {n1, poly_mul(a.den, b.den)};
}

/// weight * q^{-1} A(1) / A(q): a second-order mode with static gain `weight`.
inline LagRatio unit_mode(double f_hz, double damping, double weight, double ts) {
    const LagPolynomial den = resonant_pair(f_hz, damping, ts);
    return {{0.0, weight * lag_sum(den)}, den};
}

} // namespace detail

/// Surrogate actuator models at the benchmark fast rate.
///  "vcm-like"     1x1: stiff suspension pair at 1.8 kHz, -40 dB/decade above it, plus
///                 modes at 11.5 kHz and 35 kHz in parallel.
///  "vcm-pivot"    1x1: soft 150 Hz pivot pair (double-integrator-like from a few hundred Hz)
///                 with a 15 kHz mode. Its closed-loop poles sit close to DC.
///  "pzt-like"     1x1: flat gain with a damping-0.01 mode at 44 kHz (above the slow Nyquist frequency).
///  "dual-stage"   1x2: [vcm-like, pzt-like], the layout used by the benchmark harness.
///  "dual-stage-pivot" 1x2: [vcm-pivot, pzt-like].
///  "zero"         1x2 zero plant.
inline RationalTF surrogate_plants(const std::string& preset, double ts = kBenchmarkFastSampleTime) {
    using detail::poly_mul;
    if (preset == "vcm-like") {
        const LagPolynomial pair = detail::resonant_pair(1800.0, 0.2, ts);
        // (q^{-1} + q^{-2}) / 2 over the pair, static gain 0.4
        const double g = 0.4 * detail::lag_sum(pair);
        detail::LagRatio body{{0.0, 0.5 * g, 0.5 * g}, pair};
        body = detail::parallel(body, detail::unit_mode(11500.0, 0.04, 8e-3, ts));
        body = detail::parallel(body, detail::unit_mode(35000.0, 0.05, 1.5e-3, ts));
        return RationalTF::siso(body.num, body.den, ts);
    }
    if (preset == "vcm-pivot") {
        const LagPolynomial den = poly_mul(detail::resonant_pair(150.0, 0.4, ts), detail::resonant_pair(15000.0, 0.05, ts));
        // q^{-1} (1 + q^{-1}) numerator; static gain 4
        LagPolynomial num = {0.0, 1.0, 1.0};
        const double g = 4.0 * detail::lag_sum(den) / detail::lag_sum(num);
        for (auto& cft : num) cft *= g;
        return RationalTF::siso(num, den, ts);
    }
    if (preset == "pzt-like") {
        const LagPolynomial den = detail::resonant_pair(44000.0, 0.01, ts);
        // q^{-1} numerator, static gain 0.12
        return RationalTF::siso({0.0, 0.12 * detail::lag_sum(den)}, den, ts);
    }
    if (preset == "dual-stage") return RationalTF::hstack(surrogate_plants("vcm-like", ts), surrogate_plants("pzt-like", ts));
    if (preset == "dual-stage-pivot")
        return RationalTF::hstack(surrogate_plants("vcm-pivot", ts), surrogate_plants("pzt-like", ts));
    if (preset == "zero") return RationalTF::zero(1, 2, ts);
    throw ConfigError("unknown plant preset '" + preset +
                      "' (available: vcm-like, vcm-pivot, pzt-like, dual-stage, dual-stage-pivot, zero)");
}

/// Names accepted by surrogate_plants.
inline std::vector<std::string> surrogate_plant_names() {
    return {"vcm-like", "vcm-pivot", "pzt-like", "dual-stage", "dual-stage-pivot", "zero"};
}

/// Slow-rate controller presets.
///  "cv-q2"      VCM controller reading the second numerator lag as q^{-2}:
///               (0.65 + 0.020 q^-1 - 0.63 q^-2) / (1 - 1.4 q^-1 + 0.51 q^-2)
///  "cv-literal" VCM controller read literally, both numerator lags q^{-1}:
///               (0.65 + (0.020 - 0.63) q^-1) / (1 - 1.4 q^-1 + 0.51 q^-2)
///  "cp"         PZT controller (0.01346 + 0.01346 q^-1) / (1 - 0.8825 q^-1)
inline RationalTF controller_preset(const std::string& name, double ts = kBenchmarkSlowSampleTime) {
    const LagPolynomial cv_den = {1.0, -1.4, 0.51};
    if (name == "cv-q2") return RationalTF::siso({0.65, 0.020, -0.63}, cv_den, ts);
    if (name == "cv-literal") return RationalTF::siso({0.65, 0.020 - 0.63}, cv_den, ts);
    if (name == "cp") return RationalTF::siso({0.01346, 0.01346}, {1.0, -0.8825}, ts);
    throw ConfigError("unknown controller preset '" + name + "' (available: cv-q2, cv-literal, cp)");
}

/// 2x1 dual-stage controller [C_v; C_p] driving [VCM, PZT] from the head position.
inline RationalTF dual_stage_controller(const std::string& cv_reading = "cv-q2", double ts = kBenchmarkSlowSampleTime) {
    const RationalTF cv = controller_preset(cv_reading, ts);
    const RationalTF cp = controller_preset("cp", ts);
    return {2, 1, {cv.num(0, 0), cp.num(0, 0)}, {cv.den(0, 0), cp.den(0, 0)}, ts};
}

} // namespace mrfrf
