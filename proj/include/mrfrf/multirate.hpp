#pragma once

#include "mrfrf/lti.hpp"
#include "mrfrf/loop_spec.hpp"
#include "mrfrf/signal.hpp"

#include <string>
#include <vector>

namespace mrfrf {

// ---------------------------------------------------------------------------
// Rate conversion
// ---------------------------------------------------------------------------

/// y_l(m) = x_h(F m). The length must divide evenly; nothing is truncated.
inline SignalRecord downsample(const SignalRecord& x, std::size_t factor) {
    if (factor < 1) throw InvalidArgument("downsample: factor must be >= 1");
    if (x.samples() % factor != 0)
        throw InvalidArgument("downsample: length " + std::to_string(x.samples()) + " is not divisible by F=" +
                              std::to_string(factor));
    const std::size_t m = x.samples() / factor;
    Matrix out(x.data.rows(), idx(m));
    for (std::size_t i = 0; i < m; ++i) out.col(idx(i)) = x.data.col(idx(i * factor));
    return {std::move(out), x.sample_time * static_cast<double>(factor), RateTag::slow, x.n_periods};
}

/// Zero-insertion upsampler: x_l(m) at n = m F, zero elsewhere.
inline SignalRecord zero_insert(const SignalRecord& x, std::size_t factor) {
    if (factor < 1) throw InvalidArgument("zero_insert: factor must be >= 1");
    Matrix out = Matrix::Zero(x.data.rows(), x.data.cols() * idx(factor));
    for (Eigen::Index m = 0; m < x.data.cols(); ++m) out.col(m * idx(factor)) = x.data.col(m);
    return {std::move(out), x.sample_time / static_cast<double>(factor), RateTag::fast, x.n_periods};
}

/// Zero insertion followed by the hold filter sum_{f<F} q^{-f}: every slow sample held F times.
inline SignalRecord upsample_zoh(const SignalRecord& x, std::size_t factor) {
    SignalRecord z = zero_insert(x, factor);
    Matrix held = z.data;
    for (Eigen::Index n = 0; n < held.cols(); ++n) {
        held.col(n).setZero();
        for (std::size_t f = 0; f < factor; ++f) {
            const Eigen::Index src = n - idx(f);
            if (src >= 0) held.col(n) += z.data.col(src);
        }
    }
    z.data = std::move(held);
    return z;
}

// ---------------------------------------------------------------------------
// Lifting
// ---------------------------------------------------------------------------

/// Row i*channels + c, column m holds channel c of fast sample m F + i.
struct LiftedSignal {
    Matrix data;
    double sample_time = 1.0; ///< slow sample time F T_h
    std::size_t factor = 1;
    std::size_t channels = 0;

    [[nodiscard]] std::size_t samples() const noexcept { return static_cast<std::size_t>(data.cols()); }
};

inline LiftedSignal lift(const SignalRecord& x, std::size_t factor) {
    if (factor < 1) throw InvalidArgument("lift: factor must be >= 1");
    if (x.samples() % factor != 0)
        throw InvalidArgument("lift: length " + std::to_string(x.samples()) + " is not divisible by F=" +
                              std::to_string(factor));
    const auto ch = x.data.rows();
    const auto m = idx(x.samples() / factor);
    const auto f = idx(factor);
    LiftedSignal out{Matrix(ch * f, m), x.sample_time * static_cast<double>(factor), factor, x.channels()};
    for (Eigen::Index col = 0; col < m; ++col)
        for (Eigen::Index i = 0; i < f; ++i) out.data.block(i * ch, col, ch, 1) = x.data.col(col * f + i);
    return out;
}

inline SignalRecord unlift(const LiftedSignal& x) {
    const auto ch = idx(x.channels);
    const auto f = idx(x.factor);
    if (x.data.rows() != ch * f) throw InvalidArgument("unlift: row count does not match F * channels");
    Matrix out(ch, x.data.cols() * f);
    for (Eigen::Index col = 0; col < x.data.cols(); ++col)
        for (Eigen::Index i = 0; i < f; ++i) out.col(col * f + i) = x.data.block(i * ch, col, ch, 1);
    return {std::move(out), x.sample_time / static_cast<double>(x.factor), RateTag::fast};
}

// ---------------------------------------------------------------------------
// Lifted frequency response
// ---------------------------------------------------------------------------

/// F x F blocks (each n_y x n_u) per slow bin k = 0..M-1, evaluated at zeta_k^F.
struct LiftedFrf {
    std::size_t factor = 1;
    std::size_t n_outputs = 0;
    std::size_t n_inputs = 0;
    FrequencyGrid slow_grid;
    std::vector<CMatrix> values;

    [[nodiscard]] CMatrix block(std::size_t k, std::size_t a, std::size_t b) const {
        return values[k].block(idx(a * n_outputs), idx(b * n_inputs), idx(n_outputs), idx(n_inputs));
    }
    [[nodiscard]] CMatrix first_row(std::size_t k) const {
        return values[k].topRows(idx(n_outputs));
    }
};

/// P^{(i)}(zeta_k^F) = (zeta_k^i / F) sum_f P(phi^f zeta_k) phi^{f i}, phi = exp(2 pi j / F).
/// phi^f zeta_k lands on fast bin k - f M, so only grid values of P are needed.
inline CMatrix polyphase_component(const FrfMatrix& p, std::size_t factor, std::size_t i, std::size_t k) {
    const std::size_t n = p.bins();
    const std::size_t m = n / factor;
    CMatrix acc = CMatrix::Zero(idx(p.n_outputs), idx(p.n_inputs));
    for (std::size_t f = 0; f < factor; ++f) {
        const std::size_t bin = (k + n * factor - f * m) % n;
        acc += p[bin] * FrequencyGrid::unit_root(static_cast<long long>(f * i), factor);
    }
    const cd zk_i = FrequencyGrid::unit_root(-static_cast<long long>(k * i), n);
    return acc * (zk_i / static_cast<double>(factor));
}

/// Assembles the F x F lifted FRF: block [a,b] = P^{(a-b)} for a >= b and
/// zeta^F P^{(F-(b-a))} above the diagonal.
inline LiftedFrf lift_frf(const FrfMatrix& p, std::size_t factor) {
    if (factor < 1) throw InvalidArgument("lift_frf: factor must be >= 1");
    const std::size_t n = p.bins();
    if (n == 0 || n % factor != 0) throw InvalidArgument("lift_frf: fast grid size must be a multiple of F");
    const std::size_t m = n / factor;
    LiftedFrf out{factor, p.n_outputs, p.n_inputs,
                  FrequencyGrid(m, p.grid.sample_time * static_cast<double>(factor)), {}};
    out.values.reserve(m);
    const auto ny = idx(p.n_outputs), nu = idx(p.n_inputs);
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<CMatrix> comp;
        for (std::size_t i = 0; i < factor; ++i) comp.push_back(polyphase_component(p, factor, i, k));
        const cd zf = FrequencyGrid::unit_root(-static_cast<long long>(k * factor), n);
        CMatrix blk(ny * idx(factor), nu * idx(factor));
        for (std::size_t a = 0; a < factor; ++a)
            for (std::size_t b = 0; b < factor; ++b) {
                const CMatrix v = a >= b ? comp[a - b] : CMatrix(zf * comp[factor - (b - a)]);
                blk.block(idx(a) * ny, idx(b) * nu, ny, nu) = v;
            }
        out.values.push_back(std::move(blk));
    }
    return out;
}

/// Converts a first row measured from lifted time signals (block b maps
/// x_h(mF+b) to y_h(mF)) into the block convention of lift_frf, where
/// block f >= 1 equals zeta^F times time-domain block F - f.
inline CMatrix time_row_to_frf_row(const CMatrix& row, std::size_t factor, std::size_t n_inputs, cd zeta_f) {
    const auto nu = idx(n_inputs);
    CMatrix out(row.rows(), row.cols());
    out.leftCols(nu) = row.leftCols(nu);
    for (std::size_t f = 1; f < factor; ++f)
        out.middleCols(idx(f) * nu, nu) = zeta_f * row.middleCols(idx(factor - f) * nu, nu);
    return out;
}

inline CMatrix frf_row_to_time_row(const CMatrix& row, std::size_t factor, std::size_t n_inputs, cd zeta_f) {
    const auto nu = idx(n_inputs);
    CMatrix out(row.rows(), row.cols());
    out.leftCols(nu) = row.leftCols(nu);
    for (std::size_t f = 1; f < factor; ++f)
        out.middleCols(idx(factor - f) * nu, nu) = row.middleCols(idx(f) * nu, nu) / zeta_f;
    return out;
}

// ---------------------------------------------------------------------------
// Lifted closed loop
// ---------------------------------------------------------------------------

namespace detail {

/// A signal expressed linearly in the period-start state and the lifted inputs.
struct LinearMap {
    Matrix wx;
    Matrix wi;
};

inline LinearMap operator+(const LinearMap& a, const LinearMap& b) { return {a.wx + b.wx, a.wi + b.wi}; }
inline LinearMap operator-(const LinearMap& a, const LinearMap& b) { return {a.wx - b.wx, a.wi - b.wi}; }
inline LinearMap operator*(const Matrix& m, const LinearMap& a) { return {m * a.wx, m * a.wi}; }

} // namespace detail

/// Layout of the system returned by lift_loop_state_space.
struct LiftedLoopLayout {
    std::size_t n_u = 0, n_y = 0, factor = 1;
    [[nodiscard]] std::size_t r_inputs() const { return n_u * factor; }
    [[nodiscard]] std::size_t eps_inputs() const { return n_y * factor; }
    [[nodiscard]] std::size_t u_outputs() const { return n_u * factor; }
    [[nodiscard]] std::size_t y_outputs() const { return n_y; }
};

/// Slow-rate LTI realization of one period of the multirate loop.
/// Inputs: [lifted r_h (n_u F); lifted eps_h (n_y F)]. Outputs: [lifted u_h (n_u F); y_l (n_y)].
/// The controller samples y_h(mF) without delay and its output is held for F fast steps.
inline StateSpace lift_loop_state_space(const MultirateLoopSpec& loop) {
    loop.validate();
    using detail::LinearMap;
    const StateSpace p = to_state_space(loop.plant);
    const StateSpace fl = to_state_space(loop.filters_or_identity());
    const StateSpace c = to_state_space(loop.controller);
    const auto nu = idx(loop.n_inputs()), ny = idx(loop.n_outputs()), f = idx(loop.factor);
    const auto np = p.A.rows(), nf = fl.A.rows(), nc = c.A.rows();
    const auto nx = np + nf + nc;
    const auto ni = nu * f + ny * f;

    auto state_map = [&](Eigen::Index off, Eigen::Index n) {
        LinearMap m{Matrix::Zero(n, nx), Matrix::Zero(n, ni)};
        m.wx.block(0, off, n, n).setIdentity();
        return m;
    };
    auto input_map = [&](Eigen::Index off, Eigen::Index n) {
        LinearMap m{Matrix::Zero(n, nx), Matrix::Zero(n, ni)};
        m.wi.block(0, off, n, n).setIdentity();
        return m;
    };
    auto r_at = [&](Eigen::Index i) { return input_map(i * nu, nu); };
    auto eps_at = [&](Eigen::Index i) { return input_map(nu * f + i * ny, ny); };

    LinearMap xp = state_map(0, np);
    LinearMap xf = state_map(np, nf);
    const LinearMap xc = state_map(np + nf, nc);

    // y(mF) = Cp xp + Dp (r0 - Cf xf - Df (Cc xc + Dc y)) + eps0
    const Matrix loop_gain = Matrix::Identity(ny, ny) + p.D * fl.D * c.D;
    Eigen::FullPivLU<Matrix> lu(loop_gain);
    if (!lu.isInvertible()) throw IllPosedLoop(0, "lifted loop: I + Dp Df Dc is singular (algebraic loop ill-posed)");
    const Matrix k_inv = lu.inverse();
    const LinearMap y0 = k_inv * (p.C * xp - (p.D * fl.C) * xf - (p.D * fl.D * c.C) * xc + p.D * r_at(0) + eps_at(0));
    const LinearMap v = c.C * xc + c.D * y0;
    const LinearMap xc_next = c.A * xc + c.B * y0;

    std::vector<LinearMap> u_parts;
    for (Eigen::Index i = 0; i < f; ++i) {
        const LinearMap u = r_at(i) - (fl.C * xf + fl.D * v);
        u_parts.push_back(u);
        const LinearMap xp_next = p.A * xp + p.B * u;
        const LinearMap xf_next = fl.A * xf + fl.B * v;
        xp = xp_next;
        xf = xf_next;
    }

    Matrix A(nx, nx), B(nx, ni), C(nu * f + ny, nx), D(nu * f + ny, ni);
    A << xp.wx, xf.wx, xc_next.wx;
    B << xp.wi, xf.wi, xc_next.wi;
    for (Eigen::Index i = 0; i < f; ++i) {
        C.middleRows(i * nu, nu) = u_parts[static_cast<std::size_t>(i)].wx;
        D.middleRows(i * nu, nu) = u_parts[static_cast<std::size_t>(i)].wi;
    }
    C.bottomRows(ny) = y0.wx;
    D.bottomRows(ny) = y0.wi;

    const double rho = spectral_radius(A);
    if (!(rho < 1.0 - kStabilityMargin))
        throw UnstableSystem(rho, "lifted loop is not internally stable: spectral radius " + std::to_string(rho));
    return {A, B, C, D, loop.slow_sample_time()};
}

} // namespace mrfrf
