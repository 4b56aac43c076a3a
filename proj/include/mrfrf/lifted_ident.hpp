#pragma once

#include "mrfrf/core.hpp"
#include "mrfrf/lrm.hpp"
#include "mrfrf/multirate.hpp"
#include "mrfrf/signal.hpp"
#include "mrfrf/spectral.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mrfrf {

struct InversionResult {
    CMatrix value;
    double condition = 0.0;
    bool flagged = false;
};

/// Lifted plant first row PS_row * S^{-1}. Flagged and left NaN when cond(S) exceeds the threshold.
inline InversionResult first_row_lifted_P(const CMatrix& s_hat, const CMatrix& ps_row, double cond_threshold = 1e10) {
    if (s_hat.rows() != s_hat.cols()) throw InvalidArgument("first_row_lifted_P: S must be square");
    if (ps_row.cols() != s_hat.rows()) throw InvalidArgument("first_row_lifted_P: PS row width must match S");
    InversionResult out;
    const Vector sv = Eigen::JacobiSVD<CMatrix>(s_hat).singularValues();
    const double smin = sv(sv.size() - 1);
    out.condition = smin > 0.0 && s_hat.allFinite() ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(out.condition <= cond_threshold) || !ps_row.allFinite()) {
        out.flagged = true;
        out.value = CMatrix::Constant(ps_row.rows(), ps_row.cols(), cd(std::nan(""), std::nan("")));
        return out;
    }
    out.value = s_hat.transpose().fullPivLu().solve(ps_row.transpose()).transpose();
    return out;
}

namespace detail {

/// sign = +1 evaluates the prefactor exp(+j w_k T_l); -1 is the deliberately wrong variant used by the validator.
inline FrfMatrix recover_P(const std::vector<CMatrix>& rows, std::size_t factor, std::size_t n_inputs,
                           const FrequencyGrid& fast_grid, int sign, const std::vector<bool>* slow_flags = nullptr) {
    if (factor < 1) throw InvalidArgument("recover_P: factor must be >= 1");
    const std::size_t n = fast_grid.bins;
    if (n % factor != 0) throw InvalidArgument("recover_P: fast grid size must be a multiple of F");
    const std::size_t m = n / factor;
    if (rows.size() != m)
        throw InvalidArgument("recover_P: expected " + std::to_string(m) + " slow bins, got " + std::to_string(rows.size()));
    if (slow_flags && slow_flags->size() != m) throw InvalidArgument("recover_P: one flag per slow bin required");
    const auto nu = idx(n_inputs);
    const auto ny = rows.empty() ? 0 : rows[0].rows();
    for (const auto& r : rows)
        if (r.rows() != ny || r.cols() != nu * idx(factor)) throw InvalidArgument("recover_P: row block shape mismatch");
    FrfMatrix out(fast_grid, static_cast<std::size_t>(ny), n_inputs);
    const auto f_ll = static_cast<long long>(factor);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t ks = k % m;
        if (slow_flags && (*slow_flags)[ks]) {
            out[k].setConstant(cd(std::nan(""), std::nan("")));
            continue;
        }
        const CMatrix& row = rows[ks];
        const auto kk = static_cast<long long>(k);
        CMatrix acc = CMatrix::Zero(ny, nu);
        for (std::size_t f = 1; f < factor; ++f) {
            // zeta_k^{-(F-f)} = exp(+2 pi j k (F-f) / N)
            acc += row.middleCols(idx(f) * nu, nu) * FrequencyGrid::unit_root(kk * (f_ll - static_cast<long long>(f)), n);
        }
        // exp(j w_k T_l) = exp(2 pi j k F / N)
        const cd pre = FrequencyGrid::unit_root(sign * kk * f_ll, n);
        out[k] = row.leftCols(nu) + pre * acc;
    }
    return out;
}

} // namespace detail

/// Fast-rate FRF on all N bins from the first row of the lifted plant (lift_frf block convention).
/// Row blocks are taken at slow bin k mod M; flagged slow bins yield NaN on every fast bin folding onto them.
inline FrfMatrix recover_P(const std::vector<CMatrix>& rows, std::size_t factor, std::size_t n_inputs,
                           const FrequencyGrid& fast_grid, const std::vector<bool>* slow_flags = nullptr) {
    return detail::recover_P(rows, factor, n_inputs, fast_grid, +1, slow_flags);
}

inline std::vector<CMatrix> first_rows(const LiftedFrf& lifted) {
    std::vector<CMatrix> rows;
    rows.reserve(lifted.values.size());
    for (std::size_t k = 0; k < lifted.values.size(); ++k) rows.push_back(lifted.first_row(k));
    return rows;
}

// ---------------------------------------------------------------------------
// Identification
// ---------------------------------------------------------------------------

struct IdentConfig {
    LocalModelConfig lrm;
    double inversion_cond_threshold = 1e10;
    /// Average the periods of records carrying n_periods before transforming.
    bool average_periods = true;
    /// Slow bins to fit; empty means all M. Unfitted bins are flagged.
    std::vector<std::size_t> slow_bins;
};

struct BinDiagnostics {
    std::size_t bin = 0;
    double residual = 0.0;
    double window_energy = 0.0;
    double lrm_condition = 0.0;
    double inversion_condition = 0.0;
    FitStatus fit_status = FitStatus::ok;
    bool fallback = false;
    bool flagged = false;
    std::string message;
    /// Share of applied-input energy at each alias k + f M, f = 0..F-1; sums to 1 when any energy is present.
    std::vector<double> alias_energy;
};

struct IdentResult {
    std::size_t factor = 1;
    std::size_t n_inputs = 0;
    std::size_t n_outputs = 0;
    FrequencyGrid slow_grid;
    std::vector<CMatrix> G;            ///< stacked local estimate [S; PS_row] per slow bin
    std::vector<CVector> T;            ///< transient estimate per slow bin
    std::vector<CMatrix> S_lifted;     ///< n_u F x n_u F
    std::vector<CMatrix> PS_row;       ///< n_y x n_u F
    std::vector<CMatrix> P_row_lifted; ///< n_y x n_u F, lift_frf block convention
    FrfMatrix P_hat;                   ///< all N fast bins; NaN where flagged
    std::vector<bool> slow_flags;
    std::vector<bool> fast_flags;
    std::vector<BinDiagnostics> diagnostics;
};

namespace detail {

inline Matrix average_over_periods(const Matrix& x, std::size_t periods) {
    const auto len = x.cols() / idx(periods);
    Matrix out = Matrix::Zero(x.rows(), len);
    for (std::size_t p = 0; p < periods; ++p) out += x.middleCols(idx(p) * len, len);
    return out / static_cast<double>(periods);
}

} // namespace detail

/// Lift, transform, fit the stacked local model [U; Y_l] ~ G R + T per slow bin,
/// extract the lifted first row indirectly and recover the fast-rate FRF.
inline IdentResult identify(const SignalRecord& u_h, const SignalRecord& r_h, const SignalRecord& y_l, std::size_t factor,
                            const IdentConfig& cfg = {}) {
    if (factor < 1) throw InvalidArgument("identify: factor must be >= 1");
    if (u_h.rate != RateTag::fast || r_h.rate != RateTag::fast) throw RateMismatch("identify: u_h and r_h must be fast-rate records");
    if (y_l.rate != RateTag::slow && factor != 1) throw RateMismatch("identify: y_l must be a slow-rate record");
    if (!same_sample_time(u_h.sample_time, r_h.sample_time))
        throw RateMismatch("identify: u_h and r_h sample times differ");
    if (!same_sample_time(y_l.sample_time, u_h.sample_time * static_cast<double>(factor)))
        throw RateMismatch("identify: y_l sample time is not F times the fast sample time");
    if (u_h.channels() != r_h.channels()) throw DataError("identify: u_h and r_h channel counts differ");
    if (u_h.samples() != r_h.samples())
        throw DataError("identify: u_h has " + std::to_string(u_h.samples()) + " samples, r_h has " +
                        std::to_string(r_h.samples()));
    if (u_h.samples() == 0 || u_h.samples() % factor != 0)
        throw DataError("identify: fast record length " + std::to_string(u_h.samples()) + " is not a positive multiple of F=" +
                        std::to_string(factor));
    if (y_l.samples() * factor != u_h.samples())
        throw DataError("identify: y_l has " + std::to_string(y_l.samples()) + " samples, expected " +
                        std::to_string(u_h.samples() / factor));
    if (u_h.channels() == 0 || y_l.channels() == 0) throw DataError("identify: empty channel set");

    Matrix u = u_h.data, r = r_h.data, y = y_l.data;
    if (cfg.average_periods && u_h.n_periods && *u_h.n_periods > 1) {
        const std::size_t p = *u_h.n_periods;
        if ((u_h.samples() / p) % factor != 0) throw DataError("identify: period length is not a multiple of F");
        u = detail::average_over_periods(u, p);
        r = detail::average_over_periods(r, p);
        y = detail::average_over_periods(y, p);
    }

    const std::size_t nu = u_h.channels(), ny = y_l.channels();
    const double th = u_h.sample_time;
    const std::size_t n = static_cast<std::size_t>(u.cols());
    const std::size_t m = n / factor;
    const auto nuf = idx(nu * factor);

    const LiftedSignal ul = lift(SignalRecord(u, th, RateTag::fast), factor);
    const LiftedSignal rl = lift(SignalRecord(r, th, RateTag::fast), factor);
    CMatrix z(nuf + idx(ny), idx(m));
    z.topRows(nuf) = dft_rows(ul.data.cast<cd>());
    z.bottomRows(idx(ny)) = dft_rows(y.cast<cd>());
    const CMatrix rs = dft_rows(rl.data.cast<cd>());
    const CMatrix u_fast = dft_rows(u.cast<cd>());

    std::vector<std::size_t> bins = cfg.slow_bins;
    if (bins.empty())
        for (std::size_t k = 0; k < m; ++k) bins.push_back(k);
    for (auto k : bins)
        if (k >= m) throw InvalidArgument("identify: slow bin " + std::to_string(k) + " out of range (M=" + std::to_string(m) + ")");

    const auto fits = sweep_bins(z, rs, bins, cfg.lrm);

    IdentResult res;
    res.factor = factor;
    res.n_inputs = nu;
    res.n_outputs = ny;
    res.slow_grid = FrequencyGrid(m, th * static_cast<double>(factor));
    const CMatrix nan_sq = CMatrix::Constant(nuf, nuf, cd(std::nan(""), std::nan("")));
    const CMatrix nan_row = CMatrix::Constant(idx(ny), nuf, cd(std::nan(""), std::nan("")));
    res.G.assign(m, CMatrix::Constant(nuf + idx(ny), nuf, cd(std::nan(""), std::nan(""))));
    res.T.assign(m, CVector::Constant(nuf + idx(ny), cd(std::nan(""), std::nan(""))));
    res.S_lifted.assign(m, nan_sq);
    res.PS_row.assign(m, nan_row);
    res.P_row_lifted.assign(m, nan_row);
    res.slow_flags.assign(m, true);
    res.diagnostics.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        auto& d = res.diagnostics[k];
        d.bin = k;
        d.message = "not requested";
        d.alias_energy.assign(factor, 0.0);
        double total = 0.0;
        for (std::size_t f = 0; f < factor; ++f) {
            d.alias_energy[f] = u_fast.col(idx(k + f * m)).squaredNorm();
            total += d.alias_energy[f];
        }
        if (total > 0.0)
            for (auto& e : d.alias_energy) e /= total;
    }

    std::vector<InversionResult> inv(fits.size());
    parallel_for(fits.size(), [&](std::size_t i) {
        if (fits[i].status == FitStatus::failed) return;
        const CMatrix s = fits[i].G.topRows(nuf);
        const CMatrix ps = fits[i].G.bottomRows(idx(ny));
        inv[i] = first_row_lifted_P(s, ps, cfg.inversion_cond_threshold);
    });

    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto& fit = fits[i];
        const std::size_t k = bins[i];
        auto& d = res.diagnostics[k];
        d.residual = fit.residual_norm;
        d.window_energy = fit.window_energy;
        d.lrm_condition = fit.condition;
        d.fit_status = fit.status;
        d.fallback = fit.status == FitStatus::fallback;
        d.message = fit.message;
        if (fit.status == FitStatus::failed) {
            d.flagged = true;
            continue;
        }
        res.G[k] = fit.G;
        res.T[k] = fit.T;
        res.S_lifted[k] = fit.G.topRows(nuf);
        res.PS_row[k] = fit.G.bottomRows(idx(ny));
        d.inversion_condition = inv[i].condition;
        if (inv[i].flagged) {
            d.flagged = true;
            if (!d.message.empty()) d.message += "; ";
            d.message += "lifted sensitivity ill-conditioned (condition " + std::to_string(inv[i].condition) + ")";
            continue;
        }
        res.P_row_lifted[k] = time_row_to_frf_row(inv[i].value, factor, nu, res.slow_grid.zeta(k));
        res.slow_flags[k] = false;
    }

    const FrequencyGrid fast_grid(n, th);
    res.P_hat = recover_P(res.P_row_lifted, factor, nu, fast_grid, &res.slow_flags);
    res.fast_flags.resize(n);
    for (std::size_t k = 0; k < n; ++k) res.fast_flags[k] = res.slow_flags[k % m];
    return res;
}

} // namespace mrfrf
