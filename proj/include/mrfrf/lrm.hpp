#pragma once

#include "mrfrf/core.hpp"
#include "mrfrf/parallel.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mrfrf {

// Local rational modeling: in a window r = -n_w..n_w around bin k,
//   D(r) Z(k+r) ~ N(r) R(k+r) + M(r),   D(0) = I,
// with matrix polynomials N (degree R_n), M (degree R_m) and D (degree R_d)
// in the local variable r. G(k) = N(0) and T(k) = M(0) are read directly
// from the linear least-squares solution.

enum class DenominatorForm {
    full,     ///< D_s full n_z x n_z
    diagonal, ///< D_s = diag(d_{s,1}, ..., d_{s,n_z}); rows decouple
};

struct LocalModelConfig {
    std::size_t Rn = 3;
    std::size_t Rm = 3;
    std::size_t Rd = 3;
    std::size_t nw = 30;
    DenominatorForm denominator = DenominatorForm::diagonal;
    bool normalize = true; ///< use r / n_w as the polynomial variable
    double cond_threshold = 1e12;

    void validate() const {
        if (!(cond_threshold > 1.0)) throw InvalidArgument("lrm: condition threshold must exceed 1");
    }
};

struct ParamCount {
    std::size_t parameters = 0;   ///< total complex decision parameters
    std::size_t data_points = 0;  ///< (2 n_w + 1) n_z complex equations
    std::size_t per_row_parameters = 0;
    std::size_t per_row_equations = 0;

    [[nodiscard]] bool feasible() const { return per_row_equations >= per_row_parameters && data_points >= parameters; }
};

/// Counts for the lifted fit: n_z = n_u F + n_y stacked outputs, n_u F lifted excitations.
inline ParamCount param_count(const LocalModelConfig& cfg, std::size_t n_u, std::size_t n_y, std::size_t factor) {
    const std::size_t nz = n_u * factor + n_y;
    const std::size_t nr = n_u * factor;
    ParamCount pc;
    const std::size_t den = cfg.denominator == DenominatorForm::diagonal ? cfg.Rd : nz * cfg.Rd;
    pc.per_row_parameters = nr * (cfg.Rn + 1) + cfg.Rm + 1 + den;
    pc.parameters = nz * pc.per_row_parameters;
    pc.per_row_equations = 2 * cfg.nw + 1;
    pc.data_points = pc.per_row_equations * nz;
    return pc;
}

enum class FitStatus { ok, fallback, failed };

inline const char* to_string(FitStatus s) {
    switch (s) {
    case FitStatus::ok: return "ok";
    case FitStatus::fallback: return "fallback";
    case FitStatus::failed: return "failed";
    }
    return "?";
}

struct LocalFitResult {
    std::size_t bin = 0;
    CMatrix G;                  ///< n_z x n_r system estimate at the center bin
    CVector T;                  ///< n_z transient estimate at the center bin
    double residual_norm = 0.0; ///< sqrt of the weighted criterion at the optimum
    double window_energy = 0.0; ///< sum_r ||Z(k+r)||^2
    double condition = 0.0;     ///< largest per-row condition number of the equilibrated regressor
    FitStatus status = FitStatus::ok;
    std::string message;
    std::vector<std::size_t> window;
};

namespace detail {

struct LsSolution {
    CVector x;
    double condition = 0.0;
    Eigen::Index rank = 0;
    double residual_sq = 0.0;
};

/// min ||A x - b|| by column-pivoted Householder QR on the column-equilibrated regressor.
inline LsSolution solve_ls(const CMatrix& a, const CVector& b) {
    const Eigen::Index n = a.cols();
    Vector scale(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double nrm = a.col(j).norm();
        scale(j) = nrm > 0.0 ? 1.0 / nrm : 1.0;
    }
    const CMatrix as = a * scale.cast<cd>().asDiagonal();
    Eigen::ColPivHouseholderQR<CMatrix> qr(as);
    LsSolution out;
    out.rank = qr.rank();
    const CMatrix r = qr.matrixR().topRows(n).triangularView<Eigen::Upper>();
    const Vector sv = Eigen::JacobiSVD<CMatrix>(r).singularValues();
    out.condition = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
    if (out.rank < n) return out;
    out.x = scale.cast<cd>().asDiagonal() * qr.solve(b);
    out.residual_sq = (a * out.x - b).squaredNorm();
    return out;
}

struct RowFit {
    CVector g; ///< n_r system coefficients at r = 0
    cd t;      ///< transient at r = 0
    double residual_sq = 0.0;
    double condition = 1.0;
};

/// One output row: Z_o(r) = N_o(r) R(r) + M_o(r) - sum_s rho^s d_s . Z_den(r).
inline RowFit fit_row(const CMatrix& zwin, const CMatrix& rwin, const Vector& rho, Eigen::Index row,
                      const std::vector<Eigen::Index>& den_rows, std::size_t rn, std::size_t rm, std::size_t rd) {
    const Eigen::Index w = zwin.cols();
    const Eigen::Index nr = rwin.rows();
    const auto n_num = nr * idx(rn + 1);
    const auto n_tr = idx(rm + 1);
    const auto n_den = idx(rd) * static_cast<Eigen::Index>(den_rows.size());
    CMatrix a(w, n_num + n_tr + n_den);
    CVector b = zwin.row(row).transpose();
    for (Eigen::Index r = 0; r < w; ++r) {
        double p = 1.0;
        for (std::size_t s = 0; s <= rn; ++s, p *= rho(r))
            for (Eigen::Index c = 0; c < nr; ++c) a(r, idx(s) * nr + c) = p * rwin(c, r);
        p = 1.0;
        for (std::size_t s = 0; s <= rm; ++s, p *= rho(r)) a(r, n_num + idx(s)) = p;
        p = rho(r);
        for (std::size_t s = 1; s <= rd; ++s, p *= rho(r))
            for (std::size_t q = 0; q < den_rows.size(); ++q)
                a(r, n_num + n_tr + idx(s - 1) * static_cast<Eigen::Index>(den_rows.size()) + idx(q)) =
                    -p * zwin(den_rows[q], r);
    }
    const LsSolution sol = solve_ls(a, b);
    if (sol.rank < a.cols())
        throw RankDeficient(sol.condition, "lrm: rank-deficient regressor (rank " + std::to_string(sol.rank) + " of " +
                                               std::to_string(a.cols()) + ", condition " +
                                               std::to_string(sol.condition) + ")");
    return {sol.x.head(nr), sol.x(n_num), sol.residual_sq, sol.condition};
}

} // namespace detail

/// Weighted linear least-squares local rational fit at center bin k. Windows wrap modulo M.
inline LocalFitResult fit_local(const CMatrix& z, const CMatrix& r, std::size_t k, const LocalModelConfig& cfg) {
    cfg.validate();
    const std::size_t m = static_cast<std::size_t>(z.cols());
    if (r.cols() != z.cols()) throw InvalidArgument("fit_local: Z and R must share the bin count");
    if (k >= m) throw InvalidArgument("fit_local: bin out of range");
    const Eigen::Index nz = z.rows(), nr = r.rows();
    const std::size_t width = 2 * cfg.nw + 1;
    if (width > m) throw InvalidArgument("fit_local: window wider than the grid");
    const std::size_t den_per_row = cfg.denominator == DenominatorForm::diagonal ? cfg.Rd : static_cast<std::size_t>(nz) * cfg.Rd;
    const std::size_t unknowns = static_cast<std::size_t>(nr) * (cfg.Rn + 1) + cfg.Rm + 1 + den_per_row;
    if (width < unknowns)
        throw InvalidArgument("fit_local: " + std::to_string(width) + " equations per row for " +
                              std::to_string(unknowns) + " unknowns; widen the window or lower the degrees");

    LocalFitResult res;
    res.bin = k;
    res.window.resize(width);
    CMatrix zwin(nz, idx(width)), rwin(nr, idx(width));
    Vector rho(idx(width));
    for (std::size_t i = 0; i < width; ++i) {
        const long long off = static_cast<long long>(i) - static_cast<long long>(cfg.nw);
        const std::size_t bin = static_cast<std::size_t>((static_cast<long long>(k) + off + static_cast<long long>(m)) %
                                                         static_cast<long long>(m));
        res.window[i] = bin;
        zwin.col(idx(i)) = z.col(idx(bin));
        rwin.col(idx(i)) = r.col(idx(bin));
        rho(idx(i)) = cfg.normalize && cfg.nw > 0 ? static_cast<double>(off) / static_cast<double>(cfg.nw)
                                                  : static_cast<double>(off);
    }
    res.window_energy = zwin.squaredNorm();

    // Rows that vanish over the window carry no denominator information.
    std::vector<Eigen::Index> live;
    for (Eigen::Index o = 0; o < nz; ++o)
        if (zwin.row(o).squaredNorm() > 0.0) live.push_back(o);

    auto solve_all = [&](std::size_t rd) {
        res.G.resize(nz, nr);
        res.T.resize(nz);
        double cost = 0.0, cond = 1.0;
        for (Eigen::Index o = 0; o < nz; ++o) {
            std::vector<Eigen::Index> den_rows;
            const bool row_live = std::find(live.begin(), live.end(), o) != live.end();
            if (row_live) {
                if (cfg.denominator == DenominatorForm::diagonal)
                    den_rows = {o};
                else
                    den_rows = live;
            }
            const auto rf = detail::fit_row(zwin, rwin, rho, o, den_rows, cfg.Rn, cfg.Rm, row_live ? rd : 0);
            res.G.row(o) = rf.g.transpose();
            res.T(o) = rf.t;
            cost += rf.residual_sq;
            cond = std::max(cond, rf.condition);
        }
        res.residual_norm = std::sqrt(cost);
        res.condition = cond;
    };

    solve_all(cfg.Rd);
    if (res.condition > cfg.cond_threshold && cfg.Rd > 0) {
        const double rational_cond = res.condition;
        solve_all(0);
        res.status = FitStatus::fallback;
        res.message = "condition " + std::to_string(rational_cond) + " above threshold; fell back to D = I";
    }
    return res;
}

/// Independent fits for each requested bin, in input order. Failures are recorded, not thrown.
inline std::vector<LocalFitResult> sweep_bins(const CMatrix& z, const CMatrix& r, const std::vector<std::size_t>& bins,
                                              const LocalModelConfig& cfg) {
    std::vector<LocalFitResult> out(bins.size());
    parallel_for(bins.size(), [&](std::size_t i) {
        try {
            out[i] = fit_local(z, r, bins[i], cfg);
        } catch (const RankDeficient& e) {
            out[i].bin = bins[i];
            out[i].status = FitStatus::failed;
            out[i].condition = e.condition();
            out[i].message = e.what();
        } catch (const std::exception& e) {
            out[i].bin = bins[i];
            out[i].status = FitStatus::failed;
            out[i].condition = std::numeric_limits<double>::infinity();
            out[i].message = e.what();
        }
    });
    return out;
}

} // namespace mrfrf
