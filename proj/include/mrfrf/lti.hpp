#pragma once

#include "mrfrf/core.hpp"
#include "mrfrf/signal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <string>
#include <vector>

namespace mrfrf {

/// Polynomial in the lag operator: c[0] + c[1] q^{-1} + c[2] q^{-2} + ...
using LagPolynomial = std::vector<double>;

inline cd eval_lag(const LagPolynomial& c, cd zeta) {
    cd acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * zeta + *it;
    return acc;
}

/// Rational transfer-function matrix, one B/A pair per (output, input) entry,
/// stored row-major. Every denominator is monic in q^0.
class RationalTF {
public:
    RationalTF() = default;

    RationalTF(std::size_t n_outputs, std::size_t n_inputs, std::vector<LagPolynomial> num,
               std::vector<LagPolynomial> den, double sample_time)
        : ny_(n_outputs), nu_(n_inputs), num_(std::move(num)), den_(std::move(den)), ts_(sample_time) {
        validate();
    }

    static RationalTF siso(LagPolynomial num, LagPolynomial den, double ts) {
        return {1, 1, {std::move(num)}, {std::move(den)}, ts};
    }
    static RationalTF gain(const Matrix& g, double ts) {
        std::vector<LagPolynomial> num, den;
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            for (Eigen::Index j = 0; j < g.cols(); ++j) {
                num.push_back({g(i, j)});
                den.push_back({1.0});
            }
        return {static_cast<std::size_t>(g.rows()), static_cast<std::size_t>(g.cols()), num, den, ts};
    }
    static RationalTF zero(std::size_t ny, std::size_t nu, double ts) {
        return gain(Matrix::Zero(idx(ny), idx(nu)), ts);
    }
    static RationalTF identity(std::size_t n, double ts) { return gain(Matrix::Identity(idx(n), idx(n)), ts); }

    /// Block-row concatenation [a b] of two systems sharing outputs and sample time.
    static RationalTF hstack(const RationalTF& a, const RationalTF& b) {
        if (a.ny_ != b.ny_) throw InvalidArgument("hstack: output counts differ");
        if (!same_sample_time(a.ts_, b.ts_)) throw RateMismatch("hstack: sample times differ");
        std::vector<LagPolynomial> num, den;
        for (std::size_t i = 0; i < a.ny_; ++i) {
            for (std::size_t j = 0; j < a.nu_; ++j) {
                num.push_back(a.num(i, j));
                den.push_back(a.den(i, j));
            }
            for (std::size_t j = 0; j < b.nu_; ++j) {
                num.push_back(b.num(i, j));
                den.push_back(b.den(i, j));
            }
        }
        return {a.ny_, a.nu_ + b.nu_, num, den, a.ts_};
    }

    [[nodiscard]] std::size_t n_outputs() const noexcept { return ny_; }
    [[nodiscard]] std::size_t n_inputs() const noexcept { return nu_; }
    [[nodiscard]] double sample_time() const noexcept { return ts_; }
    [[nodiscard]] const LagPolynomial& num(std::size_t i, std::size_t j) const { return num_[i * nu_ + j]; }
    [[nodiscard]] const LagPolynomial& den(std::size_t i, std::size_t j) const { return den_[i * nu_ + j]; }

    [[nodiscard]] cd eval(std::size_t i, std::size_t j, cd zeta) const {
        return eval_lag(num(i, j), zeta) / eval_lag(den(i, j), zeta);
    }

    [[nodiscard]] bool is_zero() const {
        return std::all_of(num_.begin(), num_.end(), [](const LagPolynomial& p) {
            return std::all_of(p.begin(), p.end(), [](double c) { return c == 0.0; });
        });
    }

private:
    void validate() const {
        if (ny_ == 0 || nu_ == 0) throw InvalidArgument("rational system needs positive dimensions");
        if (num_.size() != ny_ * nu_ || den_.size() != ny_ * nu_)
            throw InvalidArgument("rational system: expected " + std::to_string(ny_ * nu_) + " entries");
        if (!(ts_ > 0.0) || !std::isfinite(ts_)) throw InvalidArgument("rational system: sample time must be positive");
        for (std::size_t e = 0; e < num_.size(); ++e) {
            if (num_[e].empty() || den_[e].empty())
                throw InvalidArgument("rational system: coefficient arrays must be non-empty");
            if (den_[e][0] != 1.0)
                throw InvalidArgument("rational system: denominator of entry " + std::to_string(e) +
                                      " must have constant coefficient exactly 1");
            for (double c : num_[e])
                if (!std::isfinite(c)) throw InvalidArgument("rational system: non-finite coefficient");
            for (double c : den_[e])
                if (!std::isfinite(c)) throw InvalidArgument("rational system: non-finite coefficient");
        }
    }

    std::size_t ny_ = 0;
    std::size_t nu_ = 0;
    std::vector<LagPolynomial> num_;
    std::vector<LagPolynomial> den_;
    double ts_ = 1.0;
};

struct StateSpace {
    Matrix A, B, C, D;
    double sample_time = 1.0;

    StateSpace() = default;
    StateSpace(Matrix a, Matrix b, Matrix c, Matrix d, double ts)
        : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)), sample_time(ts) {
        validate();
    }

    [[nodiscard]] std::size_t states() const noexcept { return static_cast<std::size_t>(A.rows()); }
    [[nodiscard]] std::size_t n_inputs() const noexcept { return static_cast<std::size_t>(D.cols()); }
    [[nodiscard]] std::size_t n_outputs() const noexcept { return static_cast<std::size_t>(D.rows()); }

    void validate() const {
        const auto n = A.rows();
        if (A.cols() != n || B.rows() != n || C.cols() != n || C.rows() != D.rows() || B.cols() != D.cols())
            throw InvalidArgument("state-space dimensions are inconsistent");
        if (!(sample_time > 0.0)) throw InvalidArgument("state-space sample time must be positive");
    }
};

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

inline double spectral_radius(const Matrix& a) {
    if (a.rows() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(a, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Largest pole magnitude of a monic lag polynomial, via its companion matrix.
inline double pole_radius(const LagPolynomial& den) {
    std::size_t n = den.size();
    while (n > 1 && den[n - 1] == 0.0) --n;
    const std::size_t order = n - 1;
    if (order == 0) return 0.0;
    Matrix comp = Matrix::Zero(idx(order), idx(order));
    for (std::size_t i = 0; i < order; ++i) comp(0, idx(i)) = -den[i + 1];
    for (std::size_t i = 1; i < order; ++i) comp(idx(i), idx(i - 1)) = 1.0;
    return spectral_radius(comp);
}

inline constexpr double kStabilityMargin = 1e-9;

inline double pole_radius(const RationalTF& sys) {
    double r = 0.0;
    for (std::size_t i = 0; i < sys.n_outputs(); ++i)
        for (std::size_t j = 0; j < sys.n_inputs(); ++j) r = std::max(r, pole_radius(sys.den(i, j)));
    return r;
}

inline bool is_stable(const RationalTF& sys) { return pole_radius(sys) < 1.0 - kStabilityMargin; }
inline bool is_stable(const StateSpace& sys) { return spectral_radius(sys.A) < 1.0 - kStabilityMargin; }

// ---------------------------------------------------------------------------
// Frequency response
// ---------------------------------------------------------------------------

/// Evaluates every entry at q^{-1} = exp(-j w_k T) on the full grid.
inline FrfMatrix freq_response(const RationalTF& sys, const FrequencyGrid& grid) {
    if (!same_sample_time(sys.sample_time(), grid.sample_time))
        throw RateMismatch("freq_response: system and grid sample times differ");
    FrfMatrix out(grid, sys.n_outputs(), sys.n_inputs());
    for (std::size_t k = 0; k < grid.bins; ++k) {
        const cd z = grid.zeta(k);
        for (std::size_t i = 0; i < sys.n_outputs(); ++i)
            for (std::size_t j = 0; j < sys.n_inputs(); ++j) {
                const auto& den = sys.den(i, j);
                const cd a = eval_lag(den, z);
                double scale = 0.0;
                for (double c : den) scale += std::abs(c);
                if (std::abs(a) <= 1e-13 * scale)
                    throw PoleOnGrid(k, "freq_response: pole of entry (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") on grid bin " + std::to_string(k));
                out[k](idx(i), idx(j)) = eval_lag(sys.num(i, j), z) / a;
            }
    }
    return out;
}

/// D + C (zI - A)^{-1} B with z = exp(j w_k T).
inline FrfMatrix freq_response(const StateSpace& sys, const FrequencyGrid& grid) {
    if (!same_sample_time(sys.sample_time, grid.sample_time))
        throw RateMismatch("freq_response: system and grid sample times differ");
    FrfMatrix out(grid, sys.n_outputs(), sys.n_inputs());
    const auto n = sys.A.rows();
    const CMatrix Ac = sys.A.cast<cd>();
    const CMatrix Bc = sys.B.cast<cd>();
    const CMatrix Cc = sys.C.cast<cd>();
    const CMatrix Dc = sys.D.cast<cd>();
    for (std::size_t k = 0; k < grid.bins; ++k) {
        if (n == 0) {
            out[k] = Dc;
            continue;
        }
        const cd z = 1.0 / grid.zeta(k);
        CMatrix m = z * CMatrix::Identity(n, n) - Ac;
        Eigen::PartialPivLU<CMatrix> lu(m);
        out[k] = Dc + Cc * lu.solve(Bc);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Realization
// ---------------------------------------------------------------------------

namespace detail {

/// Controllable canonical form of a single b/a entry.
inline StateSpace realize_siso(const LagPolynomial& num, const LagPolynomial& den, double ts) {
    std::size_t n_den = den.size();
    while (n_den > 1 && den[n_den - 1] == 0.0) --n_den;
    std::size_t n_num = num.size();
    while (n_num > 1 && num[n_num - 1] == 0.0) --n_num;
    const std::size_t order = std::max(n_den, n_num) - 1;
    auto a = [&](std::size_t i) { return i < n_den ? den[i] : 0.0; };
    auto b = [&](std::size_t i) { return i < n_num ? num[i] : 0.0; };

    Matrix A = Matrix::Zero(idx(order), idx(order));
    Matrix B = Matrix::Zero(idx(order), 1);
    Matrix C = Matrix::Zero(1, idx(order));
    Matrix D = Matrix::Constant(1, 1, b(0));
    for (std::size_t i = 0; i < order; ++i) {
        A(0, idx(i)) = -a(i + 1);
        C(0, idx(i)) = b(i + 1) - b(0) * a(i + 1);
    }
    for (std::size_t i = 1; i < order; ++i) A(idx(i), idx(i - 1)) = 1.0;
    if (order > 0) B(0, 0) = 1.0;
    return {A, B, C, D, ts};
}

} // namespace detail

/// Block-diagonal assembly of per-entry canonical realizations (not minimal).
inline StateSpace to_state_space(const RationalTF& sys) {
    const std::size_t ny = sys.n_outputs(), nu = sys.n_inputs();
    std::vector<StateSpace> parts;
    std::size_t total = 0;
    for (std::size_t i = 0; i < ny; ++i)
        for (std::size_t j = 0; j < nu; ++j) {
            parts.push_back(detail::realize_siso(sys.num(i, j), sys.den(i, j), sys.sample_time()));
            total += parts.back().states();
        }
    Matrix A = Matrix::Zero(idx(total), idx(total));
    Matrix B = Matrix::Zero(idx(total), idx(nu));
    Matrix C = Matrix::Zero(idx(ny), idx(total));
    Matrix D = Matrix::Zero(idx(ny), idx(nu));
    std::size_t off = 0;
    for (std::size_t i = 0; i < ny; ++i)
        for (std::size_t j = 0; j < nu; ++j) {
            const auto& p = parts[i * nu + j];
            const auto n = idx(p.states());
            A.block(idx(off), idx(off), n, n) = p.A;
            B.block(idx(off), idx(j), n, 1) = p.B;
            C.block(idx(i), idx(off), 1, n) = p.C;
            D(idx(i), idx(j)) = p.D(0, 0);
            off += p.states();
        }
    return {A, B, C, D, sys.sample_time()};
}

// ---------------------------------------------------------------------------
// Time-domain filtering
// ---------------------------------------------------------------------------

/// x(n+1) = A x(n) + B u(n), y(n) = C x(n) + D u(n); zero initial state unless given.
inline SignalRecord filter(const StateSpace& sys, const SignalRecord& u, const std::optional<Vector>& x0 = std::nullopt) {
    if (!same_sample_time(u.sample_time, sys.sample_time))
        throw RateMismatch("filter: signal sample time differs from system sample time");
    if (u.channels() != sys.n_inputs())
        throw InvalidArgument("filter: signal has " + std::to_string(u.channels()) + " channels, system expects " +
                              std::to_string(sys.n_inputs()));
    Vector x = x0.value_or(Vector::Zero(sys.A.rows()));
    if (x.size() != sys.A.rows()) throw InvalidArgument("filter: initial state has wrong dimension");
    Matrix y(sys.C.rows(), u.data.cols());
    for (Eigen::Index n = 0; n < u.data.cols(); ++n) {
        const auto un = u.data.col(n);
        y.col(n) = sys.C * x + sys.D * un;
        x = sys.A * x + sys.B * un;
    }
    return {std::move(y), u.sample_time, u.rate};
}

inline SignalRecord filter(const RationalTF& sys, const SignalRecord& u) { return filter(to_state_space(sys), u); }

} // namespace mrfrf
