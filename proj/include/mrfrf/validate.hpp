#pragma once

#include "mrfrf/bench.hpp"
#include "mrfrf/core.hpp"
#include "mrfrf/lifted_ident.hpp"
#include "mrfrf/loop_sim.hpp"
#include "mrfrf/lrm.hpp"
#include "mrfrf/lti.hpp"
#include "mrfrf/multirate.hpp"
#include "mrfrf/spectral.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace mrfrf {

// ---------------------------------------------------------------------------
// Random generators shared by the validator and the test suite
// ---------------------------------------------------------------------------

namespace gen {

/// Uniform in [lo, hi) from the raw engine output; identical across standard libraries.
inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

/// Monic lag polynomial of the given degree with poles of radius in [0.1, max_radius].
inline LagPolynomial stable_denominator(std::mt19937_64& rng, std::size_t degree, double max_radius = 0.95) {
    LagPolynomial a{1.0};
    std::size_t placed = 0;
    while (placed < degree) {
        const double r = uniform(rng, 0.1, max_radius);
        if (degree - placed >= 2 && uniform(rng) < 0.7) {
            const double th = uniform(rng, 0.05, std::numbers::pi - 0.05);
            a = detail::poly_mul(a, {1.0, -2.0 * r * std::cos(th), r * r});
            placed += 2;
        } else {
            a = detail::poly_mul(a, {1.0, uniform(rng) < 0.5 ? -r : r});
            placed += 1;
        }
    }
    return a;
}

/// Random stable rational matrix; each entry has its own denominator of degree <= max_order.
inline RationalTF stable_plant(std::mt19937_64& rng, std::size_t ny, std::size_t nu, std::size_t max_order, double ts) {
    std::vector<LagPolynomial> num, den;
    for (std::size_t e = 0; e < ny * nu; ++e) {
        const std::size_t order = below(rng, max_order + 1);
        LagPolynomial b(order + 1);
        for (auto& c : b) c = uniform(rng, -1.0, 1.0);
        num.push_back(std::move(b));
        den.push_back(stable_denominator(rng, order));
    }
    return {ny, nu, std::move(num), std::move(den), ts};
}

inline Matrix gaussian_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    Matrix m(idx(rows), idx(cols));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            // Box-Muller on the portable uniform
            const double u1 = uniform(rng, 1e-300, 1.0), u2 = uniform(rng);
            m(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
    return m;
}

inline CMatrix complex_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    const Matrix re = gaussian_matrix(rng, rows, cols), im = gaussian_matrix(rng, rows, cols);
    CMatrix out(re.rows(), re.cols());
    out.real() = re;
    out.imag() = im;
    return out;
}

} // namespace gen

// ---------------------------------------------------------------------------
// Oracle helpers
// ---------------------------------------------------------------------------

/// Per-bin ||A(k) - B(k)||_F / ||B(k)||_F, maximized over bins. Bins where B vanishes use the absolute error.
inline double max_relative_error(const FrfMatrix& a, const FrfMatrix& b) {
    if (a.bins() != b.bins()) throw InvalidArgument("max_relative_error: bin counts differ");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.bins(); ++k) {
        const double nb = b[k].norm();
        const double d = (a[k] - b[k]).norm();
        worst = std::max(worst, nb > 0.0 ? d / nb : d);
    }
    return worst;
}

inline double max_abs_error(const FrfMatrix& a, const FrfMatrix& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.bins(); ++k) worst = std::max(worst, (a[k] - b[k]).cwiseAbs().maxCoeff());
    return worst;
}

/// Lifting of a single-rate state-space system over F steps:
/// x+ = A^F x + [A^{F-1}B .. B] u_lift, y_lift rows C A^i x + lower-triangular Markov blocks.
inline StateSpace lift_state_space(const StateSpace& s, std::size_t factor) {
    const auto n = s.A.rows(), nu = s.B.cols(), ny = s.C.rows(), f = idx(factor);
    std::vector<Matrix> apow{Matrix::Identity(n, n)};
    for (Eigen::Index i = 1; i <= f; ++i) apow.push_back(s.A * apow.back());
    Matrix a = apow[static_cast<std::size_t>(f)];
    Matrix b(n, nu * f), c(ny * f, n), d = Matrix::Zero(ny * f, nu * f);
    for (Eigen::Index j = 0; j < f; ++j) b.middleCols(j * nu, nu) = apow[static_cast<std::size_t>(f - 1 - j)] * s.B;
    for (Eigen::Index i = 0; i < f; ++i) {
        c.middleRows(i * ny, ny) = s.C * apow[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j <= i; ++j)
            d.block(i * ny, j * nu, ny, nu) = i == j ? s.D : Matrix(s.C * apow[static_cast<std::size_t>(i - j - 1)] * s.B);
    }
    return {a, b, c, d, s.sample_time * static_cast<double>(factor)};
}

struct LiftedLoopMaps {
    FrfMatrix S;  ///< lifted r -> lifted u
    FrfMatrix PS; ///< lifted r -> y_l
};

/// Closed-loop lifted maps composed in the frequency domain from lifted open-loop blocks:
///   S = (I + Flt H C E P)^{-1},  PS = E P S,
/// H stacking the held controller output F times and E selecting the first output block.
inline LiftedLoopMaps analytic_lifted_loop(const MultirateLoopSpec& loop, const FrequencyGrid& slow_grid) {
    const std::size_t f = loop.factor;
    const auto nu = idx(loop.n_inputs()), ny = idx(loop.n_outputs()), ff = idx(f);
    const FrfMatrix p = freq_response(lift_state_space(to_state_space(loop.plant), f), slow_grid);
    const FrfMatrix flt = freq_response(lift_state_space(to_state_space(loop.filters_or_identity()), f), slow_grid);
    const FrfMatrix c = freq_response(loop.controller, slow_grid);
    CMatrix hold(nu * ff, nu), sel = CMatrix::Zero(ny, ny * ff);
    for (Eigen::Index i = 0; i < ff; ++i) hold.middleRows(i * nu, nu) = CMatrix::Identity(nu, nu);
    sel.leftCols(ny) = CMatrix::Identity(ny, ny);
    LiftedLoopMaps out{FrfMatrix(slow_grid, loop.n_inputs() * f, loop.n_inputs() * f),
                       FrfMatrix(slow_grid, loop.n_outputs(), loop.n_inputs() * f)};
    for (std::size_t k = 0; k < slow_grid.bins; ++k) {
        const CMatrix l = CMatrix::Identity(nu * ff, nu * ff) + flt[k] * hold * c[k] * sel * p[k];
        out.S[k] = l.fullPivLu().inverse();
        out.PS[k] = sel * p[k] * out.S[k];
    }
    return out;
}

/// Splits the FRF of lift_loop_state_space into its r -> u and r -> y_l blocks.
inline LiftedLoopMaps state_space_lifted_loop(const MultirateLoopSpec& loop, const FrequencyGrid& slow_grid) {
    const FrfMatrix full = freq_response(lift_loop_state_space(loop), slow_grid);
    const auto nr = idx(loop.n_inputs() * loop.factor), ny = idx(loop.n_outputs());
    LiftedLoopMaps out{FrfMatrix(slow_grid, static_cast<std::size_t>(nr), static_cast<std::size_t>(nr)),
                       FrfMatrix(slow_grid, static_cast<std::size_t>(ny), static_cast<std::size_t>(nr))};
    for (std::size_t k = 0; k < slow_grid.bins; ++k) {
        out.S[k] = full[k].topLeftCorner(nr, nr);
        out.PS[k] = full[k].block(nr, 0, ny, nr);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

struct SuiteResult {
    std::string name;
    bool passed = false;
    double max_error = 0.0;
    double tolerance = 0.0;
    std::size_t cases = 0;
    double seconds = 0.0;
    std::string detail;
};

struct ValidationOptions {
    std::uint64_t seed = 1;
    std::size_t roundtrip_plants = 50;
    std::size_t aliasing_signals = 100;
    std::size_t solver_instances = 20;
    /// "recovery-sign" flips the recovery prefactor exponent.
    std::string mutation;
};

inline std::vector<std::string> mutation_names() { return {"recovery-sign"}; }

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

template <typename Fn>
SuiteResult timed_suite(const std::string& name, double tolerance, Fn&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult r;
    r.name = name;
    r.tolerance = tolerance;
    try {
        body(r);
        r.passed = std::isfinite(r.max_error) && r.max_error < tolerance && r.detail.find("FAIL") == std::string::npos;
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

} // namespace detail

/// recover_P(first row of lift_frf(P)) against freq_response(P) for random stable plants up to 2x2, order <= 8.
inline SuiteResult suite_lifting_roundtrip(const ValidationOptions& opt) {
    return detail::timed_suite("lifting_roundtrip", 1e-10, [&](SuiteResult& r) {
        std::mt19937_64 rng(detail::splitmix64(opt.seed ^ 0x11));
        const int sign = opt.mutation == "recovery-sign" ? -1 : +1;
        for (std::size_t i = 0; i < opt.roundtrip_plants; ++i) {
            const std::size_t f = 2 + i % 3;
            const std::size_t ny = 1 + gen::below(rng, 2), nu = 1 + gen::below(rng, 2);
            const std::size_t n = f * (24 + gen::below(rng, 40));
            const RationalTF p = gen::stable_plant(rng, ny, nu, 8, 1e-3);
            const FrequencyGrid grid(n, p.sample_time());
            const FrfMatrix truth = freq_response(p, grid);
            const LiftedFrf lifted = lift_frf(truth, f);
            const FrfMatrix rec = detail::recover_P(first_rows(lifted), f, nu, grid, sign);
            r.max_error = std::max(r.max_error, max_relative_error(rec, truth));
            ++r.cases;
        }
        r.detail = std::to_string(r.cases) + " plants, F in {2,3,4}";
        if (sign < 0) r.detail += ", mutation recovery-sign active";
    });
}

/// P(q) = q^{-1}, F = 2: polyphase components 0 and zeta^2, recovery zeta on every bin.
inline SuiteResult suite_delay_pin(const ValidationOptions& opt) {
    return detail::timed_suite("delay_pin", 1e-12, [&](SuiteResult& r) {
        const std::size_t n = kBenchmarkSamples, f = 2, m = n / f;
        const RationalTF delay = RationalTF::siso({0.0, 1.0}, {1.0}, kBenchmarkFastSampleTime);
        const FrequencyGrid grid(n, delay.sample_time());
        const FrfMatrix p = freq_response(delay, grid);
        const LiftedFrf lifted = lift_frf(p, f);
        for (std::size_t k = 0; k < m; ++k) {
            const cd z = grid.zeta(k);
            r.max_error = std::max(r.max_error, std::abs(polyphase_component(p, f, 0, k)(0, 0)));
            r.max_error = std::max(r.max_error, std::abs(polyphase_component(p, f, 1, k)(0, 0) - z * z));
            r.max_error = std::max(r.max_error, std::abs(lifted.block(k, 1, 0)(0, 0) - z * z));
            r.max_error = std::max(r.max_error, std::abs(lifted.block(k, 0, 1)(0, 0) - z * z * z * z));
        }
        const int sign = opt.mutation == "recovery-sign" ? -1 : +1;
        const FrfMatrix rec = detail::recover_P(first_rows(lifted), f, 1, grid, sign);
        for (std::size_t k = 0; k < n; ++k) r.max_error = std::max(r.max_error, std::abs(rec.at(k, 0, 0) - grid.zeta(k)));
        r.cases = n;
        r.detail = "N=3600, F=2";
    });
}

/// alias_slow_spectrum(dft(x)) against dft(downsample(x)) for random unit-scale signals.
inline SuiteResult suite_aliasing(const ValidationOptions& opt) {
    return detail::timed_suite("aliasing", 1e-12, [&](SuiteResult& r) {
        std::mt19937_64 rng(detail::splitmix64(opt.seed ^ 0x22));
        for (std::size_t i = 0; i < opt.aliasing_signals; ++i) {
            const std::size_t f = 2 + i % 3;
            const std::size_t ch = 1 + gen::below(rng, 2);
            const std::size_t n = f * (1 + gen::below(rng, 200));
            Matrix x = gen::gaussian_matrix(rng, ch, n);
            x /= std::max(1.0, x.cwiseAbs().maxCoeff());
            const SignalRecord rec(x, 1.0, RateTag::fast);
            const Spectrum lhs = alias_slow_spectrum(dft(rec), f);
            const Spectrum rhs = dft(downsample(rec, f));
            r.max_error = std::max(r.max_error, (lhs.data - rhs.data).cwiseAbs().maxCoeff());
            ++r.cases;
        }
        r.detail = std::to_string(r.cases) + " signals, F in {2,3,4}";
    });
}

/// lift_loop_state_space against the frequency-domain composition of lifted open-loop blocks,
/// on the benchmark loop, random SISO loops, and the open-loop and zero-plant limits.
inline SuiteResult suite_lifted_loop_oracle(const ValidationOptions& opt) {
    return detail::timed_suite("lifted_loop_oracle", 1e-9, [&](SuiteResult& r) {
        std::vector<MultirateLoopSpec> loops;
        loops.push_back(build_benchmark_scenario("benchmark").loop);
        std::mt19937_64 rng(detail::splitmix64(opt.seed ^ 0x33));
        for (std::size_t i = 0; loops.size() < 6 && i < 200; ++i) {
            MultirateLoopSpec l;
            l.factor = 2 + i % 3;
            l.plant = gen::stable_plant(rng, 1, 1, 4, 1.0);
            const double g = gen::uniform(rng, 0.05, 0.3);
            l.controller = RationalTF::siso({g, -0.5 * g}, gen::stable_denominator(rng, 1, 0.8), static_cast<double>(l.factor));
            if (gen::uniform(rng) < 0.5) l.filters = gen::stable_plant(rng, 1, 1, 2, 1.0);
            try {
                (void)lift_loop_state_space(l);
            } catch (const UnstableSystem&) {
                continue;
            }
            loops.push_back(std::move(l));
        }
        for (const auto& l : loops) {
            const FrequencyGrid g(64, l.slow_sample_time());
            const auto ss = state_space_lifted_loop(l, g);
            const auto an = analytic_lifted_loop(l, g);
            r.max_error = std::max({r.max_error, max_relative_error(ss.S, an.S), max_relative_error(ss.PS, an.PS)});
            ++r.cases;
        }
        // C = 0: r -> u is the identity.  P = 0: r -> y_l vanishes.
        MultirateLoopSpec open = loops.front();
        open.controller = RationalTF::zero(open.n_inputs(), open.n_outputs(), open.slow_sample_time());
        const FrequencyGrid g(64, open.slow_sample_time());
        const auto ol = state_space_lifted_loop(open, g);
        MultirateLoopSpec zero_plant = loops.front();
        zero_plant.plant = RationalTF::zero(zero_plant.n_outputs(), zero_plant.n_inputs(), zero_plant.fast_sample_time());
        const auto zp = state_space_lifted_loop(zero_plant, g);
        for (std::size_t k = 0; k < g.bins; ++k) {
            r.max_error = std::max(r.max_error, (ol.S[k] - CMatrix::Identity(ol.S[k].rows(), ol.S[k].cols())).cwiseAbs().maxCoeff());
            r.max_error = std::max(r.max_error, zp.PS[k].cwiseAbs().maxCoeff());
        }
        r.cases += 2;
        r.detail = std::to_string(loops.size()) + " loops plus open-loop and zero-plant limits";
    });
}

/// Last-period slow output of the simulator against the periodic steady-state prediction
/// on the benchmark loop after two discarded periods.
inline SuiteResult suite_simulator_steady_state(const ValidationOptions& opt) {
    return detail::timed_suite("simulator_steady_state", 1e-8, [&](SuiteResult& r) {
        BenchmarkScenario sc = build_benchmark_scenario("benchmark", opt.seed);
        const SignalRecord ex = build_excitation(sc);
        const SimulationOutput sim = simulate(sc.loop, ex, 1, sc.seed, {2});
        const Spectrum measured = dft(sim.y_l);
        const FrequencyGrid fast(ex.samples(), sc.loop.fast_sample_time());
        const FrequencyGrid slow(ex.samples() / sc.loop.factor, sc.loop.slow_sample_time());
        const Spectrum predicted = predict_slow_output_steady(freq_response(sc.loop.plant, fast),
                                                              freq_response(sc.loop.controller, slow), sc.loop.factor,
                                                              dft(ex));
        double scale = 0.0;
        for (Eigen::Index k = 0; k < predicted.data.cols(); ++k) scale = std::max(scale, predicted.data.col(k).norm());
        for (Eigen::Index k = 0; k < predicted.data.cols(); ++k) {
            // bins carrying less than 1e-6 of the peak output are compared against the peak
            const double ref = std::max(predicted.data.col(k).norm(), 1e-6 * scale);
            r.max_error = std::max(r.max_error, (measured.data.col(k) - predicted.data.col(k)).norm() / ref);
        }
        r.cases = static_cast<std::size_t>(predicted.data.cols());
        r.detail = "benchmark loop, N=3600, 2 periods discarded";
    });
}

namespace detail {

/// Dense normal-equations solve of the same local rational criterion, built independently of the solver.
inline CMatrix normal_equation_fit(const CMatrix& z, const CMatrix& rr, std::size_t k, const LocalModelConfig& cfg,
                                   CVector* transient) {
    const auto nz = z.rows(), nr = rr.rows();
    const auto m = z.cols();
    const auto w = idx(2 * cfg.nw + 1);
    CMatrix g(nz, nr);
    if (transient) transient->resize(nz);
    for (Eigen::Index o = 0; o < nz; ++o) {
        const auto cols = nr * idx(cfg.Rn + 1) + idx(cfg.Rm + 1) + idx(cfg.Rd);
        CMatrix a(w, cols);
        CVector b(w);
        for (Eigen::Index i = 0; i < w; ++i) {
            const long long off = static_cast<long long>(i) - static_cast<long long>(cfg.nw);
            const auto bin = static_cast<Eigen::Index>((static_cast<long long>(k) + off + m) % m);
            const double rho = static_cast<double>(off) / static_cast<double>(cfg.nw);
            Eigen::Index col = 0;
            for (std::size_t s = 0; s <= cfg.Rn; ++s)
                for (Eigen::Index c = 0; c < nr; ++c) a(i, col++) = std::pow(rho, static_cast<double>(s)) * rr(c, bin);
            for (std::size_t s = 0; s <= cfg.Rm; ++s) a(i, col++) = std::pow(rho, static_cast<double>(s));
            for (std::size_t s = 1; s <= cfg.Rd; ++s) a(i, col++) = -std::pow(rho, static_cast<double>(s)) * z(o, bin);
            b(i) = z(o, bin);
        }
        const CMatrix ata = a.adjoint() * a;
        const CVector x = ata.ldlt().solve(a.adjoint() * b);
        g.row(o) = x.head(nr).transpose();
        if (transient) (*transient)(o) = x(nr * idx(cfg.Rn + 1));
    }
    return g;
}

} // namespace detail

/// fit_local on data generated inside the model class, and against a normal-equations oracle on random data.
inline SuiteResult suite_solver_exactness(const ValidationOptions& opt) {
    return detail::timed_suite("solver_exactness", 1e-9, [&](SuiteResult& r) {
        std::mt19937_64 rng(detail::splitmix64(opt.seed ^ 0x44));
        double exact_res = 0.0, exact_par = 0.0, oracle = 0.0;
        for (std::size_t inst = 0; inst < opt.solver_instances; ++inst) {
            LocalModelConfig cfg;
            cfg.Rn = 1 + gen::below(rng, 3);
            cfg.Rm = 1 + gen::below(rng, 3);
            cfg.Rd = 1 + gen::below(rng, 2);
            cfg.nw = 12 + gen::below(rng, 6);
            const std::size_t nz = 1 + gen::below(rng, 3), nr = 1 + gen::below(rng, 2), bins = 64;
            const std::size_t k = gen::below(rng, bins);
            const CMatrix rr = gen::complex_matrix(rng, nr, bins);

            // In-class data: D(rho) z = N(rho) R + M(rho) with D(0) = I diagonal.
            std::vector<CMatrix> num(cfg.Rn + 1);
            std::vector<CVector> tr(cfg.Rm + 1);
            std::vector<CVector> den(cfg.Rd + 1);
            for (auto& c : num) c = gen::complex_matrix(rng, nz, nr);
            for (auto& c : tr) c = gen::complex_matrix(rng, nz, 1);
            for (std::size_t s = 1; s <= cfg.Rd; ++s) den[s] = 0.3 * gen::complex_matrix(rng, nz, 1) / static_cast<double>(s);
            CMatrix z = gen::complex_matrix(rng, nz, bins);
            for (long long off = -static_cast<long long>(cfg.nw); off <= static_cast<long long>(cfg.nw); ++off) {
                const auto bin = idx(static_cast<std::size_t>((static_cast<long long>(k) + off + static_cast<long long>(bins)) %
                                                              static_cast<long long>(bins)));
                const double rho = static_cast<double>(off) / static_cast<double>(cfg.nw);
                CVector rhs = CVector::Zero(idx(nz));
                CVector d = CVector::Ones(idx(nz));
                for (std::size_t s = 0; s <= cfg.Rn; ++s) rhs += std::pow(rho, static_cast<double>(s)) * num[s] * rr.col(bin);
                for (std::size_t s = 0; s <= cfg.Rm; ++s) rhs += std::pow(rho, static_cast<double>(s)) * tr[s];
                for (std::size_t s = 1; s <= cfg.Rd; ++s) d += std::pow(rho, static_cast<double>(s)) * den[s];
                z.col(bin) = rhs.cwiseQuotient(d);
            }
            const LocalFitResult fit = fit_local(z, rr, k, cfg);
            const double scale = std::max(1.0, std::sqrt(fit.window_energy));
            exact_res = std::max(exact_res, fit.residual_norm / scale);
            exact_par = std::max({exact_par, (fit.G - num[0]).cwiseAbs().maxCoeff() / (1.0 + num[0].cwiseAbs().maxCoeff()),
                                  (fit.T - tr[0]).cwiseAbs().maxCoeff() / (1.0 + tr[0].cwiseAbs().maxCoeff())});

            // Random (out of class) data against the dense oracle on a well-conditioned small instance.
            LocalModelConfig small = cfg;
            small.Rn = 1;
            small.Rm = 1;
            small.Rd = 1;
            const CMatrix zr = gen::complex_matrix(rng, nz, bins);
            const LocalFitResult fr = fit_local(zr, rr, k, small);
            CVector t_or;
            const CMatrix g_or = detail::normal_equation_fit(zr, rr, k, small, &t_or);
            oracle = std::max({oracle, (fr.G - g_or).cwiseAbs().maxCoeff() / (1.0 + g_or.cwiseAbs().maxCoeff()),
                               (fr.T - t_or).cwiseAbs().maxCoeff() / (1.0 + t_or.cwiseAbs().maxCoeff())});
            r.cases += 2;
        }
        r.max_error = std::max(exact_res, exact_par);
        r.detail = "in-class residual " + detail::sci(exact_res) + ", in-class parameter error " + detail::sci(exact_par) +
                   ", oracle deviation " + detail::sci(oracle);
        if (!(oracle < 1e-10)) r.detail += " FAIL oracle deviation above 1e-10";
    });
}

struct ValidationReport {
    std::vector<SuiteResult> suites;
    std::string mutation;
    [[nodiscard]] bool passed() const {
        return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
    }
};

inline std::vector<std::string> suite_names() {
    return {"lifting_roundtrip", "delay_pin", "aliasing", "lifted_loop_oracle", "simulator_steady_state", "solver_exactness"};
}

inline ValidationReport run_validation(const ValidationOptions& opt = {}) {
    if (!opt.mutation.empty() && opt.mutation != "recovery-sign")
        throw ConfigError("unknown mutation '" + opt.mutation + "' (available: recovery-sign)");
    ValidationReport rep;
    rep.mutation = opt.mutation;
    rep.suites.push_back(suite_lifting_roundtrip(opt));
    rep.suites.push_back(suite_delay_pin(opt));
    rep.suites.push_back(suite_aliasing(opt));
    rep.suites.push_back(suite_lifted_loop_oracle(opt));
    rep.suites.push_back(suite_simulator_steady_state(opt));
    rep.suites.push_back(suite_solver_exactness(opt));
    return rep;
}

} // namespace mrfrf
