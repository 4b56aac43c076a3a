#pragma once

#include "mrfrf/core.hpp"
#include "mrfrf/lifted_ident.hpp"
#include "mrfrf/loop_sim.hpp"
#include "mrfrf/lrm.hpp"
#include "mrfrf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mrfrf {

inline constexpr std::size_t kBenchmarkFactor = 2;
inline constexpr std::size_t kBenchmarkSamples = 3600;
inline constexpr double kVcmExcitationRms = 8.0e-8;
inline constexpr double kPztExcitationRms = 3.6e-9;
inline constexpr double kPztStrokeBound = 50e-9;

struct BenchmarkScenario {
    std::string name;
    std::string plant_preset;   ///< empty when the plant was supplied explicitly
    std::string controller_reading;
    MultirateLoopSpec loop;
    std::vector<MultisineSpec> excitation; ///< one single-channel spec per plant input
    IdentConfig ident;
    std::size_t periods = 1;         ///< recorded periods
    std::size_t discard_periods = 0; ///< simulated and dropped before recording
    std::uint64_t seed = 0;
    std::optional<double> stroke_bound = kPztStrokeBound;
    std::size_t stroke_channel = 1; ///< plant input whose actuator displacement is checked

    [[nodiscard]] std::size_t samples() const { return excitation.empty() ? 0 : excitation.front().samples; }

    void validate() const {
        loop.validate();
        if (excitation.size() != loop.n_inputs())
            throw ConfigError("scenario: need one excitation spec per plant input (" + std::to_string(loop.n_inputs()) + ")");
        for (const auto& e : excitation) {
            if (e.channels != 1) throw ConfigError("scenario: excitation specs are single-channel");
            if (e.samples != samples()) throw ConfigError("scenario: all excitation channels must share N");
            if (!same_sample_time(e.sample_time, loop.fast_sample_time()))
                throw ConfigError("scenario: excitation sample time differs from the plant");
        }
        if (samples() == 0 || samples() % loop.factor != 0)
            throw ConfigError("scenario: N=" + std::to_string(samples()) + " must be a positive multiple of F=" +
                              std::to_string(loop.factor));
        if (periods == 0) throw ConfigError("scenario: periods must be positive");
        if (stroke_bound && stroke_channel >= loop.n_inputs()) throw ConfigError("scenario: stroke channel out of range");
    }
};

/// Derived per-input seed so inputs get independent phase sets.
inline std::uint64_t excitation_seed(std::uint64_t seed, std::size_t input) {
    return detail::splitmix64(seed + 0x51ED270B27A4D3A1ull * (static_cast<std::uint64_t>(input) + 1));
}

/// Reseeds every excitation channel and the noise from one scenario seed.
inline void apply_seed(BenchmarkScenario& sc, std::uint64_t seed) {
    sc.seed = seed;
    for (std::size_t i = 0; i < sc.excitation.size(); ++i) sc.excitation[i].seed = excitation_seed(seed, i);
}

/// One period of the fast-rate excitation r_h, inputs stacked in plant-input order.
inline SignalRecord build_excitation(const BenchmarkScenario& sc) {
    const std::size_t n = sc.samples();
    Matrix r(idx(sc.excitation.size()), idx(n));
    for (std::size_t i = 0; i < sc.excitation.size(); ++i) r.row(idx(i)) = multisine(sc.excitation[i]).data.row(0);
    return {std::move(r), sc.loop.fast_sample_time(), RateTag::fast, std::size_t{1}};
}

inline std::vector<std::string> benchmark_preset_names() {
    return {"benchmark", "benchmark-literal-cv", "benchmark-pivot", "noisy", "zero-plant"};
}

/// Presets:
///  "benchmark"            dual-stage surrogate, C_v with the q^{-2} reading, noiseless, one period, no discard
///  "benchmark-literal-cv" same with C_v read literally
///  "benchmark-pivot"     low-pivot VCM surrogate (closed-loop poles near DC)
///  "noisy"                benchmark plus white output noise, four periods averaged
///  "zero-plant"           zero plant behind the benchmark controllers
inline BenchmarkScenario build_benchmark_scenario(const std::string& preset, std::uint64_t seed = 1) {
    BenchmarkScenario sc;
    sc.name = preset;
    std::string plant = "dual-stage";
    std::string cv = "cv-q2";
    if (preset == "benchmark") {
    } else if (preset == "benchmark-literal-cv") {
        cv = "cv-literal";
    } else if (preset == "benchmark-pivot") {
        plant = "dual-stage-pivot";
    } else if (preset == "noisy") {
        sc.loop.noise.eh_std = 2e-10;
        sc.periods = 4;
    } else if (preset == "zero-plant") {
        plant = "zero";
    } else {
        std::string names;
        for (const auto& n : benchmark_preset_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown benchmark preset '" + preset + "' (available: " + names + ")");
    }
    sc.plant_preset = plant;
    sc.controller_reading = cv;
    sc.loop.plant = surrogate_plants(plant, kBenchmarkFastSampleTime);
    sc.loop.controller = dual_stage_controller(cv, kBenchmarkSlowSampleTime);
    sc.loop.factor = kBenchmarkFactor;
    const double rms[2] = {kVcmExcitationRms, kPztExcitationRms};
    for (std::size_t i = 0; i < 2; ++i) {
        MultisineSpec ms;
        ms.channels = 1;
        ms.samples = kBenchmarkSamples;
        ms.sample_time = kBenchmarkFastSampleTime;
        ms.rms = {rms[i]};
        sc.excitation.push_back(ms);
    }
    sc.ident.lrm = LocalModelConfig{};
    apply_seed(sc, seed);
    return sc;
}

// ---------------------------------------------------------------------------
// Error reports
// ---------------------------------------------------------------------------

struct Percentiles {
    double p50 = 0.0, p90 = 0.0, p95 = 0.0, p100 = 0.0;
    std::size_t count = 0;
};

/// Nearest-rank percentiles of the finite values; all zero when none are finite.
inline Percentiles percentiles(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
    Percentiles p;
    p.count = v.size();
    if (v.empty()) return p;
    std::sort(v.begin(), v.end());
    auto rank = [&](double q) {
        const auto r = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(v.size())));
        return v[std::clamp<std::size_t>(r, 1, v.size()) - 1];
    };
    p.p50 = rank(50);
    p.p90 = rank(90);
    p.p95 = rank(95);
    p.p100 = v.back();
    return p;
}

struct EntryError {
    std::size_t output = 0, input = 0;
    std::vector<double> abs_error; ///< NaN where the estimate is withheld
    std::vector<double> rel_error;
    Percentiles abs_summary, rel_summary;
};

struct PeakReport {
    std::string signal;
    std::size_t channel = 0;
    double peak = 0.0;
    std::optional<double> bound;
    [[nodiscard]] bool within_bound() const { return !bound || peak <= *bound; }
};

struct ErrorReport {
    FrequencyGrid grid;
    std::vector<EntryError> entries;
    std::vector<PeakReport> peaks;

    [[nodiscard]] const EntryError& entry(std::size_t i, std::size_t j) const {
        for (const auto& e : entries)
            if (e.output == i && e.input == j) return e;
        throw InvalidArgument("error report: no entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
};

inline constexpr double kRelativeGuard = 1e-300;

/// Per-bin |P_hat - P| and |P_hat - P| / max(|P|, 1e-300) for every entry.
inline ErrorReport error_report(const FrfMatrix& p_hat, const FrfMatrix& p_true) {
    if (!(p_hat.grid == p_true.grid)) throw InvalidArgument("error_report: frequency grids differ");
    if (p_hat.n_outputs != p_true.n_outputs || p_hat.n_inputs != p_true.n_inputs)
        throw InvalidArgument("error_report: dimensions differ");
    ErrorReport rep;
    rep.grid = p_true.grid;
    for (std::size_t i = 0; i < p_true.n_outputs; ++i)
        for (std::size_t j = 0; j < p_true.n_inputs; ++j) {
            EntryError e;
            e.output = i;
            e.input = j;
            e.abs_error.resize(p_true.bins());
            e.rel_error.resize(p_true.bins());
            for (std::size_t k = 0; k < p_true.bins(); ++k) {
                const cd est = p_hat.at(k, i, j), truth = p_true.at(k, i, j);
                const double a = std::abs(est - truth);
                e.abs_error[k] = a;
                e.rel_error[k] = std::isfinite(a) ? a / std::max(std::abs(truth), kRelativeGuard) : a;
            }
            e.abs_summary = percentiles(e.abs_error);
            e.rel_summary = percentiles(e.rel_error);
            rep.entries.push_back(std::move(e));
        }
    return rep;
}

inline double peak_abs(const Matrix& x, std::size_t row) { return x.row(idx(row)).cwiseAbs().maxCoeff(); }

// ---------------------------------------------------------------------------
// Benchmark run
// ---------------------------------------------------------------------------

struct BenchmarkRun {
    SimulationOutput sim;
    IdentResult ident;
    FrfMatrix p_true;
    ErrorReport report;
};

/// Simulates, identifies and compares against the true surrogate FRF on all N fast bins.
inline BenchmarkRun run_benchmark(const BenchmarkScenario& sc) {
    sc.validate();
    BenchmarkRun run;
    const SignalRecord r = build_excitation(sc);
    try {
        run.sim = simulate(sc.loop, r, sc.periods, sc.seed, {sc.discard_periods});
    } catch (const Error& e) {
        throw Error(std::string("benchmark '") + sc.name + "': simulation failed: " + e.what());
    }
    try {
        run.ident = identify(run.sim.u_h, run.sim.r_h, run.sim.y_l, sc.loop.factor, sc.ident);
    } catch (const Error& e) {
        throw Error(std::string("benchmark '") + sc.name + "': identification failed: " + e.what());
    }
    run.p_true = freq_response(sc.loop.plant, run.ident.P_hat.grid);
    run.report = error_report(run.ident.P_hat, run.p_true);

    // Actuator inputs and their displacement contributions; reported, never clipped.
    for (std::size_t c = 0; c < sc.loop.n_inputs(); ++c) {
        run.report.peaks.push_back({"u_h", c, peak_abs(run.sim.u_h.data, c), std::nullopt});
        std::vector<LagPolynomial> num, den;
        for (std::size_t o = 0; o < sc.loop.n_outputs(); ++o) {
            num.push_back(sc.loop.plant.num(o, c));
            den.push_back(sc.loop.plant.den(o, c));
        }
        const RationalTF column(sc.loop.n_outputs(), 1, num, den, sc.loop.fast_sample_time());
        const SignalRecord uc(run.sim.u_h.data.row(idx(c)), sc.loop.fast_sample_time(), RateTag::fast);
        const Matrix disp = filter(column, uc).data;
        double pk = 0.0;
        for (Eigen::Index o = 0; o < disp.rows(); ++o) pk = std::max(pk, disp.row(o).cwiseAbs().maxCoeff());
        std::optional<double> bound;
        if (sc.stroke_bound && c == sc.stroke_channel) bound = sc.stroke_bound;
        run.report.peaks.push_back({"displacement", c, pk, bound});
    }
    return run;
}

} // namespace mrfrf
