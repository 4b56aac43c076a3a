// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "mrfrf/mrfrf.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

using namespace mrfrf;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome from_suite(const SuiteResult& s, double time_limit = 0.0) {
    Outcome o{s.passed, "max error " + sci(s.max_error) + " (tol " + sci(s.tolerance) + "), " + s.detail};
    if (time_limit > 0.0 && s.seconds >= time_limit) {
        o.passed = false;
        o.detail += ", over the " + std::to_string(time_limit) + " s budget";
    }
    return o;
}

Outcome configuration_fidelity() {
    const auto t0 = std::chrono::steady_clock::now();
    const BenchmarkScenario sc = build_benchmark_scenario("benchmark");
    std::vector<std::string> bad;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) bad.push_back(what);
    };
    check(sc.loop.fast_sample_time() == 1.0 / 100800.0, "T_h");
    check(sc.loop.controller.sample_time() == 1.0 / 50400.0, "T_l");
    check(sc.loop.slow_sample_time() * 50400.0 == 1.0, "F T_h");
    check(sc.loop.factor == 2, "F");
    check(sc.samples() == 3600, "N");
    const auto& l = sc.ident.lrm;
    check(l.Rn == 3 && l.Rm == 3 && l.Rd == 3, "degrees");
    check(l.nw == 30, "n_w");
    check(sc.excitation.size() == 2 && sc.excitation[0].rms[0] == 8.0e-8 && sc.excitation[1].rms[0] == 3.6e-9, "RMS");
    const SignalRecord r = build_excitation(sc);
    for (Eigen::Index c = 0; c < 2; ++c) {
        const double rms = std::sqrt(r.data.row(c).squaredNorm() / 3600.0);
        check(std::abs(rms - sc.excitation[static_cast<std::size_t>(c)].rms[0]) <= 1e-12 * rms, "realized RMS");
    }
    const ParamCount pc = param_count(l, 2, 1, 2);
    check(pc.parameters == 115, "115 parameters");
    check(pc.data_points == 305, "305 data points");
    const FrequencyGrid g(3600, sc.loop.fast_sample_time());
    check(g.freq_hz(1) == 28.0, "28 Hz spacing");
    const double t = seconds_since(t0);
    check(t < 1.0, "runtime");
    Outcome o{bad.empty(), "T_h=1/100800, T_l=1/50400, F=2, N=3600, R=3, n_w=30, " + std::to_string(pc.parameters) +
                               " parameters / " + std::to_string(pc.data_points) + " data points"};
    for (const auto& b : bad) o.detail += "; mismatch: " + b;
    return o;
}

struct NoiselessRun {
    BenchmarkScenario sc;
    BenchmarkRun run;
    double seconds = 0.0;
};

const NoiselessRun& noiseless() {
    static const NoiselessRun nr = [] {
        NoiselessRun n;
        n.sc = build_benchmark_scenario("benchmark");
        const auto t0 = std::chrono::steady_clock::now();
        n.run = run_benchmark(n.sc);
        n.seconds = seconds_since(t0);
        return n;
    }();
    return nr;
}

Outcome lifted_state_space_oracle() {
    const NoiselessRun& n = noiseless();
    const IdentResult& id = n.run.ident;
    const LiftedLoopMaps maps = state_space_lifted_loop(n.sc.loop, id.slow_grid);
    double worst = 0.0;
    std::size_t worst_bin = 0, flagged = 0;
    for (std::size_t k = 0; k < id.slow_grid.bins; ++k) {
        if (!id.G[k].allFinite()) {
            ++flagged;
            continue;
        }
        CMatrix truth(id.G[k].rows(), id.G[k].cols());
        truth << maps.S[k], maps.PS[k];
        const double e = (id.G[k] - truth).norm() / truth.norm();
        if (e > worst) {
            worst = e;
            worst_bin = k;
        }
    }
    return {worst < 1e-3 && flagged == 0, "max relative error " + sci(worst) + " at slow bin " + std::to_string(worst_bin) +
                                              " over " + std::to_string(id.slow_grid.bins) + " bins, " +
                                              std::to_string(flagged) + " unfitted"};
}

Outcome end_to_end() {
    const NoiselessRun& n = noiseless();
    const ErrorReport& rep = n.run.report;
    bool ok = n.seconds < 60.0;
    std::string detail;
    for (const auto& e : rep.entries) {
        ok = ok && e.rel_summary.p95 < 1e-2 && e.rel_summary.count == rep.grid.bins;
        detail += "p95 y" + std::to_string(e.output) + "<-u" + std::to_string(e.input) + " " + sci(e.rel_summary.p95) + ", ";
    }
    // PZT resonance above slow Nyquist (bins M/2 .. N/2)
    const std::size_t nbins = rep.grid.bins, m = nbins / 2;
    auto peak_bin = [&](const FrfMatrix& p) {
        std::size_t best = m / 2;
        for (std::size_t k = m / 2 + 1; k < nbins / 2; ++k)
            if (std::abs(p.at(k, 0, 1)) > std::abs(p.at(best, 0, 1))) best = k;
        return best;
    };
    const std::size_t est = peak_bin(n.run.ident.P_hat), truth = peak_bin(n.run.p_true);
    const auto diff = est > truth ? est - truth : truth - est;
    ok = ok && diff <= 1 && truth > m / 2;
    detail += "PZT peak at bin " + std::to_string(est) + " (" + std::to_string(rep.grid.freq_hz(est)) + " Hz) vs true " +
              std::to_string(truth) + ", run " + std::to_string(n.seconds) + " s";
    return {ok, detail};
}

double median_error(const BenchmarkRun& run) {
    std::vector<double> all;
    for (const auto& e : run.report.entries) all.insert(all.end(), e.rel_error.begin(), e.rel_error.end());
    return percentiles(all).p50;
}

Outcome noise_robustness() {
    BenchmarkScenario loud = build_benchmark_scenario("noisy", 1);
    const double sigma = loud.loop.noise.eh_std;
    BenchmarkScenario quiet = loud;
    quiet.loop.noise.eh_std = sigma / 4.0;
    const double m_loud = median_error(run_benchmark(loud));
    const double m_quiet = median_error(run_benchmark(quiet));
    return {m_quiet < m_loud, "median relative error " + sci(m_loud) + " at sigma=" + sci(sigma) + ", " + sci(m_quiet) +
                                  " at sigma/4"};
}

std::vector<std::string> serialized_outputs(const BenchmarkScenario& sc) {
    const BenchmarkRun run = run_benchmark(sc);
    std::vector<std::string> out;
    out.push_back(io::scenario_to_json(sc).dump(2));
    out.push_back(io::signal_csv(run.sim.r_h));
    out.push_back(io::signal_csv(run.sim.u_h));
    out.push_back(io::signal_csv(run.sim.y_l));
    for (std::size_t j = 0; j < run.ident.P_hat.n_inputs; ++j)
        out.push_back(io::frf_entry_csv(run.ident.P_hat, 0, j, &run.ident.fast_flags));
    out.push_back(io::diagnostics_json(run.ident).dump(2));
    out.push_back(io::error_report_json(run.report).dump(2));
    out.push_back(io::error_csv(run.report));
    return out;
}

Outcome determinism() {
    const BenchmarkScenario sc = build_benchmark_scenario("noisy", 42);
    const auto a = serialized_outputs(sc), b = serialized_outputs(sc);
    std::size_t bytes = 0, differing = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bytes += a[i].size();
        differing += a[i] != b[i];
    }
    return {differing == 0 && a.size() == b.size(),
            std::to_string(a.size()) + " documents, " + std::to_string(bytes) + " bytes, " + std::to_string(differing) +
                " differing"};
}

} // namespace

int main() {
    const ValidationOptions opt;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"configuration fidelity", configuration_fidelity},
        {"lifting round-trip", [&] { return from_suite(suite_lifting_roundtrip(opt), 30.0); }},
        {"delay pin", [&] { return from_suite(suite_delay_pin(opt)); }},
        {"aliasing identity", [&] { return from_suite(suite_aliasing(opt)); }},
        {"simulator-oracle agreement", [&] { return from_suite(suite_simulator_steady_state(opt), 10.0); }},
        {"lifted state-space oracle", lifted_state_space_oracle},
        {"end-to-end noiseless identification", end_to_end},
        {"solver exactness", [&] { return from_suite(suite_solver_exactness(opt)); }},
        {"noise robustness", noise_robustness},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double t = seconds_since(t0);
        failures += !o.passed;
        char head[96];
        std::snprintf(head, sizeof head, "%s %2zu %-38s (%.2f s) ", o.passed ? "PASS" : "FAIL", i + 1,
                      criteria[i].first.c_str(), t);
        std::cout << head << o.detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
