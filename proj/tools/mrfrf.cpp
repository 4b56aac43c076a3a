// mrfrf: excitation design, closed-loop simulation, multirate FRF identification and validation.

#include "mrfrf/mrfrf.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

namespace fs = std::filesystem;
using namespace mrfrf;
using io::json;

namespace {

enum Exit { kOk = 0, kValidationFailed = 1, kUsage = 2, kData = 3 };

struct Args {
    std::string scenario;
    std::string out = ".";
    std::string in;
    std::optional<std::uint64_t> seed;
    std::string bins;
    std::string mutate;
    bool quiet = false;
};

struct BinRange {
    std::size_t first = 0, last = 0;
};

std::optional<BinRange> parse_bins(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const auto dots = text.find("..");
    if (dots == std::string::npos) throw ConfigError("--bins expects a..b, got '" + text + "'");
    auto num = [&](std::string_view s) {
        std::size_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
            throw ConfigError("--bins: bad bin index '" + std::string(s) + "'");
        return v;
    };
    const std::string_view sv(text);
    BinRange r{num(sv.substr(0, dots)), num(sv.substr(dots + 2))};
    if (r.first > r.last) throw ConfigError("--bins: empty range " + text);
    return r;
}

BenchmarkScenario scenario_for(const Args& a) {
    BenchmarkScenario sc = a.scenario.empty() ? io::scenario_from_json(json::object()) : io::load_scenario(a.scenario);
    if (a.seed) apply_seed(sc, *a.seed);
    return sc;
}

fs::path out_dir(const Args& a) {
    const fs::path p(a.out);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw ConfigError("cannot create output directory '" + a.out + "'");
    return p;
}

void say(const Args& a, const std::string& line) {
    if (!a.quiet) std::cout << line << '\n';
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

io::SignalSet signal_set(const SimulationOutput& sim, std::size_t factor) {
    io::SignalSet s;
    s.r_h = sim.r_h;
    s.u_h = sim.u_h;
    s.y_l = sim.y_l;
    s.y_h = sim.y_h;
    s.factor = factor;
    s.periods = sim.periods;
    s.seed = sim.seed;
    return s;
}

void write_frf(const fs::path& dir, const IdentResult& r, std::optional<BinRange> bins) {
    const std::size_t first = bins ? bins->first : 0;
    const std::optional<std::size_t> last = bins ? std::optional<std::size_t>(bins->last) : std::nullopt;
    for (std::size_t i = 0; i < r.P_hat.n_outputs; ++i)
        for (std::size_t j = 0; j < r.P_hat.n_inputs; ++j)
            io::write_text(dir / io::frf_file_name("P_hat", i, j), io::frf_entry_csv(r.P_hat, i, j, &r.fast_flags, first, last));
}

void print_summary(const Args& a, const ErrorReport& rep) {
    for (const auto& e : rep.entries)
        say(a, "P_hat y" + std::to_string(e.output) + " <- u" + std::to_string(e.input) + ": relative error p50 " +
                   sci(e.rel_summary.p50) + "  p95 " + sci(e.rel_summary.p95) + "  max " + sci(e.rel_summary.p100) + "  (" +
                   std::to_string(e.rel_summary.count) + " bins)");
}

// ---------------------------------------------------------------------------

int cmd_generate(const Args& a) {
    const BenchmarkScenario sc = scenario_for(a);
    const fs::path dir = out_dir(a);
    const SignalRecord r = build_excitation(sc);
    io::write_signal_csv(dir / "r_h.csv", r);
    json rms = json::array();
    for (const auto& e : sc.excitation) rms.push_back(e.rms[0]);
    const json manifest = {{"format_version", io::kFormatVersion}, {"seed", sc.seed},
                           {"fast_sample_time", r.sample_time},    {"samples", r.samples()},
                           {"channels", r.channels()},             {"rms", rms},
                           {"files", {{"r_h", "r_h.csv"}}}};
    io::write_text(dir / "excitation.json", manifest.dump(2) + "\n");
    say(a, "seed " + std::to_string(sc.seed));
    say(a, "wrote " + (dir / "r_h.csv").string() + " (" + std::to_string(r.channels()) + " channels, " +
               std::to_string(r.samples()) + " samples)");
    return kOk;
}

int cmd_simulate(const Args& a) {
    const BenchmarkScenario sc = scenario_for(a);
    const fs::path dir = out_dir(a);
    const SimulationOutput sim = simulate(sc.loop, build_excitation(sc), sc.periods, sc.seed, {sc.discard_periods});
    io::write_signal_set(dir, signal_set(sim, sc.loop.factor));
    io::write_text(dir / "scenario.json", io::scenario_to_json(sc).dump(2) + "\n");
    say(a, "seed " + std::to_string(sc.seed));
    say(a, "wrote " + std::to_string(sim.periods) + " period(s) of r_h, u_h, y_h, y_l to " + dir.string());
    return kOk;
}

int cmd_identify(const Args& a) {
    const BenchmarkScenario sc = scenario_for(a);
    const auto bins = parse_bins(a.bins);
    if (a.in.empty()) throw ConfigError("identify needs --in <directory with signals.json>");
    const io::SignalSet s = io::read_signal_set(a.in);
    IdentConfig cfg = sc.ident;
    const std::size_t n = s.u_h.samples() / s.periods;
    const std::size_t m = n / s.factor;
    if (bins) {
        if (bins->last >= n) throw ConfigError("--bins: last bin " + std::to_string(bins->last) + " beyond N-1 = " + std::to_string(n - 1));
        std::set<std::size_t> slow;
        for (std::size_t k = bins->first; k <= bins->last && slow.size() < m; ++k) slow.insert(k % m);
        cfg.slow_bins.assign(slow.begin(), slow.end());
    }
    const IdentResult r = identify(s.u_h, s.r_h, s.y_l, s.factor, cfg);
    const fs::path dir = out_dir(a);
    write_frf(dir, r, bins);
    io::write_text(dir / "diagnostics.json", io::diagnostics_json(r).dump(2) + "\n");

    std::size_t flagged = 0;
    for (const auto& d : r.diagnostics) flagged += d.flagged;
    say(a, "identified " + std::to_string(r.P_hat.n_outputs) + "x" + std::to_string(r.P_hat.n_inputs) + " FRF on " +
               std::to_string(r.P_hat.bins()) + " fast bins (F=" + std::to_string(s.factor) + "), " + std::to_string(flagged) +
               " flagged slow bins");
    // Against the scenario plant when it describes the same system.
    const RationalTF& plant = sc.loop.plant;
    if (plant.n_outputs() == r.P_hat.n_outputs && plant.n_inputs() == r.P_hat.n_inputs &&
        same_sample_time(plant.sample_time(), s.u_h.sample_time)) {
        print_summary(a, error_report(r.P_hat, freq_response(plant, r.P_hat.grid)));
    }
    return kOk;
}

int cmd_validate(const Args& a) {
    ValidationOptions opt;
    if (!a.scenario.empty()) {
        const json j = json::parse(io::read_text(a.scenario), nullptr, false);
        if (j.is_discarded()) throw ConfigError("validation config '" + a.scenario + "' is not valid JSON");
        if (!j.is_object()) throw ConfigError("validation config must be an object");
        opt.seed = io::get_or<std::uint64_t>(j, "seed", opt.seed);
        opt.roundtrip_plants = io::get_or<std::size_t>(j, "roundtrip_plants", opt.roundtrip_plants);
        opt.aliasing_signals = io::get_or<std::size_t>(j, "aliasing_signals", opt.aliasing_signals);
        opt.solver_instances = io::get_or<std::size_t>(j, "solver_instances", opt.solver_instances);
        opt.mutation = io::get_or<std::string>(j, "mutation", opt.mutation);
    }
    if (a.seed) opt.seed = *a.seed;
    if (!a.mutate.empty()) opt.mutation = a.mutate;
    const ValidationReport rep = run_validation(opt);
    json suites = json::array();
    for (const auto& s : rep.suites) {
        suites.push_back({{"name", s.name},
                          {"passed", s.passed},
                          {"max_error", io::finite_or_null(s.max_error)},
                          {"tolerance", s.tolerance},
                          {"cases", s.cases},
                          {"detail", s.detail}});
        say(a, std::string(s.passed ? "PASS " : "FAIL ") + s.name + "  max error " + sci(s.max_error) + " (tol " +
                   sci(s.tolerance) + ")  " + s.detail);
    }
    const json doc = {{"format_version", io::kFormatVersion},
                      {"seed", opt.seed},
                      {"mutation", rep.mutation.empty() ? json(nullptr) : json(rep.mutation)},
                      {"passed", rep.passed()},
                      {"suites", suites}};
    io::write_text(out_dir(a) / "validation.json", doc.dump(2) + "\n");
    return rep.passed() ? kOk : kValidationFailed;
}

int cmd_report(const Args& a) {
    const BenchmarkScenario sc = scenario_for(a);
    const auto bins = parse_bins(a.bins);
    const fs::path dir = out_dir(a);
    const BenchmarkRun run = run_benchmark(sc);
    io::write_text(dir / "scenario.json", io::scenario_to_json(sc).dump(2) + "\n");
    io::write_signal_set(dir, signal_set(run.sim, sc.loop.factor));
    write_frf(dir, run.ident, bins);
    for (std::size_t i = 0; i < run.p_true.n_outputs; ++i)
        for (std::size_t j = 0; j < run.p_true.n_inputs; ++j)
            io::write_text(dir / io::frf_file_name("P_true", i, j), io::frf_entry_csv(run.p_true, i, j));
    io::write_text(dir / "diagnostics.json", io::diagnostics_json(run.ident).dump(2) + "\n");
    io::write_text(dir / "error_report.json", io::error_report_json(run.report).dump(2) + "\n");
    io::write_text(dir / "errors.csv", io::error_csv(run.report));
    say(a, "scenario " + sc.name + ", seed " + std::to_string(sc.seed));
    print_summary(a, run.report);
    for (const auto& p : run.report.peaks)
        say(a, "peak " + p.signal + "[" + std::to_string(p.channel) + "] " + sci(p.peak) +
                   (p.bound ? std::string(p.within_bound() ? " within " : " EXCEEDS ") + sci(*p.bound) : std::string()));
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multirate closed-loop FRF identification"};
    app.require_subcommand(1, 1);
    Args a;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", a.scenario, "scenario JSON (defaults to the benchmark)");
        sub->add_option("--out", a.out, "output directory")->capture_default_str();
        sub->add_option("--seed", a.seed, "seed override");
        sub->add_flag("-q,--quiet", a.quiet, "suppress the summary");
    };
    auto* gen = app.add_subcommand("generate", "write one period of the excitation r_h");
    auto* sim = app.add_subcommand("simulate", "simulate the closed loop and write r_h, u_h, y_h, y_l");
    auto* ident = app.add_subcommand("identify", "identify the fast-rate FRF from recorded signals");
    auto* val = app.add_subcommand("validate", "run the oracle suites");
    auto* rep = app.add_subcommand("report", "simulate, identify and compare against the true FRF");
    for (auto* s : {gen, sim, ident, val, rep}) common(s);
    ident->add_option("--in", a.in, "directory holding signals.json and the signal CSVs")->required();
    for (auto* s : {ident, rep}) s->add_option("--bins", a.bins, "fast-bin range a..b written to the FRF files");
    val->add_option("--mutate", a.mutate, "inject a known fault (recovery-sign)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(a);
        if (sim->parsed()) return cmd_simulate(a);
        if (ident->parsed()) return cmd_identify(a);
        if (val->parsed()) return cmd_validate(a);
        if (rep->parsed()) return cmd_report(a);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const RateMismatch& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
