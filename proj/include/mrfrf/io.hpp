#pragma once

#include "mrfrf/bench.hpp"
#include "mrfrf/core.hpp"
#include "mrfrf/lifted_ident.hpp"
#include "mrfrf/loop_spec.hpp"
#include "mrfrf/lti.hpp"
#include "mrfrf/signal.hpp"
#include "mrfrf/spectral.hpp"

#include "json.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace mrfrf::io {

using json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// Shortest round-trip representation; byte-stable for equal doubles.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw ConfigError("write to '" + path.string() + "' failed");
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Signals: one column per channel, header ch0..chK
// ---------------------------------------------------------------------------

inline std::string signal_csv(const SignalRecord& x) {
    std::string out;
    for (std::size_t c = 0; c < x.channels(); ++c) out += (c ? ",ch" : "ch") + std::to_string(c);
    out += '\n';
    for (Eigen::Index n = 0; n < x.data.cols(); ++n) {
        for (Eigen::Index c = 0; c < x.data.rows(); ++c) {
            if (c) out += ',';
            out += fmt(x.data(c, n));
        }
        out += '\n';
    }
    return out;
}

inline void write_signal_csv(const std::filesystem::path& path, const SignalRecord& x) { write_text(path, signal_csv(x)); }

/// Parses a signal CSV. DataError carries the 1-based file line of the offending row.
inline SignalRecord parse_signal_csv(const std::string& text, double sample_time, RateTag tag,
                                     const std::string& label = "signal") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError(label + ": empty file", std::size_t{1});
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_commas(line);
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] != "ch" + std::to_string(c))
            throw DataError(label + ": header must read ch0..chK, found '" + line + "'", std::size_t{1});
    const std::size_t ch = header.size();
    std::vector<double> values;
    std::size_t line_no = 1, rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != ch)
            throw DataError(label + ": row at line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                " fields, expected " + std::to_string(ch),
                            line_no);
        for (const auto cell : cells) {
            const auto v = parse_double(cell);
            if (!v || !std::isfinite(*v))
                throw DataError(label + ": bad value '" + std::string(cell) + "' at line " + std::to_string(line_no), line_no);
            values.push_back(*v);
        }
        ++rows;
    }
    Matrix data(idx(ch), idx(rows));
    for (std::size_t n = 0; n < rows; ++n)
        for (std::size_t c = 0; c < ch; ++c) data(idx(c), idx(n)) = values[n * ch + c];
    return {std::move(data), sample_time, tag};
}

inline SignalRecord read_signal_csv(const std::filesystem::path& path, double sample_time, RateTag tag) {
    if (!std::filesystem::exists(path)) throw DataError("missing signal file '" + path.string() + "'");
    return parse_signal_csv(read_text(path), sample_time, tag, path.filename().string());
}

// ---------------------------------------------------------------------------
// Spectra and FRFs
// ---------------------------------------------------------------------------

/// Columns k, freq_hz, re_ch0, im_ch0, ...
inline std::string spectrum_csv(const Spectrum& s) {
    std::string out = "k,freq_hz";
    for (std::size_t c = 0; c < s.channels(); ++c) out += ",re_ch" + std::to_string(c) + ",im_ch" + std::to_string(c);
    out += '\n';
    const FrequencyGrid g = s.grid();
    for (std::size_t k = 0; k < s.bins(); ++k) {
        out += std::to_string(k) + ',' + fmt(g.freq_hz(k));
        for (std::size_t c = 0; c < s.channels(); ++c) {
            const cd v = s.data(idx(c), idx(k));
            out += ',' + fmt(v.real()) + ',' + fmt(v.imag());
        }
        out += '\n';
    }
    return out;
}

/// Columns k, freq_hz, re, im, flag for one entry over bins [first, last].
inline std::string frf_entry_csv(const FrfMatrix& p, std::size_t i, std::size_t j, const std::vector<bool>* flags = nullptr,
                                 std::size_t first = 0, std::optional<std::size_t> last = std::nullopt) {
    std::string out = "k,freq_hz,re,im,flag\n";
    const std::size_t hi = last ? std::min(*last, p.bins() - 1) : p.bins() - 1;
    for (std::size_t k = first; k <= hi && k < p.bins(); ++k) {
        const cd v = p.at(k, i, j);
        const bool flag = flags ? (*flags)[k] : !std::isfinite(std::abs(v));
        out += std::to_string(k) + ',' + fmt(p.grid.freq_hz(k)) + ',' + fmt(v.real()) + ',' + fmt(v.imag()) + ',' +
               (flag ? "1" : "0") + '\n';
    }
    return out;
}

inline std::string frf_file_name(const std::string& stem, std::size_t i, std::size_t j) {
    return stem + "_y" + std::to_string(i) + "_u" + std::to_string(j) + ".csv";
}

// ---------------------------------------------------------------------------
// Systems
// ---------------------------------------------------------------------------

/// {"num": [[...]], "den": [[...]], "ts": T, "outputs": ny, "inputs": nu}, entries row-major.
/// Without dimensions a single entry is 1x1 and k entries are read as a 1xk row.
inline RationalTF system_from_json(const json& j, const std::string& what = "system") {
    if (!j.is_object()) throw ConfigError(what + ": expected an object with num, den, ts");
    for (const char* key : {"num", "den", "ts"})
        if (!j.contains(key)) throw ConfigError(what + ": missing field '" + key + "'");
    auto polys = [&](const char* key) {
        const json& a = j.at(key);
        if (!a.is_array() || a.empty()) throw ConfigError(what + ": '" + key + "' must be a non-empty array of arrays");
        std::vector<LagPolynomial> out;
        for (const auto& e : a) {
            if (!e.is_array()) throw ConfigError(what + ": '" + key + "' entries must be arrays");
            LagPolynomial p;
            for (const auto& c : e) {
                if (!c.is_number()) throw ConfigError(what + ": non-numeric coefficient in '" + key + "'");
                p.push_back(c.get<double>());
            }
            out.push_back(std::move(p));
        }
        return out;
    };
    auto num = polys("num");
    auto den = polys("den");
    if (num.size() != den.size()) throw ConfigError(what + ": num and den entry counts differ");
    if (!j.at("ts").is_number()) throw ConfigError(what + ": 'ts' must be a number");
    const double ts = j.at("ts").get<double>();
    std::size_t ny = 1, nu = num.size();
    if (j.contains("outputs") || j.contains("inputs")) {
        ny = j.value("outputs", std::size_t{1});
        nu = j.value("inputs", num.size() / std::max<std::size_t>(ny, 1));
    }
    if (ny * nu != num.size())
        throw ConfigError(what + ": " + std::to_string(num.size()) + " entries do not fill " + std::to_string(ny) + "x" +
                          std::to_string(nu));
    try {
        return RationalTF(ny, nu, std::move(num), std::move(den), ts);
    } catch (const InvalidArgument& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

inline json system_to_json(const RationalTF& sys) {
    json num = json::array(), den = json::array();
    for (std::size_t i = 0; i < sys.n_outputs(); ++i)
        for (std::size_t k = 0; k < sys.n_inputs(); ++k) {
            num.push_back(sys.num(i, k));
            den.push_back(sys.den(i, k));
        }
    return {{"num", num}, {"den", den}, {"ts", sys.sample_time()}, {"outputs", sys.n_outputs()}, {"inputs", sys.n_inputs()}};
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

inline RationalTF plant_from_json(const json& j, double ts) {
    if (j.is_string()) return surrogate_plants(j.get<std::string>(), ts);
    return system_from_json(j, "plant");
}

inline RationalTF controller_from_json(const json& j, double ts) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "dual-stage" || name == "dual-stage-cv-q2") return dual_stage_controller("cv-q2", ts);
        if (name == "dual-stage-cv-literal") return dual_stage_controller("cv-literal", ts);
        try {
            return controller_preset(name, ts);
        } catch (const ConfigError&) {
            throw ConfigError("unknown controller preset '" + name +
                              "' (available: dual-stage, dual-stage-cv-literal, cv-q2, cv-literal, cp)");
        }
    }
    return system_from_json(j, "controller");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

/// Scenario document: an optional "preset" (benchmark presets) overridden field by field by
/// "plant", "controller", "filters", "F", "noise", "seed", "excitation", "lrm", "stroke_bound".
/// An empty document yields the default benchmark.
inline BenchmarkScenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("scenario: top level must be an object");
    if (j.contains("format_version") && j.at("format_version") != kFormatVersion)
        throw ConfigError("scenario: unsupported format_version");
    const std::string preset = get_or<std::string>(j, "preset", "benchmark");
    const std::uint64_t seed = get_or<std::uint64_t>(j, "seed", 1);
    BenchmarkScenario sc = build_benchmark_scenario(preset, seed);
    if (j.contains("name")) sc.name = j.at("name").get<std::string>();

    std::size_t factor = get_or<std::size_t>(j, "F", sc.loop.factor);
    if (factor == 0) throw ConfigError("scenario: F must be >= 1");
    if (j.contains("plant")) {
        const double ts = j.at("plant").is_object() ? get_or<double>(j.at("plant"), "ts", kBenchmarkFastSampleTime)
                                                    : kBenchmarkFastSampleTime;
        sc.loop.plant = plant_from_json(j.at("plant"), ts);
        sc.plant_preset = j.at("plant").is_string() ? j.at("plant").get<std::string>() : "";
    }
    const double th = sc.loop.plant.sample_time();
    if (j.contains("controller")) {
        sc.loop.controller = controller_from_json(j.at("controller"), th * static_cast<double>(factor));
        sc.controller_reading = j.at("controller").is_string() ? j.at("controller").get<std::string>() : "";
    } else if (factor != sc.loop.factor || !same_sample_time(th, kBenchmarkFastSampleTime)) {
        sc.loop.controller = dual_stage_controller(sc.controller_reading, th * static_cast<double>(factor));
    }
    sc.loop.factor = factor;
    if (j.contains("filters") && !j.at("filters").is_null()) sc.loop.filters = system_from_json(j.at("filters"), "filters");

    if (j.contains("noise")) {
        const json& n = j.at("noise");
        sc.loop.noise.eh_std = get_or<double>(n, "eh_std", sc.loop.noise.eh_std);
        sc.loop.noise.el_std = get_or<double>(n, "el_std", sc.loop.noise.el_std);
        sc.loop.noise.dh_std = get_or<double>(n, "dh_std", sc.loop.noise.dh_std);
        sc.loop.noise.dh_channel = get_or<std::size_t>(n, "dh_channel", sc.loop.noise.dh_channel);
        sc.loop.noise.dh_sign = get_or<double>(n, "dh_sign", sc.loop.noise.dh_sign);
        if (n.contains("H") && !n.at("H").is_null()) sc.loop.noise.shaping = system_from_json(n.at("H"), "noise.H");
    }

    const std::size_t nu = sc.loop.n_inputs();
    if (j.contains("excitation") || sc.excitation.size() != nu ||
        !same_sample_time(sc.excitation.front().sample_time, th)) {
        const json e = j.value("excitation", json::object());
        const std::size_t n = get_or<std::size_t>(e, "N", sc.samples());
        std::vector<double> rms;
        if (e.contains("rms")) {
            rms = e.at("rms").get<std::vector<double>>();
        } else {
            for (std::size_t c = 0; c < nu; ++c)
                rms.push_back(c < sc.excitation.size() ? sc.excitation[c].rms[0] : kVcmExcitationRms);
        }
        if (rms.size() != nu) throw ConfigError("scenario: excitation.rms needs one value per plant input");
        const std::string phase = get_or<std::string>(e, "phase", "random");
        if (phase != "random" && phase != "orthogonal")
            throw ConfigError("scenario: excitation.phase must be 'random' or 'orthogonal'");
        const bool dc = get_or<bool>(e, "include_dc", false);
        const auto bins = get_or<std::vector<std::size_t>>(e, "excited_bins", {});
        sc.excitation.clear();
        for (std::size_t c = 0; c < nu; ++c) {
            MultisineSpec ms;
            ms.channels = 1;
            ms.samples = n;
            ms.sample_time = th;
            ms.rms = {rms[c]};
            ms.include_dc = dc;
            ms.excited_bins = bins;
            ms.phase = phase == "orthogonal" ? PhaseScheme::orthogonal : PhaseScheme::random;
            sc.excitation.push_back(ms);
        }
        sc.periods = get_or<std::size_t>(e, "periods", sc.periods);
        sc.discard_periods = get_or<std::size_t>(e, "discard_periods", sc.discard_periods);
        apply_seed(sc, seed);
    }

    if (j.contains("lrm")) {
        const json& l = j.at("lrm");
        auto& c = sc.ident.lrm;
        c.Rn = get_or<std::size_t>(l, "Rn", c.Rn);
        c.Rm = get_or<std::size_t>(l, "Rm", c.Rm);
        c.Rd = get_or<std::size_t>(l, "Rd", c.Rd);
        c.nw = get_or<std::size_t>(l, "nw", c.nw);
        const std::string den = get_or<std::string>(l, "denominator", "diagonal");
        if (den != "diagonal" && den != "full") throw ConfigError("scenario: lrm.denominator must be 'diagonal' or 'full'");
        c.denominator = den == "full" ? DenominatorForm::full : DenominatorForm::diagonal;
        c.normalize = get_or<bool>(l, "normalize", c.normalize);
        c.cond_threshold = get_or<double>(l, "cond_threshold", c.cond_threshold);
        sc.ident.inversion_cond_threshold = get_or<double>(l, "inversion_cond_threshold", sc.ident.inversion_cond_threshold);
        sc.ident.average_periods = get_or<bool>(l, "average_periods", sc.ident.average_periods);
    }
    if (j.contains("stroke_bound")) {
        if (j.at("stroke_bound").is_null())
            sc.stroke_bound.reset();
        else
            sc.stroke_bound = j.at("stroke_bound").get<double>();
    }
    sc.stroke_channel = get_or<std::size_t>(j, "stroke_channel", std::min<std::size_t>(1, nu - 1));
    try {
        sc.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    } catch (const RateMismatch& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    return sc;
}

inline BenchmarkScenario load_scenario(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("scenario file '" + path.string() + "' not found");
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("scenario '" + path.string() + "': " + e.what());
    }
    return scenario_from_json(j);
}

inline json scenario_to_json(const BenchmarkScenario& sc) {
    json noise = {{"eh_std", sc.loop.noise.eh_std},
                  {"el_std", sc.loop.noise.el_std},
                  {"dh_std", sc.loop.noise.dh_std},
                  {"dh_channel", sc.loop.noise.dh_channel},
                  {"dh_sign", sc.loop.noise.dh_sign}};
    if (sc.loop.noise.shaping) noise["H"] = system_to_json(*sc.loop.noise.shaping);
    json rms = json::array();
    for (const auto& e : sc.excitation) rms.push_back(e.rms[0]);
    const auto& l = sc.ident.lrm;
    json out = {{"format_version", kFormatVersion},
                {"name", sc.name},
                {"seed", sc.seed},
                {"F", sc.loop.factor},
                {"plant", system_to_json(sc.loop.plant)},
                {"controller", system_to_json(sc.loop.controller)},
                {"filters", sc.loop.filters ? system_to_json(*sc.loop.filters) : json(nullptr)},
                {"noise", noise},
                {"excitation",
                 {{"N", sc.samples()},
                  {"rms", rms},
                  {"phase", sc.excitation.empty() || sc.excitation[0].phase == PhaseScheme::random ? "random" : "orthogonal"},
                  {"include_dc", !sc.excitation.empty() && sc.excitation[0].include_dc},
                  {"periods", sc.periods},
                  {"discard_periods", sc.discard_periods}}},
                {"lrm",
                 {{"Rn", l.Rn},
                  {"Rm", l.Rm},
                  {"Rd", l.Rd},
                  {"nw", l.nw},
                  {"denominator", l.denominator == DenominatorForm::full ? "full" : "diagonal"},
                  {"normalize", l.normalize},
                  {"cond_threshold", l.cond_threshold},
                  {"inversion_cond_threshold", sc.ident.inversion_cond_threshold},
                  {"average_periods", sc.ident.average_periods}}},
                {"stroke_bound", sc.stroke_bound ? json(*sc.stroke_bound) : json(nullptr)},
                {"stroke_channel", sc.stroke_channel}};
    return out;
}

// ---------------------------------------------------------------------------
// Signal sets
// ---------------------------------------------------------------------------

struct SignalSet {
    SignalRecord r_h, u_h, y_l;
    std::optional<SignalRecord> y_h;
    std::size_t factor = 1;
    std::size_t periods = 1;
    std::uint64_t seed = 0;
};

inline json signal_manifest(const SignalSet& s) {
    json files = {{"r_h", "r_h.csv"}, {"u_h", "u_h.csv"}, {"y_l", "y_l.csv"}};
    if (s.y_h) files["y_h"] = "y_h.csv";
    return {{"format_version", kFormatVersion},
            {"fast_sample_time", s.r_h.sample_time},
            {"slow_sample_time", s.y_l.sample_time},
            {"factor", s.factor},
            {"periods", s.periods},
            {"samples", s.r_h.samples()},
            {"seed", s.seed},
            {"files", files}};
}

inline void write_signal_set(const std::filesystem::path& dir, const SignalSet& s) {
    write_signal_csv(dir / "r_h.csv", s.r_h);
    write_signal_csv(dir / "u_h.csv", s.u_h);
    write_signal_csv(dir / "y_l.csv", s.y_l);
    if (s.y_h) write_signal_csv(dir / "y_h.csv", *s.y_h);
    write_text(dir / "signals.json", signal_manifest(s).dump(2) + "\n");
}

/// Reads signals.json and the records it names; consistency failures are DataErrors.
inline SignalSet read_signal_set(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "signals.json";
    if (!std::filesystem::exists(manifest_path)) throw DataError("missing '" + manifest_path.string() + "'");
    json m;
    try {
        m = json::parse(read_text(manifest_path));
    } catch (const json::parse_error& e) {
        throw DataError("signals.json: " + std::string(e.what()));
    }
    if (m.value("format_version", 0) != kFormatVersion) throw DataError("signals.json: unsupported format_version");
    SignalSet s;
    double th = 0.0, tl = 0.0;
    try {
        th = m.at("fast_sample_time").get<double>();
        tl = m.at("slow_sample_time").get<double>();
        s.factor = m.at("factor").get<std::size_t>();
        s.periods = m.value("periods", std::size_t{1});
        s.seed = m.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw DataError("signals.json: " + std::string(e.what()));
    }
    if (s.factor == 0 || !(th > 0.0) || !same_sample_time(tl, th * static_cast<double>(s.factor)))
        throw DataError("signals.json: slow_sample_time must equal factor * fast_sample_time");
    const json files = m.value("files", json::object());
    auto name = [&](const char* key) { return files.value(key, std::string(key) + ".csv"); };
    s.r_h = read_signal_csv(dir / name("r_h"), th, RateTag::fast);
    s.u_h = read_signal_csv(dir / name("u_h"), th, RateTag::fast);
    s.y_l = read_signal_csv(dir / name("y_l"), tl, RateTag::slow);
    if (files.contains("y_h")) s.y_h = read_signal_csv(dir / name("y_h"), th, RateTag::fast);
    if (s.r_h.samples() != s.u_h.samples())
        throw DataError("signal lengths differ: r_h has " + std::to_string(s.r_h.samples()) + " rows, u_h has " +
                        std::to_string(s.u_h.samples()));
    if (s.r_h.channels() != s.u_h.channels()) throw DataError("channel counts of r_h and u_h differ");
    if (s.y_l.samples() * s.factor != s.u_h.samples())
        throw DataError("y_l has " + std::to_string(s.y_l.samples()) + " rows, expected " +
                        std::to_string(s.u_h.samples() / std::max<std::size_t>(s.factor, 1)));
    if (s.periods == 0 || s.u_h.samples() % s.periods != 0 || (s.u_h.samples() / s.periods) % s.factor != 0)
        throw DataError("signals.json: periods does not divide the record into whole slow periods");
    s.r_h.n_periods = s.periods;
    s.u_h.n_periods = s.periods;
    s.y_l.n_periods = s.periods;
    return s;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json diagnostics_json(const IdentResult& r) {
    json bins = json::array();
    std::size_t flagged = 0, fallbacks = 0;
    for (const auto& d : r.diagnostics) {
        flagged += d.flagged;
        fallbacks += d.fallback;
        bins.push_back({{"bin", d.bin},
                        {"freq_hz", r.slow_grid.freq_hz(d.bin)},
                        {"residual", finite_or_null(d.residual)},
                        {"window_energy", finite_or_null(d.window_energy)},
                        {"lrm_condition", finite_or_null(d.lrm_condition)},
                        {"inversion_condition", finite_or_null(d.inversion_condition)},
                        {"status", to_string(d.fit_status)},
                        {"fallback", d.fallback},
                        {"flagged", d.flagged},
                        {"alias_energy", d.alias_energy},
                        {"message", d.message}});
    }
    return {{"format_version", kFormatVersion},
            {"factor", r.factor},
            {"n_inputs", r.n_inputs},
            {"n_outputs", r.n_outputs},
            {"slow_bins", r.slow_grid.bins},
            {"fast_bins", r.P_hat.bins()},
            {"slow_sample_time", r.slow_grid.sample_time},
            {"flagged_slow_bins", flagged},
            {"fallback_slow_bins", fallbacks},
            {"bins", bins}};
}

inline json percentiles_json(const Percentiles& p) {
    return {{"p50", p.p50}, {"p90", p.p90}, {"p95", p.p95}, {"p100", p.p100}, {"count", p.count}};
}

inline json error_report_json(const ErrorReport& rep) {
    json entries = json::array();
    for (const auto& e : rep.entries)
        entries.push_back({{"output", e.output},
                           {"input", e.input},
                           {"abs", percentiles_json(e.abs_summary)},
                           {"rel", percentiles_json(e.rel_summary)}});
    json peaks = json::array();
    for (const auto& p : rep.peaks)
        peaks.push_back({{"signal", p.signal},
                         {"channel", p.channel},
                         {"peak", p.peak},
                         {"bound", p.bound ? json(*p.bound) : json(nullptr)},
                         {"within_bound", p.within_bound()}});
    return {{"format_version", kFormatVersion}, {"bins", rep.grid.bins}, {"entries", entries}, {"peaks", peaks}};
}

/// Per-bin error table: k, freq_hz, then abs_yi_uj, rel_yi_uj per entry.
inline std::string error_csv(const ErrorReport& rep) {
    std::string out = "k,freq_hz";
    for (const auto& e : rep.entries) {
        const auto tag = "y" + std::to_string(e.output) + "_u" + std::to_string(e.input);
        out += ",abs_" + tag + ",rel_" + tag;
    }
    out += '\n';
    for (std::size_t k = 0; k < rep.grid.bins; ++k) {
        out += std::to_string(k) + ',' + fmt(rep.grid.freq_hz(k));
        for (const auto& e : rep.entries) out += ',' + fmt(e.abs_error[k]) + ',' + fmt(e.rel_error[k]);
        out += '\n';
    }
    return out;
}

} // namespace mrfrf::io
