#pragma once

#include <cstdint>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctrand/crn.hpp"
#include "ctrand/ctmc.hpp"
#include "ctrand/errors.hpp"
#include "ctrand/prng.hpp"
#include "ctrand/rational.hpp"

namespace ctrand {

inline const char* kToolVersion = "ctrand 0.1.0";

/// Provenance header embedded in every output file. Two runs with the same
/// manifest minus the timestamp produce byte-identical files.
struct RunManifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> input_hashes;  // (name, fnv64 hex)
    std::optional<std::uint64_t> seed;
    mpfr_prec_t precision = 128;
    std::string timestamp;  // ISO-8601 UTC; the only non-deterministic field

    static std::string now_utc() {
        std::time_t t = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        return buf;
    }

    std::string render(const std::string& kind) const {
        std::ostringstream os;
        os << "# ctrand " << kind << " v1\n";
        os << "# version: " << kToolVersion << '\n';
        os << "# command: " << command << '\n';
        for (const auto& [name, hash] : input_hashes) os << "# input: " << name << ' ' << hash << '\n';
        if (seed) os << "# seed: " << *seed << '\n';
        os << "# prng: " << kPrngId << '\n';
        os << "# precision: " << precision << '\n';
        os << "# timestamp: " << timestamp << '\n';
        return os.str();
    }
};

// ---------------------------------------------------------------------------
// Durations on the wire: exact decimal, `p/q`, or `inf`.
// ---------------------------------------------------------------------------

inline std::string render_duration(const Duration& d) {
    if (d.is_infinite()) return "inf";
    if (d.is_survival_point())
        return "surv:" + rational_str(d.survival()) + ":" + rational_str(d.survival_rate());
    return rational_decimal_str(d.rational_value());
}

inline Duration parse_duration(const std::string& text, std::size_t line = 0) {
    if (text == "inf") return Duration::infinity();
    if (text.rfind("surv:", 0) == 0) {
        auto rest = text.substr(5);
        auto colon = rest.find(':');
        if (colon == std::string::npos) throw ParseError("bad survival duration", line, 1);
        return Duration::from_survival(parse_rational(rest.substr(0, colon), line),
                                       parse_rational(rest.substr(colon + 1), line));
    }
    return Duration::rational(parse_rational(text, line));
}

// ---------------------------------------------------------------------------
// Trajectory files: manifest header, then one line per event,
//   state <TAB> duration <TAB> bits@depth
// terminated trajectories end with `state <TAB> inf <TAB> 1...1@depth`.
// ---------------------------------------------------------------------------

inline std::string render_trajectory(const Trajectory& tau, const RunManifest& manifest) {
    std::ostringstream os;
    RunManifest m = manifest;
    m.seed = tau.seed;
    os << m.render("trajectory");
    os << "# model: " << tau.model_fingerprint << '\n';
    os << "# run: " << tau.run_index << '\n';
    os << "# depth: " << tau.depth << '\n';
    os << "# durations: exact\n";
    for (const auto& ev : tau.events)
        os << ev.state.id << '\t' << render_duration(ev.sojourn) << '\t' << ev.bits << '@'
           << ev.bits.size() << '\n';
    return os.str();
}

inline Trajectory parse_trajectory(const std::string& text) {
    Trajectory tau;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto field = [&line](const std::string& key) -> std::optional<std::string> {
                std::string prefix = "# " + key + ": ";
                if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
                return std::nullopt;
            };
            if (auto v = field("model")) tau.model_fingerprint = *v;
            if (auto v = field("seed")) tau.seed = std::stoull(*v);
            if (auto v = field("run")) tau.run_index = std::stoull(*v);
            if (auto v = field("depth")) tau.depth = static_cast<unsigned>(std::stoul(*v));
            continue;
        }
        std::istringstream ls(line);
        std::string state, duration, bits;
        if (!std::getline(ls, state, '\t') || !std::getline(ls, duration, '\t') ||
            !std::getline(ls, bits))
            throw ParseError("trajectory line needs state<TAB>duration<TAB>bits@depth", lineno, 1);
        auto at = bits.rfind('@');
        if (at == std::string::npos) throw ParseError("missing @depth on bits field", lineno, 1);
        std::string bitstr = bits.substr(0, at);
        validate_bits(bitstr);
        if (std::to_string(bitstr.size()) != bits.substr(at + 1))
            throw ParseError("bits@depth length mismatch", lineno, 1);
        TrajectoryEvent ev{{state}, parse_duration(duration, lineno), bitstr};
        if (ev.sojourn.is_infinite()) {
            tau.events.push_back(std::move(ev));
            tau.terminated = true;
            break;
        }
        tau.events.push_back(std::move(ev));
    }
    return tau;
}

/// The spec named by a trajectory's stored encodings (states plus bits).
inline TrajectorySpec trajectory_spec(const Trajectory& tau) {
    TrajectorySpec w;
    for (const auto& ev : tau.events) w.pairs.push_back({ev.state, ev.bits});
    return w;
}

// ---------------------------------------------------------------------------
// Cover files: manifest header, then `k <TAB> spec` rows.
// ---------------------------------------------------------------------------

inline std::string render_cover(const NullCoverPrefix& cover, const RunManifest& manifest) {
    std::ostringstream os;
    os << manifest.render("cover");
    for (const auto& [k, specs] : cover.rows)
        for (const auto& w : specs) os << k << '\t' << render_spec(w) << '\n';
    return os.str();
}

inline NullCoverPrefix parse_cover(const std::string& text) {
    NullCoverPrefix cover;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("cover line needs k<TAB>spec", lineno, 1);
        unsigned k;
        try {
            k = static_cast<unsigned>(std::stoul(line.substr(0, tab)));
        } catch (...) {
            throw ParseError("bad cover row index", lineno, 1);
        }
        cover.rows[k].push_back(parse_spec(line.substr(tab + 1)));
    }
    return cover;
}

// ---------------------------------------------------------------------------
// Model files: CRN DSL (`.crn` or any text containing `@`) or the transition
// table format. Table models load as unit-exit-rate CTMCs (rates equal jump
// probabilities), which leaves every measure and betting operation unchanged.
// ---------------------------------------------------------------------------

struct LoadedModel {
    CtmcModel ctmc;
    std::optional<CrnModel> crn;
    std::string source_text;
    std::string fingerprint;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline LoadedModel load_model_text(const std::string& text, bool is_crn) {
    if (is_crn) {
        CrnModel crn = parse_crn(text);
        CtmcModel ctmc = crn_to_ctmc(crn);
        std::string fp = ctmc.fingerprint();
        return {std::move(ctmc), std::move(crn), text, fp};
    }
    TransitionTable table = parse_transition_table(text);
    std::string fp = fnv1a64_hex(render_transition_table(table));
    auto sys = std::make_shared<const TransitionTable>(table);
    CtmcModel ctmc(
        [sys](const StateId& q) {
            auto it = sys->rows.find(q);
            return it == sys->rows.end() ? CtmcModel::RateRow{} : it->second;
        },
        table.init, fp);
    return {std::move(ctmc), std::nullopt, text, fp};
}

inline LoadedModel load_model_file(const std::string& path) {
    std::string text = read_file(path);
    bool is_crn = (path.size() >= 4 && path.substr(path.size() - 4) == ".crn") ||
                  text.find('@') != std::string::npos;
    return load_model_text(text, is_crn);
}

}  // namespace ctrand
