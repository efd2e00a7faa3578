// Command-line surface for the ctrand library: parse and summarize models,
// simulate trajectories, compute exact cylinder measures, run and verify
// betting strategies, check cover files, and produce randomness-deficiency
// reports.
//
// Exit codes: 0 success/pass, 1 verification failure, 2 input error,
// 3 boundary ambiguity.

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ctrand/ctrand.hpp"

namespace {

using namespace ctrand;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitInputError = 2;
constexpr int kExitBoundary = 3;

struct MartingaleSpec {
    std::string name;
    std::map<std::string, std::string> params;
};

MartingaleSpec parse_martingale_arg(const std::string& arg) {
    MartingaleSpec out;
    std::size_t pos = arg.find(':');
    out.name = arg.substr(0, pos);
    while (pos != std::string::npos) {
        std::size_t next = arg.find(':', pos + 1);
        std::string kv = arg.substr(pos + 1, next == std::string::npos ? next : next - pos - 1);
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("martingale parameter '" + kv + "' needs key=value");
        out.params[kv.substr(0, eq)] = kv.substr(eq + 1);
        pos = next;
    }
    return out;
}

TrajectoryMartingale build_martingale(const LoadedModel& model, const MartingaleSpec& spec) {
    auto param = [&spec](const std::string& key) -> std::string {
        auto it = spec.params.find(key);
        if (it == spec.params.end())
            throw std::invalid_argument("martingale '" + spec.name + "' needs parameter " + key);
        return it->second;
    };
    if (spec.name == "zeno") return zeno_detector(model.ctmc, std::stoul(param("i")));
    if (spec.name == "constant") {
        auto it = spec.params.find("c");
        return constant_martingale(it == spec.params.end() ? Rational(1)
                                                           : parse_rational(it->second));
    }
    if (spec.name == "sojourn")
        return sojourn_index_martingale(model.ctmc, first_bit_doubler(), std::stoul(param("n")));
    if (spec.name == "cover") {
        NullCoverPrefix cover = parse_cover(read_file(param("file")));
        return cover_to_martingale(model.ctmc, cover, static_cast<unsigned>(std::stoul(param("k"))));
    }
    throw std::invalid_argument("unknown martingale '" + spec.name +
                                "' (available: constant, zeno, sojourn, cover)");
}

std::string command_line(int argc, char** argv) {
    std::ostringstream os;
    for (int i = 0; i < argc; ++i) {
        if (i) os << ' ';
        os << argv[i];
    }
    return os.str();
}

void print_fairness(const FairnessReport& report, const std::string& name, std::size_t depth) {
    std::cout << "fairness: martingale=" << name << " depth=" << depth
              << " nodes=" << report.nodes_checked << " exact=" << (report.exact ? "yes" : "no")
              << " max-residual=" << rational_str(report.max_abs_residual)
              << " violations=" << report.violations
              << " verdict=" << (report.pass() ? "PASS" : "FAIL") << '\n';
    if (!report.pass()) std::cout << "worst: " << report.worst << '\n';
}

int cmd_parse(const std::string& model_path) {
    LoadedModel model = load_model_file(model_path);
    std::cout << "model: " << model_path << '\n';
    std::cout << "fingerprint: " << model.fingerprint << '\n';
    if (model.crn) {
        const CrnModel& crn = *model.crn;
        std::cout << "kind: crn\n";
        std::cout << "species: " << crn.species.size() << " (";
        for (std::size_t i = 0; i < crn.species.size(); ++i)
            std::cout << (i ? ", " : "") << crn.species[i];
        std::cout << ")\n";
        std::cout << "reactions: " << crn.reactions.size() << '\n';
        StateId q0 = crn.initial_state();
        std::cout << "initial state: " << q0.id << '\n';
        std::cout << "initial terminal: " << (model.ctmc.terminal(q0) ? "yes" : "no") << '\n';
        for (const auto& [name, bound] : crn.bounds)
            std::cout << "bound: " << name << " <= " << bound << '\n';
    } else {
        TransitionTable table = parse_transition_table(model.source_text);
        std::cout << "kind: transition-table\n";
        std::cout << "states: " << table.states.size() << '\n';
        std::size_t terminals = 0;
        for (const auto& q : table.states)
            if (!table.rows.count(q)) ++terminals;
        std::cout << "terminal states: " << terminals << '\n';
        std::cout << "init support: " << table.init.support.size() << '\n';
    }
    return kExitOk;
}

int cmd_simulate(const std::string& model_path, std::uint64_t seed, std::size_t events,
                 std::optional<double> max_time, unsigned depth, std::size_t runs,
                 const std::string& out_path, const std::string& cmdline) {
    LoadedModel model = load_model_file(model_path);
    RunManifest manifest;
    manifest.command = cmdline;
    manifest.input_hashes = {{std::filesystem::path(model_path).filename().string(),
                              model.fingerprint}};
    manifest.seed = seed;
    manifest.timestamp = RunManifest::now_utc();

    std::vector<std::string> rendered(runs);
    auto simulate_one = [&](std::size_t run) {
        Trajectory tau;
        if (events == 0) {
            tau.seed = seed;
            tau.run_index = run;
            tau.model_fingerprint = model.fingerprint;
            tau.depth = depth;
        } else {
            SimConfig cfg;
            cfg.seed = seed;
            cfg.run_index = run;
            cfg.max_events = events;
            cfg.max_time = max_time;
            cfg.depth = depth;
            tau = ssa_simulate(model.ctmc, cfg);
            Profile depths(tau.events.size(), depth);
            TrajectorySpec encoded = encode_trajectory(model.ctmc, tau, depths);
            for (std::size_t i = 0; i < tau.events.size(); ++i)
                tau.events[i].bits = encoded.pairs[i].bits;
        }
        rendered[run] = render_trajectory(tau, manifest);
    };
    // Independent runs own independent child streams; fan out when asked for
    // several.
    if (runs > 1) {
        std::vector<std::thread> pool;
        std::size_t workers = std::min<std::size_t>(runs, std::thread::hardware_concurrency());
        std::atomic<std::size_t> next{0};
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t r; (r = next.fetch_add(1)) < runs;) simulate_one(r);
            });
        for (auto& t : pool) t.join();
    } else {
        simulate_one(0);
    }
    for (std::size_t run = 0; run < runs; ++run) {
        std::string path = out_path;
        if (runs > 1) {
            auto dot = path.rfind('.');
            std::string stem = dot == std::string::npos ? path : path.substr(0, dot);
            std::string ext = dot == std::string::npos ? "" : path.substr(dot);
            path = stem + "." + std::to_string(run) + ext;
        }
        write_file(path, rendered[run]);
        std::cout << "wrote " << path << '\n';
    }
    return kExitOk;
}

int cmd_measure(const std::string& model_path, const std::string& spec_text) {
    LoadedModel model = load_model_file(model_path);
    TrajectorySpec w = parse_spec(spec_text);
    std::cout << rational_str(mu_traj(model.ctmc, w)) << '\n';
    return kExitOk;
}

int cmd_bet(const std::string& model_path, const std::string& traj_path,
            const std::string& martingale_arg, std::size_t depth) {
    LoadedModel model = load_model_file(model_path);
    Trajectory tau = parse_trajectory(read_file(traj_path));
    if (!tau.model_fingerprint.empty() && tau.model_fingerprint != "-" &&
        tau.model_fingerprint != model.fingerprint)
        throw std::invalid_argument("trajectory was generated from a different model (fingerprint " +
                                    tau.model_fingerprint + ")");
    TrajectoryMartingale d = build_martingale(model, parse_martingale_arg(martingale_arg));
    TrajectorySpec target = trajectory_spec(tau);
    if (depth > 0 && target.size() > depth) target.pairs.resize(depth);
    CapitalTrace trace = run_martingale(d, make_event_schedule(target));
    for (std::size_t i = 0; i < trace.steps.size(); ++i)
        std::cout << "step " << i << ": capital=" << rational_str(trace.steps[i].capital) << '\n';
    std::cout << "max-capital: " << rational_str(trace.max_capital) << " at step " << trace.argmax
              << '\n';
    for (const auto& [j, step] : trace.threshold_crossings)
        std::cout << "crossed 2^" << j << " at step " << step << '\n';
    return kExitOk;
}

int cmd_verify(const std::string& model_path, const std::string& martingale_arg,
               std::size_t depth) {
    LoadedModel model = load_model_file(model_path);
    MartingaleSpec mspec = parse_martingale_arg(martingale_arg);
    TrajectoryMartingale d = build_martingale(model, mspec);
    VerifyOptions opts;
    opts.depth = depth;
    FairnessReport report = verify_trajectory_fairness(d, model.ctmc, opts);
    print_fairness(report, d.name, depth);
    return report.pass() ? kExitOk : kExitVerifyFail;
}

int cmd_cover_check(const std::string& model_path, const std::string& cover_path) {
    LoadedModel model = load_model_file(model_path);
    NullCoverPrefix cover = parse_cover(read_file(cover_path));
    CoverReport report = verify_null_cover(model.ctmc, cover);
    for (const auto& row : report.rows)
        std::cout << "k=" << row.k << " sum=" << rational_str(row.sum)
                  << " bound=" << rational_str(row.bound)
                  << " margin=" << rational_str(row.margin())
                  << " verdict=" << (row.pass ? "PASS" : "FAIL") << '\n';
    std::cout << "cover: " << (report.pass() ? "PASS" : "FAIL") << '\n';
    return report.pass() ? kExitOk : kExitVerifyFail;
}

int cmd_zeno_report(const std::string& model_path, const std::string& traj_path) {
    LoadedModel model = load_model_file(model_path);
    if (!model.crn)
        throw std::invalid_argument("zeno-report needs a CRN model (bounds and species counts)");
    Trajectory tau = parse_trajectory(read_file(traj_path));
    if (!tau.model_fingerprint.empty() && tau.model_fingerprint != "-" &&
        tau.model_fingerprint != model.fingerprint)
        throw std::invalid_argument("trajectory was generated from a different model");
    ZenoReport report = zeno_report(*model.crn, model.ctmc, tau);
    std::cout << "bounds: " << (report.bounds_respected ? "respected" : "violated") << '\n';
    if (report.first_bound_violation)
        std::cout << "first-violation-index: " << *report.first_bound_violation << '\n';
    std::cout << "total-sojourn: " << rational_str(report.total_sojourn) << '\n';
    std::cout << "max-exit-rate: " << rational_str(report.max_exit_rate) << '\n';
    std::cout << "zero-suffix-length: " << report.zero_suffix_length << '\n';
    std::cout << "detector-capital: " << rational_str(report.detector_capital) << '\n';
    return kExitOk;
}

int cmd_deficiency(const std::string& model_path, const std::string& spec_text,
                   const std::string& spec_file, const std::string& traj_path,
                   const std::string& proxy_name) {
    LoadedModel model = load_model_file(model_path);
    if (proxy_name != "deflate-9")
        throw std::invalid_argument("unknown proxy '" + proxy_name + "' (available: deflate-9)");
    CompressorProxy proxy = CompressorProxy::deflate9();
    TrajectorySpec w;
    if (!traj_path.empty()) {
        Trajectory tau = parse_trajectory(read_file(traj_path));
        w = trajectory_spec(tau);
    } else if (!spec_file.empty()) {
        std::string text = read_file(spec_file);
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        w = parse_spec(text);
    } else {
        w = parse_spec(spec_text);
    }
    DeficiencyReport report = deficiency_report(model.ctmc, w, proxy);
    std::cout << "proxy: " << report.proxy_id << '\n';
    std::cout << "spec-bytes: " << report.spec_text.size() << '\n';
    if (report.self_info.is_exact())
        std::cout << "l(w): " << *report.self_info.exact_bits << " (exact)\n";
    else
        std::cout << "l(w): " << report.self_info.enclosure->str() << '\n';
    std::cout << "khat(w): " << report.khat_bits << '\n';
    std::cout << "khat(profile): " << report.khat_profile_bits << '\n';
    std::cout << "deficiency: " << report.certified_deficiency << '\n';
    std::cout << "verdict: " << report.verdict() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuous-time Markov chain trajectory randomness toolkit"};
    app.require_subcommand(1);

    std::string model_path, spec_text, traj_path, cover_path, out_path;
    std::string martingale_arg = "constant";
    std::string proxy_name = "deflate-9";
    std::uint64_t seed = 0;
    std::size_t events = 1000, runs = 1, verify_depth = 5, bet_depth = 0;
    unsigned encode_depth = 8;
    double max_time = 0.0;

    auto* parse_cmd = app.add_subcommand("parse", "validate a model file and print a summary");
    parse_cmd->add_option("model", model_path)->required();

    auto* sim_cmd = app.add_subcommand("simulate", "run the stochastic simulation algorithm");
    sim_cmd->add_option("model", model_path)->required();
    sim_cmd->add_option("--seed", seed)->required();
    sim_cmd->add_option("--events", events);
    auto* time_opt = sim_cmd->add_option("--time", max_time);
    sim_cmd->add_option("--depth", encode_depth);
    sim_cmd->add_option("--runs", runs);
    sim_cmd->add_option("--out", out_path)->required();

    auto* measure_cmd = app.add_subcommand("measure", "exact cylinder measure of a spec");
    measure_cmd->add_option("model", model_path)->required();
    measure_cmd->add_option("--spec", spec_text);

    auto* bet_cmd = app.add_subcommand("bet", "run a betting strategy along a trajectory");
    bet_cmd->add_option("model", model_path)->required();
    bet_cmd->add_option("trajectory", traj_path)->required();
    bet_cmd->add_option("--martingale", martingale_arg)->required();
    bet_cmd->add_option("--depth", bet_depth)
        ->description("truncate the betting schedule to this many events (0: all)");

    auto* verify_cmd = app.add_subcommand("verify", "verify the fairness equations of a strategy");
    verify_cmd->add_option("model", model_path)->required();
    verify_cmd->add_option("--martingale", martingale_arg)->required();
    verify_cmd->add_option("--depth", verify_depth);

    auto* cover_cmd = app.add_subcommand("cover-check", "verify the row bounds of a cover file");
    cover_cmd->add_option("model", model_path)->required();
    cover_cmd->add_option("cover", cover_path)->required();

    auto* zeno_cmd = app.add_subcommand("zeno-report", "bounded-counts and sojourn-sum diagnostics");
    zeno_cmd->add_option("model", model_path)->required();
    zeno_cmd->add_option("trajectory", traj_path)->required();

    std::string spec_file;
    auto* def_cmd = app.add_subcommand("deficiency", "compression-based deficiency report");
    def_cmd->add_option("model", model_path)->required();
    def_cmd->add_option("--spec", spec_text);
    def_cmd->add_option("--spec-file", spec_file);
    def_cmd->add_option("--trajectory", traj_path);
    def_cmd->add_option("--proxy", proxy_name);

    CLI11_PARSE(app, argc, argv);

    try {
        if (parse_cmd->parsed()) return cmd_parse(model_path);
        if (sim_cmd->parsed())
            return cmd_simulate(model_path, seed, events,
                                time_opt->count() ? std::optional<double>(max_time) : std::nullopt,
                                encode_depth, runs, out_path, command_line(argc, argv));
        if (measure_cmd->parsed()) return cmd_measure(model_path, spec_text);
        if (bet_cmd->parsed()) return cmd_bet(model_path, traj_path, martingale_arg, bet_depth);
        if (verify_cmd->parsed()) return cmd_verify(model_path, martingale_arg, verify_depth);
        if (cover_cmd->parsed()) return cmd_cover_check(model_path, cover_path);
        if (zeno_cmd->parsed()) return cmd_zeno_report(model_path, traj_path);
        if (def_cmd->parsed())
            return cmd_deficiency(model_path, spec_text, spec_file, traj_path, proxy_name);
    } catch (const ctrand::BoundaryAmbiguous& e) {
        std::cerr << "boundary ambiguity: " << e.what() << '\n';
        return kExitBoundary;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitInputError;
}
