#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctrand/ctmc.hpp"
#include "ctrand/errors.hpp"
#include "ctrand/prng.hpp"
#include "ctrand/rational.hpp"
#include "ctrand/transition.hpp"

namespace ctrand {

/// Stochastic reaction: reactant/product count vectors over the (sorted)
/// species list plus a positive rational rate constant.
struct Reaction {
    std::vector<unsigned long> reactants;
    std::vector<unsigned long> products;
    Rational rate_constant;
};

struct CrnModel {
    std::vector<std::string> species;  // sorted; state vectors index into this
    std::vector<Reaction> reactions;
    std::vector<unsigned long> init_counts;
    std::map<std::string, unsigned long> bounds;  // optional `bound X <= n` assertions

    std::size_t species_index(const std::string& name) const {
        auto it = std::lower_bound(species.begin(), species.end(), name);
        if (it == species.end() || *it != name) throw std::invalid_argument("unknown species " + name);
        return static_cast<std::size_t>(it - species.begin());
    }

    StateId initial_state() const { return render_count_state(species, init_counts); }
};

namespace detail {

struct CrnLineParser {
    const std::string& line;
    std::size_t lineno;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    }
    bool at_end() {
        skip_ws();
        return pos >= line.size();
    }
    bool peek_is(char c) {
        skip_ws();
        return pos < line.size() && line[pos] == c;
    }
    void expect(const std::string& tok) {
        skip_ws();
        if (line.compare(pos, tok.size(), tok) != 0)
            throw ParseError("expected '" + tok + "'", lineno, pos + 1);
        pos += tok.size();
    }
    bool try_consume(const std::string& tok) {
        skip_ws();
        if (line.compare(pos, tok.size(), tok) == 0) {
            pos += tok.size();
            return true;
        }
        return false;
    }
    // keyword followed by a word boundary, so `initX` stays a species name
    bool try_keyword(const std::string& word) {
        skip_ws();
        if (line.compare(pos, word.size(), word) != 0) return false;
        std::size_t after = pos + word.size();
        if (after < line.size() &&
            (std::isalnum(static_cast<unsigned char>(line[after])) || line[after] == '_'))
            return false;
        pos = after;
        return true;
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        if (pos < line.size() && (std::isalpha(static_cast<unsigned char>(line[pos])) || line[pos] == '_')) {
            ++pos;
            while (pos < line.size() &&
                   (std::isalnum(static_cast<unsigned char>(line[pos])) || line[pos] == '_'))
                ++pos;
        }
        if (start == pos) throw ParseError("expected a species name", lineno, pos + 1);
        return line.substr(start, pos - start);
    }
    unsigned long integer() {
        skip_ws();
        std::size_t start = pos;
        while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
        if (start == pos) throw ParseError("expected an integer", lineno, pos + 1);
        return std::stoul(line.substr(start, pos - start));
    }
    std::string number_token() {
        skip_ws();
        std::size_t start = pos;
        while (pos < line.size() && (std::isdigit(static_cast<unsigned char>(line[pos])) ||
                                     line[pos] == '.' || line[pos] == '/' || line[pos] == '-'))
            ++pos;
        if (start == pos) throw ParseError("expected a number", lineno, pos + 1);
        return line.substr(start, pos - start);
    }
};

/// One side of a reaction as (coefficient, species-name) terms; the empty
/// side is written `0` or left blank.
inline std::vector<std::pair<unsigned long, std::string>> parse_side(CrnLineParser& p,
                                                                     const char* stop) {
    std::vector<std::pair<unsigned long, std::string>> terms;
    p.skip_ws();
    if (p.pos >= p.line.size() || p.line.compare(p.pos, std::strlen(stop), stop) == 0) return terms;
    if (p.peek_is('0')) {
        ++p.pos;
        return terms;
    }
    while (true) {
        unsigned long coeff = 1;
        p.skip_ws();
        if (p.pos < p.line.size() && std::isdigit(static_cast<unsigned char>(p.line[p.pos])))
            coeff = p.integer();
        std::string name = p.ident();
        terms.emplace_back(coeff, name);
        if (!p.try_consume("+")) break;
    }
    return terms;
}

}  // namespace detail

/// Grammar, one statement per line (`#` comments):
///   reaction:  side `->` side `@` rate      side: `0` | [coeff] Name (`+` ...)*
///   init:      `init` Name `=` count
///   bound:     `bound` Name `<=` count
/// Rates are positive rationals or decimals; reactions must change the state.
inline CrnModel parse_crn(const std::string& text) {
    struct RawReaction {
        std::vector<std::pair<unsigned long, std::string>> lhs, rhs;
        Rational rate;
        std::size_t lineno;
    };
    std::vector<RawReaction> raw;
    std::vector<std::pair<std::string, unsigned long>> raw_init;
    std::vector<std::pair<std::string, unsigned long>> raw_bounds;
    std::vector<std::size_t> init_lines, bound_lines;

    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        detail::CrnLineParser p{line, lineno};
        if (p.at_end()) continue;
        if (p.try_keyword("init")) {
            std::string name = p.ident();
            p.expect("=");
            unsigned long count = p.integer();
            if (!p.at_end()) throw ParseError("trailing input after init", lineno, p.pos + 1);
            raw_init.emplace_back(name, count);
            init_lines.push_back(lineno);
            continue;
        }
        if (p.try_keyword("bound")) {
            std::string name = p.ident();
            p.expect("<=");
            unsigned long count = p.integer();
            if (!p.at_end()) throw ParseError("trailing input after bound", lineno, p.pos + 1);
            raw_bounds.emplace_back(name, count);
            bound_lines.push_back(lineno);
            continue;
        }
        RawReaction r;
        r.lineno = lineno;
        r.lhs = detail::parse_side(p, "->");
        p.expect("->");
        r.rhs = detail::parse_side(p, "@");
        p.expect("@");
        std::size_t numpos = p.pos;
        r.rate = parse_rational(p.number_token(), lineno, numpos + 1);
        if (sgn(r.rate) <= 0) throw ParseError("rate constant must be > 0", lineno, numpos + 1);
        if (!p.at_end()) throw ParseError("trailing input after rate", lineno, p.pos + 1);
        raw.push_back(std::move(r));
    }

    CrnModel model;
    for (const auto& r : raw) {
        for (const auto& [_, name] : r.lhs) model.species.push_back(name);
        for (const auto& [_, name] : r.rhs) model.species.push_back(name);
    }
    std::sort(model.species.begin(), model.species.end());
    model.species.erase(std::unique(model.species.begin(), model.species.end()),
                        model.species.end());

    auto side_vector = [&model](const std::vector<std::pair<unsigned long, std::string>>& terms) {
        std::vector<unsigned long> v(model.species.size(), 0);
        for (const auto& [coeff, name] : terms) v[model.species_index(name)] += coeff;
        return v;
    };
    for (const auto& r : raw) {
        Reaction rx{side_vector(r.lhs), side_vector(r.rhs), r.rate};
        if (rx.reactants == rx.products)
            throw ParseError("reaction has identical reactant and product vectors", r.lineno, 1);
        model.reactions.push_back(std::move(rx));
    }

    model.init_counts.assign(model.species.size(), 0);
    for (std::size_t i = 0; i < raw_init.size(); ++i) {
        const auto& [name, count] = raw_init[i];
        if (std::find(model.species.begin(), model.species.end(), name) == model.species.end())
            throw ParseError("init line names unknown species '" + name + "'", init_lines[i], 1);
        model.init_counts[model.species_index(name)] = count;
    }
    for (std::size_t i = 0; i < raw_bounds.size(); ++i) {
        const auto& [name, count] = raw_bounds[i];
        if (std::find(model.species.begin(), model.species.end(), name) == model.species.end())
            throw ParseError("bound line names unknown species '" + name + "'", bound_lines[i], 1);
        model.bounds[name] = count;
    }
    return model;
}

/// Canonical rendering; parse(render(m)) is structurally identical to m.
inline std::string render_crn(const CrnModel& model) {
    std::ostringstream os;
    auto side = [&](const std::vector<unsigned long>& v) {
        bool any = false;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] == 0) continue;
            if (any) os << " + ";
            if (v[i] != 1) os << v[i] << ' ';
            os << model.species[i];
            any = true;
        }
        if (!any) os << '0';
    };
    for (const auto& r : model.reactions) {
        side(r.reactants);
        os << " -> ";
        side(r.products);
        os << " @ " << rational_str(r.rate_constant) << '\n';
    }
    for (std::size_t i = 0; i < model.species.size(); ++i)
        if (model.init_counts[i] != 0) os << "init " << model.species[i] << " = " << model.init_counts[i] << '\n';
    for (const auto& [name, bound] : model.bounds)
        os << "bound " << name << " <= " << bound << '\n';
    return os.str();
}

/// Stochastic mass-action propensity: 0 when the reactants are not present,
/// otherwise the rate constant times the falling factorial of each reactant
/// count (the number of distinct reactant combinations).
inline Rational propensity(const Reaction& rho, const std::vector<unsigned long>& q) {
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] < rho.reactants[i]) return Rational(0);
    Rational a = rho.rate_constant;
    for (std::size_t i = 0; i < q.size(); ++i)
        for (unsigned long j = 0; j < rho.reactants[i]; ++j) a *= Rational(q[i] - j);
    return a;
}

/// Reaction rate at a state; stochastic mass action by default, replaceable
/// without touching anything downstream of the compiled chain.
using PropensityFn = std::function<Rational(const Reaction&, const std::vector<unsigned long>&)>;

/// Compiles to a CTMC: lambda(q, q') sums the propensities of all reactions
/// applicable at q with net effect q' - q. Successors are enumerated lazily;
/// no reachability precomputation.
inline CtmcModel crn_to_ctmc(const CrnModel& model, PropensityFn propensity_fn = {}) {
    auto shared = std::make_shared<const CrnModel>(model);
    if (!propensity_fn)
        propensity_fn = [](const Reaction& rho, const std::vector<unsigned long>& q) {
            return propensity(rho, q);
        };
    auto rates = [shared, propensity_fn](const StateId& state) {
        CtmcModel::RateRow row;
        auto counts = parse_count_state(shared->species, state);
        if (!counts) throw std::invalid_argument("state '" + state.id + "' does not match the species list");
        std::map<StateId, Rational> acc;
        for (const auto& rho : shared->reactions) {
            Rational a = propensity_fn(rho, *counts);
            if (sgn(a) == 0) continue;
            std::vector<unsigned long> next(*counts);
            for (std::size_t i = 0; i < next.size(); ++i)
                next[i] = next[i] - rho.reactants[i] + rho.products[i];
            acc[render_count_state(shared->species, next)] += a;
        }
        row.assign(acc.begin(), acc.end());
        return row;
    };
    Initialization init = Initialization::point(model.initial_state());
    return CtmcModel(std::move(rates), std::move(init), fnv1a64_hex(render_crn(model)));
}

/// The rate-free Boolean shadow of a CRN (rates erased).
inline BooleanTransitionSystem crn_to_boolean(const CrnModel& model) {
    std::vector<RateFreeReaction> reactions;
    reactions.reserve(model.reactions.size());
    for (const auto& r : model.reactions) reactions.push_back({r.reactants, r.products});
    return ratefree_crn_to_boolean(model.species, std::move(reactions));
}

// ---------------------------------------------------------------------------
// Stochastic simulation.
// ---------------------------------------------------------------------------

struct SimConfig {
    std::uint64_t seed = 0;
    std::uint64_t run_index = 0;
    std::size_t max_events = 1;
    std::optional<double> max_time;
    unsigned depth = 8;  // encoding depth per event
};

/// Exact stochastic simulation: draws the initial state from sigma, then
/// repeatedly a sojourn ~ Exponential(lambda_q) followed by a jump with
/// probability p(q, r), until a terminal state, the event cap, or the time
/// budget. Deterministic for a given (seed, run_index): run i draws from
/// child stream i of the master seed. Sojourn samples are stored as exact
/// binary64 values; terminal states close the trajectory with sojourn inf.
inline Trajectory ssa_simulate(const CtmcModel& model, const SimConfig& cfg) {
    if (cfg.max_events < 1) throw std::invalid_argument("max_events must be at least 1");
    RandomStream stream(child_seed(cfg.seed, cfg.run_index));
    Trajectory tau;
    tau.seed = cfg.seed;
    tau.run_index = cfg.run_index;
    tau.model_fingerprint = model.fingerprint();
    tau.depth = cfg.depth;

    std::vector<Rational> init_weights;
    for (const auto& [q, w] : model.init().support) init_weights.push_back(w);
    StateId q = model.init().support[stream.pick(init_weights)].first;

    double elapsed = 0.0;
    std::size_t jumps = 0;
    while (true) {
        if (model.terminal(q)) {
            // max_events bounds jumps; the terminal pair closes for free
            tau.events.push_back({q, Duration::infinity(), ""});
            tau.terminated = true;
            break;
        }
        if (jumps >= cfg.max_events) break;
        double rate = model.exit_rate(q).get_d();
        double sojourn = stream.exponential(rate);
        if (cfg.max_time && elapsed + sojourn > *cfg.max_time) break;
        elapsed += sojourn;
        auto row = model.jump_row(q);
        std::vector<Rational> weights;
        weights.reserve(row.size());
        for (const auto& [r, p] : row) weights.push_back(p);
        StateId next = row[stream.pick(weights)].first;
        tau.events.push_back({q, Duration::rational(Rational(sojourn)), ""});
        q = next;
        ++jumps;
    }
    return tau;
}

// ---------------------------------------------------------------------------
// Zeno diagnostics.
// ---------------------------------------------------------------------------

struct ZenoReport {
    bool bounds_respected = true;
    std::optional<std::size_t> first_bound_violation;
    Rational total_sojourn = Rational(0);       // exact sum of the finite sojourns
    std::vector<double> partial_sums;           // running totals, for display
    Rational max_exit_rate = Rational(0);       // the constant M along the stored prefix
    std::size_t zero_suffix_length = 0;         // trailing run of first-encoded-bit-zero events
    Rational detector_capital = Rational(1);    // 2^zero_suffix_length
};

/// Reports bound compliance, sojourn partial sums, the maximum exit rate
/// encountered, and the longest all-zero suffix of first encoded bits (the
/// Zeno detector's fuel).
inline ZenoReport zeno_report(const CrnModel& crn, const CtmcModel& model, const Trajectory& tau,
                              const PrecisionConfig& prec = {}) {
    ZenoReport report;
    double running = 0.0;
    std::vector<bool> first_bit_zero;
    for (std::size_t i = 0; i < tau.events.size(); ++i) {
        const auto& ev = tau.events[i];
        auto counts = parse_count_state(crn.species, ev.state);
        if (counts && report.bounds_respected) {
            for (const auto& [name, bound] : crn.bounds) {
                if ((*counts)[crn.species_index(name)] > bound) {
                    report.bounds_respected = false;
                    report.first_bound_violation = i;
                    break;
                }
            }
        }
        Rational rate = model.exit_rate(ev.state);
        if (rate > report.max_exit_rate) report.max_exit_rate = rate;
        if (!ev.sojourn.is_infinite()) {
            report.total_sojourn += ev.sojourn.rational_value();
            running += ev.sojourn.rational_value().get_d();
            report.partial_sums.push_back(running);
            first_bit_zero.push_back(
                encode_time(Rate::of(rate), ev.sojourn, 1, prec) == "0");
        } else {
            first_bit_zero.push_back(false);  // infinite sojourn encodes as 1-bits
        }
    }
    std::size_t run = 0;
    for (auto it = first_bit_zero.rbegin(); it != first_bit_zero.rend() && *it; ++it) ++run;
    report.zero_suffix_length = run;
    report.detector_capital = pow2(static_cast<long>(run));
    return report;
}

}  // namespace ctrand
