#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctrand/errors.hpp"
#include "ctrand/rational.hpp"

namespace ctrand {

/// Canonical state identifier. Two states are equal iff their renderings are
/// byte-identical.
struct StateId {
    std::string id;

    auto operator<=>(const StateId&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const StateId& q) { return os << q.id; }

/// Species-count vectors render as sorted `name:count` pairs joined by commas;
/// `names` must already be sorted and `counts` indexed accordingly.
inline StateId render_count_state(const std::vector<std::string>& names,
                                  const std::vector<unsigned long>& counts) {
    std::ostringstream os;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) os << ',';
        os << names[i] << ':' << counts[i];
    }
    return {os.str()};
}

/// Initial distribution with explicit finite support.
struct Initialization {
    std::vector<std::pair<StateId, Rational>> support;

    Rational weight(const StateId& q) const {
        for (const auto& [s, w] : support)
            if (s == q) return w;
        return Rational(0);
    }

    void validate() const {
        if (support.empty()) throw std::invalid_argument("initialization has empty support");
        Rational sum(0);
        for (const auto& [s, w] : support) {
            if (sgn(w) <= 0) throw std::invalid_argument("initialization weight must be > 0");
            sum += w;
            std::size_t n = 0;
            for (const auto& [t, _] : support)
                if (t == s) ++n;
            if (n != 1) throw std::invalid_argument("duplicate state in initialization support");
        }
        if (sum != 1) throw std::invalid_argument("initialization weights must sum to 1");
    }

    static Initialization point(StateId q) { return {{{std::move(q), Rational(1)}}}; }
};

/// Finite stored state sequence; `extends` marks it as a prefix of an
/// infinite sequence rather than a terminated one.
struct StateSequence {
    std::vector<StateId> states;
    bool extends = false;

    StateSequence() = default;
    StateSequence(std::vector<StateId> s, bool ext = false) : states(std::move(s)), extends(ext) {
        for (std::size_t i = 0; i + 1 < states.size(); ++i)
            if (states[i] == states[i + 1])
                throw std::invalid_argument("state sequence repeats a state at adjacent positions");
    }

    std::size_t size() const { return states.size(); }
    bool empty() const { return states.empty(); }
};

/// Intensional Boolean transition system: an evaluable transition rule plus a
/// terminal-state predicate over a countable state universe.
class BooleanTransitionSystem {
  public:
    using Rule = std::function<bool(const StateId&, const StateId&)>;
    using Predicate = std::function<bool(const StateId&)>;

    BooleanTransitionSystem(Rule delta, Predicate terminal)
        : delta_(std::move(delta)), terminal_(std::move(terminal)) {}

    bool delta(const StateId& q, const StateId& r) const {
        if (q == r) return false;  // irreflexive by definition
        return delta_(q, r);
    }

    bool terminal(const StateId& q) const { return terminal_(q); }

  private:
    Rule delta_;
    Predicate terminal_;
};

/// Intensional probabilistic transition system: a finite-successor enumerator
/// with exact rational weights. A state is terminal iff its row is empty;
/// nonterminal rows must sum to exactly 1.
class ProbabilisticTransitionSystem {
  public:
    using Row = std::vector<std::pair<StateId, Rational>>;
    using Enumerator = std::function<Row(const StateId&)>;

    explicit ProbabilisticTransitionSystem(Enumerator successors)
        : successors_(std::move(successors)) {}

    Row successors(const StateId& q) const {
        Row row = successors_(q);
        Rational sum(0);
        for (const auto& [r, w] : row) {
            if (r == q) throw std::invalid_argument("probabilistic row contains a self-loop");
            if (sgn(w) <= 0) throw std::invalid_argument("probabilistic row weight must be > 0");
            sum += w;
        }
        if (!row.empty() && sum != 1)
            throw std::invalid_argument("nonterminal probabilistic row must sum to exactly 1");
        return row;
    }

    Rational pi(const StateId& q, const StateId& r) const {
        if (q == r) return Rational(0);
        for (const auto& [s, w] : successors(q))
            if (s == r) return w;
        return Rational(0);
    }

    bool terminal(const StateId& q) const { return successors_(q).empty(); }

  private:
    Enumerator successors_;
};

inline ProbabilisticTransitionSystem::Row successors(const ProbabilisticTransitionSystem& sys,
                                                     const StateId& q) {
    return sys.successors(q);
}

inline bool is_admissible(const BooleanTransitionSystem& sys, const Initialization& init,
                          const StateSequence& x) {
    if (x.empty()) return true;
    if (sgn(init.weight(x.states[0])) <= 0) return false;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (!sys.delta(x.states[i], x.states[i + 1])) return false;
    return true;
}

/// True iff no admissible one-step extension exists. Rejects non-admissible
/// input. The empty sequence is never maximal (initial support is nonempty).
inline bool is_maximal(const BooleanTransitionSystem& sys, const Initialization& init,
                       const StateSequence& x) {
    if (!is_admissible(sys, init, x))
        throw std::invalid_argument("is_maximal requires an admissible sequence");
    if (x.empty()) return false;
    return sys.terminal(x.states.back());
}

/// d(x, y) = 2^-|lcp|, and 0 for equal sequences (equal entries and equal
/// finite/extending intent at the stored depth).
inline Rational ultrametric_distance(const StateSequence& x, const StateSequence& y) {
    std::size_t lcp = 0;
    while (lcp < x.size() && lcp < y.size() && x.states[lcp] == y.states[lcp]) ++lcp;
    if (lcp == x.size() && lcp == y.size() && x.extends == y.extends) return Rational(0);
    return pow2(-static_cast<long>(lcp));
}

/// delta(q, r) = sgn(pi(q, r)); terminal predicates coincide.
inline BooleanTransitionSystem induced_boolean(const ProbabilisticTransitionSystem& sys) {
    return BooleanTransitionSystem(
        [sys](const StateId& q, const StateId& r) { return sgn(sys.pi(q, r)) > 0; },
        [sys](const StateId& q) { return sys.terminal(q); });
}

/// mu(x) = sigma(x_0) * prod pi(x_i, x_{i+1}); the empty sequence has measure 1.
/// Non-admissible sequences simply evaluate to 0.
inline Rational mu_state(const ProbabilisticTransitionSystem& sys, const Initialization& init,
                         const StateSequence& x) {
    if (x.empty()) return Rational(1);
    Rational m = init.weight(x.states[0]);
    for (std::size_t i = 0; i + 1 < x.size() && sgn(m) != 0; ++i)
        m *= sys.pi(x.states[i], x.states[i + 1]);
    return m;
}

// ---------------------------------------------------------------------------
// Rate-free chemical reaction networks as Boolean transition systems.
// ---------------------------------------------------------------------------

/// A rate-free reaction: reactant and product count vectors over a fixed
/// species ordering.
struct RateFreeReaction {
    std::vector<unsigned long> reactants;
    std::vector<unsigned long> products;
};

inline std::optional<std::vector<unsigned long>> parse_count_state(
    const std::vector<std::string>& names, const StateId& q) {
    std::vector<unsigned long> counts(names.size(), 0);
    std::size_t pos = 0;
    const std::string& s = q.id;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string prefix = names[i] + ':';
        if (s.compare(pos, prefix.size(), prefix) != 0) return std::nullopt;
        pos += prefix.size();
        std::size_t end = s.find(',', pos);
        if (end == std::string::npos) end = s.size();
        std::string digits = s.substr(pos, end - pos);
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
            return std::nullopt;
        try {
            counts[i] = std::stoul(digits);
        } catch (...) {
            return std::nullopt;
        }
        pos = end + (end < s.size() ? 1 : 0);
    }
    if (pos != s.size()) return std::nullopt;
    return counts;
}

/// Applicability: q(Y) >= r(Y) for every species Y.
inline bool reaction_applicable(const RateFreeReaction& rho, const std::vector<unsigned long>& q) {
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] < rho.reactants[i]) return false;
    return true;
}

inline std::vector<unsigned long> apply_reaction(const RateFreeReaction& rho,
                                                 const std::vector<unsigned long>& q) {
    std::vector<unsigned long> out(q);
    for (std::size_t i = 0; i < q.size(); ++i)
        out[i] = out[i] - rho.reactants[i] + rho.products[i];
    return out;
}

/// States are species-count vectors; delta(q, q') holds iff some reaction with
/// reactants present in q has net effect q' - q. Every state has finitely many
/// successors, so terminality is decided by exhaustive applicability.
inline BooleanTransitionSystem ratefree_crn_to_boolean(std::vector<std::string> species,
                                                       std::vector<RateFreeReaction> reactions) {
    if (!std::is_sorted(species.begin(), species.end()))
        throw std::invalid_argument("species must be given in sorted order");
    for (const auto& rho : reactions) {
        if (rho.reactants.size() != species.size() || rho.products.size() != species.size())
            throw std::invalid_argument("reaction vectors must match the species list");
        if (rho.reactants == rho.products)
            throw std::invalid_argument("reaction with identical reactant and product vectors");
    }
    auto data = std::make_shared<std::pair<std::vector<std::string>, std::vector<RateFreeReaction>>>(
        std::move(species), std::move(reactions));
    auto delta = [data](const StateId& q, const StateId& r) {
        auto qc = parse_count_state(data->first, q);
        auto rc = parse_count_state(data->first, r);
        if (!qc || !rc) return false;
        for (const auto& rho : data->second)
            if (reaction_applicable(rho, *qc) && apply_reaction(rho, *qc) == *rc) return true;
        return false;
    };
    auto terminal = [data](const StateId& q) {
        auto qc = parse_count_state(data->first, q);
        if (!qc) return true;
        for (const auto& rho : data->second)
            if (reaction_applicable(rho, *qc)) return false;
        return true;
    };
    return BooleanTransitionSystem(std::move(delta), std::move(terminal));
}

// ---------------------------------------------------------------------------
// Text table format: `q -> r : p/q` transition lines and `init q : p/q` lines.
// ---------------------------------------------------------------------------

struct TransitionTable {
    std::map<StateId, ProbabilisticTransitionSystem::Row> rows;
    Initialization init;
    std::vector<StateId> states;  // insertion order of first appearance

    ProbabilisticTransitionSystem system() const {
        auto rows_copy = std::make_shared<std::map<StateId, ProbabilisticTransitionSystem::Row>>(rows);
        return ProbabilisticTransitionSystem([rows_copy](const StateId& q) {
            auto it = rows_copy->find(q);
            return it == rows_copy->end() ? ProbabilisticTransitionSystem::Row{} : it->second;
        });
    }
};

namespace detail {
inline std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
}  // namespace detail

inline TransitionTable parse_transition_table(const std::string& text) {
    TransitionTable table;
    auto note_state = [&table](const StateId& q) {
        if (std::find(table.states.begin(), table.states.end(), q) == table.states.end())
            table.states.push_back(q);
    };
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = detail::strip(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("init", 0) == 0) {
            auto colon = line.find(':');
            if (colon == std::string::npos) throw ParseError("expected ':' in init line", lineno, line.size());
            std::string name = detail::strip(line.substr(4, colon - 4));
            if (name.empty()) throw ParseError("missing state in init line", lineno, 5);
            if (name.find('/') != std::string::npos)
                throw ParseError("state names may not contain '/'", lineno, 5);
            Rational w = parse_rational(detail::strip(line.substr(colon + 1)), lineno, colon + 2);
            table.init.support.emplace_back(StateId{name}, w);
            note_state({name});
            continue;
        }
        auto arrow = line.find("->");
        if (arrow == std::string::npos) throw ParseError("expected '->' in transition line", lineno, 1);
        auto colon = line.find(':', arrow + 2);
        if (colon == std::string::npos) throw ParseError("expected ':' in transition line", lineno, arrow + 3);
        std::string from = detail::strip(line.substr(0, arrow));
        std::string to = detail::strip(line.substr(arrow + 2, colon - arrow - 2));
        if (from.empty() || to.empty()) throw ParseError("missing state name", lineno, 1);
        if (from.find('/') != std::string::npos || to.find('/') != std::string::npos)
            throw ParseError("state names may not contain '/'", lineno, 1);
        if (from == to) throw ParseError("self-loop transition is not allowed", lineno, 1);
        Rational w = parse_rational(detail::strip(line.substr(colon + 1)), lineno, colon + 2);
        if (sgn(w) <= 0) throw ParseError("transition weight must be > 0", lineno, colon + 2);
        auto& row = table.rows[{from}];
        for (const auto& [r, _] : row)
            if (r.id == to) throw ParseError("duplicate transition edge", lineno, 1);
        row.emplace_back(StateId{to}, w);
        note_state({from});
        note_state({to});
    }
    table.init.validate();
    for (const auto& [q, row] : table.rows) {
        Rational sum(0);
        for (const auto& [r, w] : row) sum += w;
        if (sum != 1)
            throw ParseError("row for state '" + q.id + "' sums to " + rational_str(sum) +
                                 ", expected 1", lineno, 1);
    }
    return table;
}

inline std::string render_transition_table(const TransitionTable& table) {
    std::ostringstream os;
    for (const auto& [q, w] : table.init.support)
        os << "init " << q.id << " : " << rational_str(w) << '\n';
    for (const auto& [q, row] : table.rows)
        for (const auto& [r, w] : row)
            os << q.id << " -> " << r.id << " : " << rational_str(w) << '\n';
    return os.str();
}

}  // namespace ctrand
