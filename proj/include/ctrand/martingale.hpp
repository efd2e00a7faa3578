#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctrand/ctmc.hpp"
#include "ctrand/rational.hpp"
#include "ctrand/sojourn.hpp"
#include "ctrand/transition.hpp"

namespace ctrand {

using StateWord = std::vector<StateId>;

/// Betting strategy over state words (the embedded-chain calculus).
struct StateMartingale {
    std::string name;
    std::function<Rational(const StateWord&)> value;

    Rational initial() const { return value({}); }
};

/// Betting strategy over approximation tuples (the duration calculus).
struct DurationMartingale {
    std::string name;
    std::function<Rational(const BitTuple&)> value;

    Rational initial() const { return value({}); }
};

/// Betting strategy over trajectory specifications. Values are exact
/// rationals; `value_at_stage`, when present, realizes the staged
/// lower-semicomputation contract (nondecreasing in the stage, converging to
/// `value`). Exact constructions return their final value at stage 0.
struct TrajectoryMartingale {
    std::string name;
    std::function<Rational(const TrajectorySpec&)> value;
    std::function<Rational(const TrajectorySpec&, unsigned)> value_at_stage;

    Rational initial() const { return value({}); }
    Rational at_stage(const TrajectorySpec& w, unsigned stage) const {
        return value_at_stage ? value_at_stage(w, stage) : value(w);
    }
};

// ---------------------------------------------------------------------------
// Fairness verification.
// ---------------------------------------------------------------------------

struct VerifyOptions {
    /// Enumeration bound on spec size (#pairs + total bits; sequence length
    /// for the state calculus; #components + total bits for tuples).
    std::size_t depth = 6;
    std::size_t max_nodes = 1'000'000;
};

struct FairnessReport {
    std::size_t nodes_checked = 0;
    std::size_t violations = 0;
    Rational max_abs_residual = Rational(0);
    std::string worst;
    bool exact = true;

    bool pass() const { return violations == 0; }

    void record(const Rational& residual, const std::string& where) {
        Rational mag = abs(residual);
        if (sgn(mag) != 0) {
            ++violations;
            if (mag > max_abs_residual) {
                max_abs_residual = mag;
                worst = where;
            }
        }
    }
};

/// Checks d(x) mu(x) = sum over one-step admissible extensions y of
/// d(y) mu(y), at every non-terminating admissible x up to the depth bound.
inline FairnessReport verify_state_fairness(const StateMartingale& d,
                                            const ProbabilisticTransitionSystem& sys,
                                            const Initialization& init,
                                            const VerifyOptions& opts = {}) {
    FairnessReport report;
    struct Frame {
        StateWord word;
        Rational measure;
    };
    std::deque<Frame> queue;
    queue.push_back({{}, Rational(1)});
    while (!queue.empty()) {
        Frame f = std::move(queue.front());
        queue.pop_front();
        if (++report.nodes_checked > opts.max_nodes)
            throw BudgetExceeded("state fairness enumeration exceeded node budget");
        std::vector<std::pair<StateId, Rational>> ext;
        if (f.word.empty()) {
            for (const auto& [q, wgt] : init.support) ext.emplace_back(q, wgt);
        } else if (!sys.terminal(f.word.back())) {
            for (const auto& [q, p] : sys.successors(f.word.back()))
                ext.emplace_back(q, f.measure * p);
        } else {
            continue;  // terminating sequence: no fairness constraint
        }
        Rational rhs(0);
        for (const auto& [q, m] : ext) {
            StateWord y = f.word;
            y.push_back(q);
            Rational v = d.value(y);
            if (sgn(v) < 0) report.record(v, "negative capital");
            rhs += v * m;
        }
        std::ostringstream where;
        for (const auto& q : f.word) where << q.id << ' ';
        report.record(d.value(f.word) * f.measure - rhs, where.str());
        if (f.word.size() < opts.depth)
            for (auto& [q, m] : ext) {
                StateWord y = f.word;
                y.push_back(q);
                queue.push_back({std::move(y), m});
            }
    }
    return report;
}

/// Checks the two duration-martingale conditions over all tuples within the
/// size bound: the last component's bit extension averages to the parent, and
/// appending an empty component does not change the value.
inline FairnessReport verify_duration_fairness(const DurationMartingale& d,
                                               const RateSequence& rates,
                                               const VerifyOptions& opts = {}) {
    FairnessReport report;
    auto betting_len = [&rates](std::size_t n) {
        // tuples in the martingale domain have length < |lambda|
        auto len = rates.length();
        return !len || n < *len;
    };
    std::deque<BitTuple> queue;
    queue.push_back({});
    while (!queue.empty()) {
        BitTuple w = std::move(queue.front());
        queue.pop_front();
        if (++report.nodes_checked > opts.max_nodes)
            throw BudgetExceeded("duration fairness enumeration exceeded node budget");
        std::ostringstream where;
        for (const auto& u : w) where << '[' << u << ']';
        if (!w.empty()) {
            BitTuple w0 = w, w1 = w;
            w0.back().push_back('0');
            w1.back().push_back('1');
            report.record(d.value(w) - (d.value(w0) + d.value(w1)) / 2, where.str() + " bit-avg");
        }
        if (betting_len(w.size() + 1)) {
            BitTuple wl = w;
            wl.emplace_back();
            report.record(d.value(wl) - d.value(w), where.str() + " no-bet-extension");
        }
        std::size_t weight = w.size() + total_bits(w);
        if (weight < opts.depth) {
            if (!w.empty()) {
                BitTuple w0 = w, w1 = w;
                w0.back().push_back('0');
                w1.back().push_back('1');
                queue.push_back(std::move(w0));
                queue.push_back(std::move(w1));
            }
            if (betting_len(w.size() + 1)) {
                BitTuple wl = w;
                wl.emplace_back();
                queue.push_back(std::move(wl));
            }
        }
    }
    return report;
}

namespace detail {

/// One enumerated node of the reachable-spec tree with its exact measure.
struct SpecNode {
    TrajectorySpec spec;
    Rational measure;
};

/// Children of a positive-measure spec. State extensions append (q, "") for
/// every positive-probability next state (or the initial support at the
/// root); bit extensions split the last pair's cell. At a terminal last state
/// the whole mass sits on the '1' bit and there are no state extensions.
template <typename StateFn, typename BitFn>
void for_each_child(const CtmcModel& c, const SpecNode& node, StateFn on_state, BitFn on_bit) {
    if (node.spec.empty()) {
        for (const auto& [q, wgt] : c.init().support)
            on_state(node.spec.with_pair(q), Rational(wgt));
    } else {
        const StateId& last = node.spec.pairs.back().state;
        if (!c.terminal(last)) {
            for (const auto& [q, p] : c.jump_row(last))
                on_state(node.spec.with_pair(q), node.measure * p);
            on_bit(node.spec.with_bit('0'), node.measure / 2);
            on_bit(node.spec.with_bit('1'), node.measure / 2);
        } else {
            on_bit(node.spec.with_bit('0'), Rational(0));
            on_bit(node.spec.with_bit('1'), node.measure);
        }
    }
}

}  // namespace detail

/// Checks fairness condition (A) (state extension) at the empty spec and at
/// every reachable spec whose last state is nonterminal, and condition (B)
/// (bit extension of the last pair) at every reachable nonempty spec, over
/// specs of size (#pairs + total bits) at most opts.depth. Residuals are
/// exact; zero-measure branches are unconstrained and are not descended.
inline FairnessReport verify_trajectory_fairness(const TrajectoryMartingale& d,
                                                 const CtmcModel& c,
                                                 const VerifyOptions& opts = {}) {
    FairnessReport report;
    std::deque<detail::SpecNode> queue;
    queue.push_back({TrajectorySpec{}, Rational(1)});
    while (!queue.empty()) {
        detail::SpecNode node = std::move(queue.front());
        queue.pop_front();
        if (++report.nodes_checked > opts.max_nodes)
            throw BudgetExceeded("trajectory fairness enumeration exceeded node budget");
        const Rational dw = d.value(node.spec);
        if (sgn(dw) < 0) report.record(dw, "negative capital at " + render_spec(node.spec));
        Rational state_rhs(0);
        Rational bit_rhs(0);
        bool has_state_children = node.spec.empty() || !c.terminal(node.spec.pairs.back().state);
        std::vector<detail::SpecNode> descend;
        detail::for_each_child(
            c, node,
            [&](TrajectorySpec child, Rational m) {
                state_rhs += d.value(child) * m;
                if (sgn(m) != 0) descend.push_back({std::move(child), std::move(m)});
            },
            [&](TrajectorySpec child, Rational m) {
                if (sgn(m) != 0) {
                    bit_rhs += d.value(child) * m;
                    descend.push_back({std::move(child), std::move(m)});
                }
            });
        const std::string where = render_spec(node.spec);
        if (has_state_children)
            report.record(dw * node.measure - state_rhs, where + " (A)");
        if (!node.spec.empty())
            report.record(dw * node.measure - bit_rhs, where + " (B)");
        if (node.spec.weight() < opts.depth)
            for (auto& child : descend) queue.push_back(std::move(child));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Named constructions.
// ---------------------------------------------------------------------------

inline TrajectoryMartingale constant_martingale(Rational capital) {
    if (sgn(capital) < 0) throw std::invalid_argument("capital must be nonnegative");
    return {"constant:c=" + rational_str(capital),
            [capital](const TrajectorySpec&) { return capital; },
            nullptr};
}

/// d_k(w) = sum_n mu(g(k,n) /\ w) / mu(w) over the stored row k. Succeeds
/// (capital >= 1) on every covered cylinder; staged evaluation sums ever
/// longer partial rows, realizing the lower-semicomputation contract.
inline TrajectoryMartingale cover_to_martingale(const CtmcModel& c, const NullCoverPrefix& cover,
                                                unsigned k) {
    auto it = cover.rows.find(k);
    if (it == cover.rows.end())
        throw std::invalid_argument("cover has no stored row k=" + std::to_string(k));
    auto row = std::make_shared<const std::vector<TrajectorySpec>>(it->second);
    auto partial = [c, row](const TrajectorySpec& w, std::size_t count) -> Rational {
        Rational mw = mu_traj(c, w);
        if (sgn(mw) == 0)
            throw std::invalid_argument("cover martingale evaluated at a measure-zero spec");
        Rational num(0);
        for (std::size_t n = 0; n < std::min(count, row->size()); ++n)
            if (auto m = meet((*row)[n], w)) num += mu_traj(c, *m);
        return Rational(num / mw);
    };
    return {"cover:k=" + std::to_string(k),
            [partial, row](const TrajectorySpec& w) { return partial(w, row->size()); },
            [partial](const TrajectorySpec& w, unsigned stage) { return partial(w, stage + 1); }};
}

namespace detail {

/// Canonical construction chain of a spec: pairs are appended left to right
/// and bits are appended to the pair being built. Every spec has exactly one
/// such chain from the empty spec.
inline std::vector<TrajectorySpec> canonical_chain(const TrajectorySpec& w) {
    std::vector<TrajectorySpec> chain;
    TrajectorySpec cur;
    chain.push_back(cur);
    for (const auto& pair : w.pairs) {
        cur.pairs.push_back({pair.state, ""});
        chain.push_back(cur);
        for (char b : pair.bits) {
            cur.pairs.back().bits.push_back(b);
            chain.push_back(cur);
        }
    }
    return chain;
}

}  // namespace detail

/// Follows the base strategy until its capital first reaches the threshold
/// along the canonical chain, then freezes.
inline TrajectoryMartingale savings_martingale(const TrajectoryMartingale& base,
                                               Rational threshold = Rational(1)) {
    auto eval = [base, threshold](const TrajectorySpec& w) {
        Rational cur(0);
        bool first = true;
        for (const auto& prefix : detail::canonical_chain(w)) {
            if (first) {
                cur = base.value(prefix);
                first = false;
            } else if (cur < threshold) {
                cur = base.value(prefix);
            }
        }
        return cur;
    };
    return {"savings(" + base.name + ")", eval, nullptr};
}

/// Pointwise weighted sum of finitely many strategies (the finite truncation
/// of the countable-sum construction).
inline TrajectoryMartingale sum_martingales(
    std::vector<std::pair<TrajectoryMartingale, Rational>> parts) {
    for (const auto& [d, wgt] : parts)
        if (sgn(wgt) < 0) throw std::invalid_argument("sum weights must be nonnegative");
    auto shared = std::make_shared<const std::vector<std::pair<TrajectoryMartingale, Rational>>>(
        std::move(parts));
    std::ostringstream name;
    name << "sum[" << shared->size() << "]";
    return {name.str(),
            [shared](const TrajectorySpec& w) {
                Rational total(0);
                for (const auto& [d, wgt] : *shared) total += wgt * d.value(w);
                return total;
            },
            [shared](const TrajectorySpec& w, unsigned stage) {
                Rational total(0);
                for (const auto& [d, wgt] : *shared) total += wgt * d.at_stage(w, stage);
                return total;
            }};
}

/// Bets on states exactly as the given state strategy and hedges every
/// sojourn bet: capital on a spec equals the state strategy's capital on the
/// spec's state word.
inline TrajectoryMartingale lift_state_martingale(const StateMartingale& d_state) {
    return {"lift(" + d_state.name + ")",
            [d_state](const TrajectorySpec& w) {
                StateWord word;
                word.reserve(w.size());
                for (const auto& p : w.pairs) word.push_back(p.state);
                return d_state.value(word);
            },
            nullptr};
}

/// Hedges all state bets and all sojourn indices except n, applying the given
/// single-time bit strategy to index n's bits; initial capital 2^-n. A
/// terminal state at index n is hedged (its bit cell is forced).
inline TrajectoryMartingale sojourn_index_martingale(const CtmcModel& c,
                                                     const DurationMartingale& d_bits,
                                                     std::size_t n) {
    Rational base = pow2(-static_cast<long>(n));
    Rational norm = d_bits.value({});
    if (sgn(norm) <= 0)
        throw std::invalid_argument("single-time strategy must have positive initial capital");
    return {"sojourn:n=" + std::to_string(n),
            [c, d_bits, n, base, norm](const TrajectorySpec& w) -> Rational {
                if (w.size() <= n) return base;
                if (c.terminal(w.pairs[n].state)) return base;
                return Rational(base * d_bits.value({w.pairs[n].bits}) / norm);
            },
            nullptr};
}

namespace detail {
inline Rational first_bit_factor(const std::string& bits) {
    if (bits.empty()) return Rational(1);
    return bits[0] == '0' ? Rational(2) : Rational(0);
}
}  // namespace detail

/// Duration-kind strategy that doubles on a leading 0 of each of the first m
/// components, pays 0 on a leading 1, and hedges everywhere else.
inline DurationMartingale duration_first_bit_martingale(std::size_t m) {
    if (m < 1) throw std::invalid_argument("component count must be at least 1");
    return {"firstbit:m=" + std::to_string(m), [m](const BitTuple& w) {
                Rational capital(1);
                for (std::size_t i = 0; i < w.size() && i < m; ++i) {
                    capital *= detail::first_bit_factor(w[i]);
                    if (sgn(capital) == 0) break;
                }
                return capital;
            }};
}

/// The canonical fair single-time bettor: doubles when the first bit is 0.
inline DurationMartingale first_bit_doubler() {
    return {"firstbit0", [](const BitTuple& w) {
                Rational capital(1);
                for (const auto& u : w) capital *= detail::first_bit_factor(u);
                return capital;
            }};
}

/// Bets double-or-zero that the first encoded bit of every sojourn from index
/// i onward is 0 (the lower quantile half (0, ln2/lambda]); hedges all state
/// bets, all earlier sojourns, and terminal positions. Initial capital 1.
inline TrajectoryMartingale zeno_detector(const CtmcModel& c, std::size_t start_index) {
    return {"zeno:i=" + std::to_string(start_index),
            [c, start_index](const TrajectorySpec& w) {
                Rational capital(1);
                for (std::size_t j = start_index; j < w.size(); ++j) {
                    if (c.terminal(w.pairs[j].state)) continue;
                    capital *= detail::first_bit_factor(w.pairs[j].bits);
                    if (sgn(capital) == 0) break;
                }
                return capital;
            },
            nullptr};
}

// ---------------------------------------------------------------------------
// Martingale <-> cover conversions and the Kraft inequality.
// ---------------------------------------------------------------------------

/// Breadth-first search of the reachable spec tree for the first specs whose
/// capital reaches 2^k times the initial capital. Candidates are filtered, in
/// discovery order, to a pairwise-disjoint antichain. For a fair strategy the
/// result is Kraft-bounded: total measure at most 2^-k.
inline std::vector<TrajectorySpec> martingale_to_prefix_set(const CtmcModel& c,
                                                            const TrajectoryMartingale& d,
                                                            unsigned k,
                                                            const VerifyOptions& opts = {}) {
    const Rational threshold = pow2(static_cast<long>(k)) * d.initial();
    std::vector<TrajectorySpec> kept;
    std::deque<detail::SpecNode> queue;
    queue.push_back({TrajectorySpec{}, Rational(1)});
    std::size_t nodes = 0;
    while (!queue.empty()) {
        detail::SpecNode node = std::move(queue.front());
        queue.pop_front();
        if (++nodes > opts.max_nodes)
            throw BudgetExceeded("prefix-set search exceeded node budget");
        if (d.value(node.spec) >= threshold) {
            bool disjoint_from_kept = std::all_of(
                kept.begin(), kept.end(), [&](const TrajectorySpec& other) {
                    return spec_compare(node.spec, other) == SpecRelation::disjoint;
                });
            if (disjoint_from_kept) kept.push_back(node.spec);
            continue;  // first hit along this branch; do not descend
        }
        if (node.spec.weight() >= opts.depth) continue;
        detail::for_each_child(
            c, node,
            [&](TrajectorySpec child, Rational m) {
                if (sgn(m) != 0) queue.push_back({std::move(child), std::move(m)});
            },
            [&](TrajectorySpec child, Rational m) {
                if (sgn(m) != 0) queue.push_back({std::move(child), std::move(m)});
            });
    }
    return kept;
}

struct KraftResult {
    bool holds = false;
    Rational initial;
    Rational weighted_sum;

    Rational margin() const { return initial - weighted_sum; }
};

/// Checks d(empty) >= sum over B of d(w) mu(w), exactly. B must be an
/// antichain (pairwise disjoint specs); a failure for a fair strategy
/// indicates a fairness bug in d.
inline KraftResult kraft_check(const CtmcModel& c, const TrajectoryMartingale& d,
                               const std::vector<TrajectorySpec>& antichain) {
    for (std::size_t i = 0; i < antichain.size(); ++i)
        for (std::size_t j = i + 1; j < antichain.size(); ++j)
            if (spec_compare(antichain[i], antichain[j]) != SpecRelation::disjoint)
                throw std::invalid_argument("kraft_check requires a pairwise-disjoint antichain");
    KraftResult out;
    out.initial = d.initial();
    out.weighted_sum = Rational(0);
    for (const auto& w : antichain) {
        Rational m = mu_traj(c, w);
        if (sgn(m) != 0) out.weighted_sum += d.value(w) * m;
    }
    out.holds = out.initial >= out.weighted_sum;
    return out;
}

// ---------------------------------------------------------------------------
// Betting runs.
// ---------------------------------------------------------------------------

struct CapitalTrace {
    struct Step {
        TrajectorySpec spec;
        Rational capital;
    };
    std::vector<Step> steps;
    Rational max_capital = Rational(0);
    std::size_t argmax = 0;
    /// For each j with 2^j <= max capital, the first step index reaching 2^j.
    std::vector<std::pair<long, std::size_t>> threshold_crossings;

    bool succeeds_at(const Rational& alpha) const { return max_capital > alpha; }
};

/// The canonical event-level betting schedule refining an encoded trajectory
/// spec: prefixes of whole (state, bits) pairs.
inline std::vector<TrajectorySpec> make_event_schedule(const TrajectorySpec& target) {
    std::vector<TrajectorySpec> out;
    TrajectorySpec cur;
    out.push_back(cur);
    for (const auto& pair : target.pairs) {
        cur.pairs.push_back(pair);
        out.push_back(cur);
    }
    return out;
}

inline CapitalTrace run_martingale(const TrajectoryMartingale& d,
                                   const std::vector<TrajectorySpec>& schedule) {
    for (std::size_t i = 0; i + 1 < schedule.size(); ++i) {
        SpecRelation rel = spec_compare(schedule[i], schedule[i + 1]);
        if (rel != SpecRelation::w_prefixes_v && rel != SpecRelation::equal_overlap)
            throw std::invalid_argument("betting schedule is not a prefix-increasing chain");
    }
    CapitalTrace trace;
    for (const auto& w : schedule) {
        Rational capital = d.value(w);
        if (trace.steps.empty() || capital > trace.max_capital) {
            trace.max_capital = capital;
            trace.argmax = trace.steps.size();
        }
        trace.steps.push_back({w, std::move(capital)});
    }
    for (long j = 0; pow2(j) <= trace.max_capital; ++j) {
        Rational bar = pow2(j);
        for (std::size_t i = 0; i < trace.steps.size(); ++i)
            if (trace.steps[i].capital >= bar) {
                trace.threshold_crossings.emplace_back(j, i);
                break;
            }
    }
    return trace;
}

}  // namespace ctrand
