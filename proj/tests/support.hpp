#pragma once

// Shared test fixtures: deterministic random-model and random-strategy
// generators, statistical helpers, and small hand-built models.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ctrand/ctrand.hpp"

namespace testsup {

using namespace ctrand;

// ---------------------------------------------------------------------------
// Hand-built models.
// ---------------------------------------------------------------------------

/// Finite rate-table CTMC for tests.
inline CtmcModel table_ctmc(std::map<std::string, std::vector<std::pair<std::string, Rational>>> rates,
                            std::vector<std::pair<std::string, Rational>> init,
                            const std::string& tag) {
    auto data = std::make_shared<const std::map<std::string, std::vector<std::pair<std::string, Rational>>>>(
        std::move(rates));
    Initialization sigma;
    for (auto& [name, w] : init) sigma.support.emplace_back(StateId{name}, w);
    return CtmcModel(
        [data](const StateId& q) {
            CtmcModel::RateRow row;
            if (auto it = data->find(q.id); it != data->end())
                for (const auto& [r, rate] : it->second) row.emplace_back(StateId{r}, rate);
            return row;
        },
        std::move(sigma), fnv1a64_hex(tag));
}

/// Two-state deterministic-jump loop a -> b -> a with unit rates.
inline CtmcModel two_state_loop() {
    return table_ctmc({{"a", {{"b", Rational(1)}}}, {"b", {{"a", Rational(1)}}}},
                      {{"a", Rational(1)}}, "two_state_loop");
}

/// a -> b with b terminal.
inline CtmcModel terminal_chain() {
    return table_ctmc({{"a", {{"b", Rational(1)}}}}, {{"a", Rational(1)}}, "terminal_chain");
}

// ---------------------------------------------------------------------------
// Deterministic random models (<= 4 states, rational rates, mixed terminals).
// ---------------------------------------------------------------------------

inline CtmcModel random_model(SplitMix64& gen) {
    std::size_t n = 2 + gen() % 3;  // 2..4 states
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
    std::map<std::string, std::vector<std::pair<std::string, Rational>>> rates;
    for (std::size_t i = 0; i < n; ++i) {
        if (gen() % 4 == 0) continue;  // terminal state
        std::vector<std::pair<std::string, Rational>> row;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (gen() % 3 == 0) continue;  // missing edge
            Rational rate = make_rational(1 + static_cast<long>(gen() % 6),
                                          1 + static_cast<long>(gen() % 4));
            row.emplace_back(names[j], rate);
        }
        if (!row.empty()) rates[names[i]] = std::move(row);
    }
    // initialization over a random nonempty support, normalized exactly
    std::vector<std::pair<std::string, Rational>> init;
    Rational total(0);
    for (std::size_t i = 0; i < n; ++i) {
        if (gen() % 2 == 0 && !(init.empty() && i + 1 == n)) continue;
        Rational w = Rational(1 + static_cast<long>(gen() % 5));
        init.emplace_back(names[i], w);
        total += w;
    }
    for (auto& [_, w] : init) w /= total;
    static std::uint64_t counter = 0;
    return table_ctmc(std::move(rates), std::move(init), "random-" + std::to_string(++counter));
}

// ---------------------------------------------------------------------------
// Random exactly-fair strategies (finite bet trees over the canonical
// extension tree; hedged below the tree depth).
// ---------------------------------------------------------------------------

inline std::string word_key(const StateWord& w) {
    std::string k;
    for (const auto& q : w) {
        k += q.id;
        k += '/';
    }
    return k;
}

/// Random fair strategy in product form: a state-word multiplier tree times a
/// per-position bit-multiplier tree keyed by the state word through that
/// position. Product form keeps the weighted capital d(w) mu(w) additive under
/// refinement at every position (not only the last pair), which the
/// cover/Kraft machinery relies on; conditions (A)/(B) alone do not give that.
struct BetTree {
    // state-word prefix -> next state -> multiplier (sum s_q p(last,q) = 1)
    std::map<std::string, std::map<std::string, Rational>> state_mult;
    // (state word through position i) + '|' + bit prefix -> per-branch
    // multipliers with (m0 + m1)/2 = 1 (sure-thing branch at terminals)
    std::map<std::string, std::array<Rational, 2>> bit_step;
    Rational initial = Rational(1);
};

inline std::shared_ptr<BetTree> random_bet_tree(const CtmcModel& c, SplitMix64& gen,
                                                std::size_t word_depth, std::size_t bit_depth) {
    auto tree = std::make_shared<BetTree>();
    std::deque<StateWord> queue;
    queue.push_back({});
    while (!queue.empty()) {
        StateWord word = std::move(queue.front());
        queue.pop_front();
        std::vector<std::pair<StateId, Rational>> ext;
        if (word.empty())
            for (const auto& [q, w] : c.init().support) ext.emplace_back(q, w);
        else if (!c.terminal(word.back()))
            ext = c.jump_row(word.back());
        if (!ext.empty()) {
            std::vector<Rational> draws(ext.size());
            Rational z(0);
            for (std::size_t i = 0; i < ext.size(); ++i) {
                draws[i] = Rational(static_cast<long>(gen() % 4));  // may be zero
                z += draws[i] * ext[i].second;
            }
            if (sgn(z) == 0) {
                for (auto& d : draws) d = Rational(1);
                z = Rational(1);  // sum p_q = 1
            }
            auto& row = tree->state_mult[word_key(word)];
            for (std::size_t i = 0; i < ext.size(); ++i)
                row[ext[i].first.id] = Rational(draws[i] / z);
        }
        if (!word.empty()) {
            // bit tree for the sojourn at the last position of this word
            bool terminal = c.terminal(word.back());
            std::deque<std::string> bits;
            bits.push_back("");
            while (!bits.empty()) {
                std::string u = std::move(bits.front());
                bits.pop_front();
                std::array<Rational, 2> step;
                if (terminal) {
                    step[0] = Rational(static_cast<long>(gen() % 3));  // measure-zero branch
                    step[1] = Rational(1);
                } else {
                    Rational m0 = make_rational(static_cast<long>(gen() % 5), 2);  // 0..2 by halves
                    step = {m0, Rational(2) - m0};
                }
                tree->bit_step[word_key(word) + '|' + u] = step;
                if (u.size() + 1 < bit_depth) {
                    if (!terminal) bits.push_back(u + '0');
                    bits.push_back(u + '1');
                }
            }
        }
        if (word.size() < word_depth)
            for (const auto& [q, _] : ext) {
                StateWord next = word;
                next.push_back(q);
                queue.push_back(std::move(next));
            }
    }
    return tree;
}

inline TrajectoryMartingale bet_tree_martingale(std::shared_ptr<BetTree> tree) {
    return {"random-bet-tree",
            [tree](const TrajectorySpec& w) -> Rational {
                Rational capital = tree->initial;
                StateWord word;
                for (const auto& pair : w.pairs) {
                    if (auto it = tree->state_mult.find(word_key(word)); it != tree->state_mult.end()) {
                        auto sm = it->second.find(pair.state.id);
                        // states outside the stored row (measure zero) hedge
                        if (sm != it->second.end()) capital *= sm->second;
                    }
                    word.push_back(pair.state);
                    std::string prefix;
                    for (char b : pair.bits) {
                        auto step = tree->bit_step.find(word_key(word) + '|' + prefix);
                        if (step != tree->bit_step.end())
                            capital *= step->second[b == '1' ? 1 : 0];
                        prefix.push_back(b);
                    }
                }
                return capital;
            },
            nullptr};
}

/// Random fair state strategy: multiplier tree over admissible words.
struct StateBetTree {
    std::map<std::string, std::map<std::string, Rational>> mult;  // word key -> next state -> s
};

inline StateMartingale random_state_martingale(const ProbabilisticTransitionSystem& sys,
                                               const Initialization& init, SplitMix64& gen,
                                               std::size_t depth) {
    auto tree = std::make_shared<StateBetTree>();
    std::deque<StateWord> queue;
    queue.push_back({});
    while (!queue.empty()) {
        StateWord w = std::move(queue.front());
        queue.pop_front();
        std::vector<std::pair<StateId, Rational>> ext;
        if (w.empty())
            for (const auto& [q, wt] : init.support) ext.emplace_back(q, wt);
        else if (!sys.terminal(w.back()))
            ext = sys.successors(w.back());
        if (ext.empty()) continue;
        std::vector<Rational> draws(ext.size());
        Rational z(0);
        for (std::size_t i = 0; i < ext.size(); ++i) {
            draws[i] = Rational(static_cast<long>(gen() % 4));
            z += draws[i] * ext[i].second;
        }
        if (sgn(z) == 0) {
            for (auto& d : draws) d = Rational(1);
            z = Rational(1);
        }
        auto& row = tree->mult[word_key(w)];
        for (std::size_t i = 0; i < ext.size(); ++i) row[ext[i].first.id] = Rational(draws[i] / z);
        if (w.size() < depth)
            for (const auto& [q, _] : ext) {
                StateWord next = w;
                next.push_back(q);
                queue.push_back(std::move(next));
            }
    }
    return {"random-state-tree", [tree](const StateWord& w) -> Rational {
                Rational capital(1);
                StateWord cur;
                for (const auto& q : w) {
                    auto it = tree->mult.find(word_key(cur));
                    cur.push_back(q);
                    if (it == tree->mult.end()) continue;
                    auto m = it->second.find(q.id);
                    if (m != it->second.end()) capital *= m->second;
                }
                return capital;
            }};
}

// ---------------------------------------------------------------------------
// Statistical helpers.
// ---------------------------------------------------------------------------

/// Upper critical value of the Kolmogorov distribution at significance alpha,
/// from the asymptotic series Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_critical(double alpha) {
    auto q = [](double x) {
        double s = 0;
        for (int k = 1; k <= 100; ++k) s += (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
        return 2 * s;
    };
    double lo = 0.2, hi = 3.0;
    for (int i = 0; i < 200; ++i) {
        double mid = (lo + hi) / 2;
        (q(mid) > alpha ? lo : hi) = mid;
    }
    return (lo + hi) / 2;
}

/// One-sample KS statistic against a CDF given as a callable.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
    std::sort(samples.begin(), samples.end());
    double n = static_cast<double>(samples.size());
    double d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - (static_cast<double>(i) + 1) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    return d;
}

/// chi^2 upper quantile by bisection on the regularized gamma CDF
/// (Wilson-Hilferty start, then series/continued-fraction evaluation).
inline double chi2_cdf(double x, double k) {
    // regularized lower incomplete gamma P(k/2, x/2)
    double a = k / 2, z = x / 2;
    if (z <= 0) return 0;
    if (z < a + 1) {
        double term = 1.0 / a, sum = term;
        for (int n = 1; n < 500; ++n) {
            term *= z / (a + n);
            sum += term;
            if (term < sum * 1e-16) break;
        }
        return sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
    }
    // continued fraction for Q(a, z)
    double b = z + 1 - a, c = 1e300, d = 1 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1) < 1e-16) break;
    }
    double q = std::exp(-z + a * std::log(z) - std::lgamma(a)) * h;
    return 1 - q;
}

inline double chi2_quantile(double p, double k) {
    double lo = 0, hi = 1000;
    for (int i = 0; i < 200; ++i) {
        double mid = (lo + hi) / 2;
        (chi2_cdf(mid, k) < p ? lo : hi) = mid;
    }
    return (lo + hi) / 2;
}

}  // namespace testsup
