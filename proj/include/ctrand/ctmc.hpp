#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctrand/errors.hpp"
#include "ctrand/rational.hpp"
#include "ctrand/real.hpp"
#include "ctrand/sojourn.hpp"
#include "ctrand/transition.hpp"

namespace ctrand {

/// Countable-state CTMC: a finite-successor rate-row enumerator with exact
/// nonnegative rational rates (zero diagonal), plus an initial distribution.
/// The model fingerprint identifies the canonical source text in manifests.
class CtmcModel {
  public:
    using RateRow = std::vector<std::pair<StateId, Rational>>;
    using Enumerator = std::function<RateRow(const StateId&)>;

    CtmcModel(Enumerator rates, Initialization init, std::string fingerprint)
        : rates_(std::move(rates)), init_(std::move(init)), fingerprint_(std::move(fingerprint)) {
        init_.validate();
    }

    RateRow rate_row(const StateId& q) const {
        RateRow row = rates_(q);
        for (const auto& [r, rate] : row) {
            if (r == q) throw std::invalid_argument("rate matrix has a nonzero diagonal entry");
            if (sgn(rate) <= 0) throw std::invalid_argument("rate row entries must be > 0");
        }
        return row;
    }

    /// lambda_q = sum_r lambda(q, r); zero exactly for terminal states.
    Rational exit_rate(const StateId& q) const {
        Rational sum(0);
        for (const auto& [r, rate] : rate_row(q)) sum += rate;
        return sum;
    }

    bool terminal(const StateId& q) const { return rates_(q).empty(); }

    /// p(q, r) = lambda(q, r) / lambda_q; only defined for nonterminal q.
    Rational jump_prob(const StateId& q, const StateId& r) const {
        for (const auto& [s, p] : jump_row(q))
            if (s == r) return p;
        return Rational(0);
    }

    std::vector<std::pair<StateId, Rational>> jump_row(const StateId& q) const {
        RateRow row = rate_row(q);
        if (row.empty()) throw std::invalid_argument("jump probabilities undefined on a terminal state");
        Rational total(0);
        for (const auto& [r, rate] : row) total += rate;
        std::vector<std::pair<StateId, Rational>> out;
        out.reserve(row.size());
        for (const auto& [r, rate] : row) out.emplace_back(r, rate / total);
        return out;
    }

    Rate sojourn_rate(const StateId& q) const { return Rate::of(exit_rate(q)); }

    const Initialization& init() const { return init_; }
    const std::string& fingerprint() const { return fingerprint_; }

    /// The embedded jump chain: pi(q, r) = p(q, r), same terminals.
    ProbabilisticTransitionSystem embedded_chain() const {
        auto self = *this;
        return ProbabilisticTransitionSystem([self](const StateId& q) {
            if (self.terminal(q)) return ProbabilisticTransitionSystem::Row{};
            return self.jump_row(q);
        });
    }

  private:
    Enumerator rates_;
    Initialization init_;
    std::string fingerprint_;
};

inline Rational exit_rate(const CtmcModel& c, const StateId& q) { return c.exit_rate(q); }
inline Rational jump_prob(const CtmcModel& c, const StateId& q, const StateId& r) {
    return c.jump_prob(q, r);
}
inline ProbabilisticTransitionSystem embedded_chain(const CtmcModel& c) {
    return c.embedded_chain();
}

// ---------------------------------------------------------------------------
// Trajectory specifications (cylinder names).
// ---------------------------------------------------------------------------

struct SpecPair {
    StateId state;
    std::string bits;

    auto operator<=>(const SpecPair&) const = default;
};

/// A finite word in (Q x {0,1}*)*, naming the trajectory cylinder of all
/// trajectories whose i-th state is pairs[i].state and whose i-th sojourn
/// falls in the quantile cell of pairs[i].bits. Words naming empty cylinders
/// are legal and have measure 0.
struct TrajectorySpec {
    std::vector<SpecPair> pairs;

    auto operator<=>(const TrajectorySpec&) const = default;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }

    std::size_t total_bits() const {
        std::size_t n = 0;
        for (const auto& p : pairs) n += p.bits.size();
        return n;
    }

    /// Size of the canonical construction chain: pairs plus total bits.
    std::size_t weight() const { return size() + total_bits(); }

    TrajectorySpec with_pair(StateId q, std::string bits = "") const {
        TrajectorySpec out = *this;
        out.pairs.push_back({std::move(q), std::move(bits)});
        return out;
    }

    TrajectorySpec with_bit(char b) const {
        TrajectorySpec out = *this;
        out.pairs.back().bits.push_back(b);
        return out;
    }

    TrajectorySpec with_bit_at(std::size_t i, char b) const {
        TrajectorySpec out = *this;
        out.pairs.at(i).bits.push_back(b);
        return out;
    }
};

/// Spec text format: `state:bits` tokens joined by `/`; bits are the suffix
/// after the last colon of each token (state renderings may contain colons).
/// The empty spec renders as the empty string.
inline std::string render_spec(const TrajectorySpec& w) {
    std::ostringstream os;
    for (std::size_t i = 0; i < w.pairs.size(); ++i) {
        if (i) os << '/';
        os << w.pairs[i].state.id << ':' << w.pairs[i].bits;
    }
    return os.str();
}

inline TrajectorySpec parse_spec(const std::string& text) {
    TrajectorySpec w;
    if (text.empty()) return w;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('/', pos);
        if (end == std::string::npos) end = text.size();
        std::string token = text.substr(pos, end - pos);
        auto colon = token.rfind(':');
        if (colon == std::string::npos)
            throw ParseError("spec token '" + token + "' is missing ':'", 1, pos + 1);
        std::string state = token.substr(0, colon);
        std::string bits = token.substr(colon + 1);
        if (state.empty()) throw ParseError("spec token has an empty state", 1, pos + 1);
        validate_bits(bits);
        w.pairs.push_back({{state}, bits});
        if (end == text.size()) break;
        pos = end + 1;
    }
    return w;
}

/// Profile of a cylinder: the tuple of bit-string lengths.
using Profile = std::vector<std::size_t>;

inline Profile profile(const TrajectorySpec& w) {
    Profile p;
    p.reserve(w.size());
    for (const auto& pair : w.pairs) p.push_back(pair.bits.size());
    return p;
}

/// mu_C of the cylinder named by w. Case split: the empty word has measure 1;
/// a terminal state before the last position gives 0; with a terminal last
/// state the last bit factor is dropped and the bits there must be all ones
/// (the infinite sojourn sits in the all-ones quantile cell; anything else
/// names an empty cylinder); otherwise
///   sigma(q_0) * prod p(q_i, q_{i+1}) * prod 2^(-|u_i|).
inline Rational mu_traj(const CtmcModel& c, const TrajectorySpec& w) {
    const std::size_t n = w.size();
    if (n == 0) return Rational(1);
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (c.terminal(w.pairs[i].state)) return Rational(0);
    Rational m = c.init().weight(w.pairs[0].state);
    for (std::size_t i = 0; i + 1 < n && sgn(m) != 0; ++i)
        m *= c.jump_prob(w.pairs[i].state, w.pairs[i + 1].state);
    if (sgn(m) == 0) return m;
    const bool last_terminal = c.terminal(w.pairs[n - 1].state);
    if (last_terminal && !all_of_bit(w.pairs[n - 1].bits, '1')) return Rational(0);
    const std::size_t bit_positions = last_terminal ? n - 1 : n;
    long bits = 0;
    for (std::size_t i = 0; i < bit_positions; ++i)
        bits += static_cast<long>(w.pairs[i].bits.size());
    return m * pow2(-bits);
}

enum class SpecRelation { w_prefixes_v, v_prefixes_w, equal_overlap, disjoint };

inline bool bits_comparable(const std::string& a, const std::string& b) {
    const std::string& shorter = a.size() <= b.size() ? a : b;
    const std::string& longer = a.size() <= b.size() ? b : a;
    return longer.compare(0, shorter.size(), shorter) == 0;
}

/// Prefix/disjointness verdict. Two specs are comparable iff their states
/// agree and their bit strings are prefix-comparable on the common range;
/// incomparable specs name disjoint cylinders. Comparable specs of equal
/// length mutually prefix each other (equal_overlap), possibly without being
/// identical.
inline SpecRelation spec_compare(const TrajectorySpec& w, const TrajectorySpec& v) {
    const std::size_t m = std::min(w.size(), v.size());
    for (std::size_t i = 0; i < m; ++i) {
        if (w.pairs[i].state != v.pairs[i].state) return SpecRelation::disjoint;
        if (!bits_comparable(w.pairs[i].bits, v.pairs[i].bits)) return SpecRelation::disjoint;
    }
    if (w.size() < v.size()) return SpecRelation::w_prefixes_v;
    if (v.size() < w.size()) return SpecRelation::v_prefixes_w;
    return SpecRelation::equal_overlap;
}

/// Meet of two cylinder names: the componentwise-deeper spec (exactly the
/// cylinder intersection), or nothing when the cylinders are disjoint.
inline std::optional<TrajectorySpec> meet(const TrajectorySpec& w, const TrajectorySpec& v) {
    if (spec_compare(w, v) == SpecRelation::disjoint) return std::nullopt;
    const TrajectorySpec& longer = w.size() >= v.size() ? w : v;
    const TrajectorySpec& shorter = w.size() >= v.size() ? v : w;
    TrajectorySpec out = longer;
    for (std::size_t i = 0; i < shorter.size(); ++i)
        if (shorter.pairs[i].bits.size() > out.pairs[i].bits.size())
            out.pairs[i].bits = shorter.pairs[i].bits;
    return out;
}

// ---------------------------------------------------------------------------
// Trajectories.
// ---------------------------------------------------------------------------

struct TrajectoryEvent {
    StateId state;
    Duration sojourn;
    std::string bits;  // stored encoding of the sojourn, may be empty
};

/// Stored finite prefix of a trajectory. `terminated` means the last stored
/// event is at a terminal state (its sojourn is inf and nothing follows);
/// otherwise the store is a prefix of a longer trajectory.
struct Trajectory {
    std::vector<TrajectoryEvent> events;
    bool terminated = false;
    std::uint64_t seed = 0;
    std::uint64_t run_index = 0;
    std::string model_fingerprint;
    unsigned depth = 0;
};

/// Cylinder membership: states must match, and each sojourn must lie in the
/// quantile cell of its bit string under that position's exit rate. A spec
/// with a terminal state before its last position matches nothing.
inline bool spec_matches_trajectory(const CtmcModel& c, const TrajectorySpec& w,
                                    const Trajectory& tau, const PrecisionConfig& prec = {}) {
    const std::size_t n = w.size();
    if (n == 0) return true;
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (c.terminal(w.pairs[i].state)) return false;
    if (n > tau.events.size()) {
        if (tau.terminated) return false;  // the trajectory has ended; no further states exist
        throw std::invalid_argument("stored trajectory prefix is shorter than the spec");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (tau.events[i].state != w.pairs[i].state) return false;
        if (!approximates(c.sojourn_rate(w.pairs[i].state), w.pairs[i].bits,
                          tau.events[i].sojourn, prec))
            return false;
    }
    return true;
}

/// Canonical bridge from a trajectory to the cylinder language: states are
/// copied and each sojourn is encoded to the requested depth at that
/// position's exit rate (terminal positions emit all-ones bits).
inline TrajectorySpec encode_trajectory(const CtmcModel& c, const Trajectory& tau,
                                        const Profile& depths, const PrecisionConfig& prec = {}) {
    if (depths.size() > tau.events.size())
        throw std::invalid_argument("more encoding depths than stored trajectory events");
    TrajectorySpec w;
    for (std::size_t i = 0; i < depths.size(); ++i) {
        const auto& ev = tau.events[i];
        w.pairs.push_back({ev.state, encode_time(c.sojourn_rate(ev.state), ev.sojourn,
                                                 depths[i], prec)});
    }
    return w;
}

/// Self-information l(w) = -log2 mu_C(w); exact integer when the measure is a
/// power of two, an enclosure otherwise.
struct SelfInformation {
    std::optional<long> exact_bits;
    std::optional<Enclosure> enclosure;

    bool is_exact() const { return exact_bits.has_value(); }
};

inline SelfInformation self_information(const CtmcModel& c, const TrajectorySpec& w,
                                        const PrecisionConfig& prec = {}) {
    Rational m = mu_traj(c, w);
    if (sgn(m) == 0) throw std::invalid_argument("self-information of a measure-zero spec");
    if (auto e = dyadic_log2(m)) return {-*e, std::nullopt};
    Enclosure l = -log2(Enclosure::of_rational(m, prec.working));
    return {std::nullopt, std::move(l)};
}

// ---------------------------------------------------------------------------
// Constructive null-cover prefixes.
// ---------------------------------------------------------------------------

/// Finite truncation of a cover function g(k, l): for each stored k, a row of
/// specs whose measures must sum to at most 2^-k. Passing verification of a
/// truncation is necessary, not sufficient, for the infinite object.
struct NullCoverPrefix {
    std::map<unsigned, std::vector<TrajectorySpec>> rows;
};

struct CoverRowReport {
    unsigned k = 0;
    Rational sum;
    Rational bound;
    bool pass = false;

    Rational margin() const { return bound - sum; }
};

struct CoverReport {
    std::vector<CoverRowReport> rows;

    bool pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
    }
};

inline CoverReport verify_null_cover(const CtmcModel& c, const NullCoverPrefix& cover) {
    CoverReport report;
    for (const auto& [k, specs] : cover.rows) {
        CoverRowReport row;
        row.k = k;
        row.bound = pow2(-static_cast<long>(k));
        row.sum = Rational(0);
        for (const auto& w : specs) row.sum += mu_traj(c, w);
        row.pass = row.sum <= row.bound;
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace ctrand
